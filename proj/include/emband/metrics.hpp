#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "emband/errors.hpp"
#include "emband/types.hpp"

namespace emband {

// ROC-AUC in the rank formulation: over all positive/negative pairs,
// the fraction with score+ > score-, ties counting one half. Computed in
// O(n log n) via average ranks.
template <typename Scalar>
Scalar roc_auc(const Eigen::Ref<const VectorX<Scalar>>& scores,
               const Eigen::Ref<const VectorX<Scalar>>& labels) {
  const Index n = scores.size();
  if (labels.size() != n) throw DimensionMismatch("scores and labels differ in length");
  if (n < 2) throw DegenerateError("need at least one positive and one negative label");

  Index positives = 0;
  for (Index i = 0; i < n; ++i) {
    if (labels[i] != Scalar(0) && labels[i] != Scalar(1))
      throw LabelDomainError("label at position " + std::to_string(i) + " is not 0/1");
    if (labels[i] == Scalar(1)) ++positives;
  }
  const Index negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw DegenerateError("labels are all equal; AUC undefined");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] < scores[b]; });

  // Average rank over each tie run; accumulate ranks of positives.
  double positive_rank_sum = 0.0;
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && scores[order[static_cast<std::size_t>(j + 1)]] ==
                            scores[order[static_cast<std::size_t>(i)]])
      ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
    for (Index k = i; k <= j; ++k)
      if (labels[order[static_cast<std::size_t>(k)]] == Scalar(1)) positive_rank_sum += avg_rank;
    i = j + 1;
  }
  const double p = static_cast<double>(positives);
  const double auc = (positive_rank_sum - p * (p + 1.0) / 2.0) /
                     (p * static_cast<double>(negatives));
  return Scalar(auc);
}

template <typename Scalar>
struct MacroAucResult {
  Scalar value;
  int skipped_tags;  // tags with only one class present
};

// Unweighted mean of per-tag AUC over tags where both classes appear.
template <typename Scalar>
MacroAucResult<Scalar> macro_auc(const Eigen::Ref<const MatrixX<Scalar>>& scores,
                                 const Eigen::Ref<const MatrixX<Scalar>>& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols())
    throw DimensionMismatch("score and label matrices differ in shape");
  if (scores.cols() < 1) throw DimensionMismatch("need at least one tag");

  Scalar total = Scalar(0);
  int used = 0, skipped = 0;
  for (Index t = 0; t < scores.cols(); ++t) {
    const Scalar first = labels(0, t);
    bool constant = true;
    for (Index i = 1; i < labels.rows() && constant; ++i) constant = labels(i, t) == first;
    if (constant) {
      ++skipped;
      continue;
    }
    total += roc_auc<Scalar>(scores.col(t), labels.col(t));
    ++used;
  }
  if (used == 0) throw DegenerateError("no tag has both classes present");
  return {total / Scalar(used), skipped};
}

// Micro-averaged alternative: pools every (score, label) pair across tags
// into one AUC. Offered behind a flag; macro is the default everywhere.
template <typename Scalar>
Scalar micro_auc(const Eigen::Ref<const MatrixX<Scalar>>& scores,
                 const Eigen::Ref<const MatrixX<Scalar>>& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols())
    throw DimensionMismatch("score and label matrices differ in shape");
  VectorX<Scalar> pooled_scores(scores.size());
  VectorX<Scalar> pooled_labels(labels.size());
  Index k = 0;
  for (Index t = 0; t < scores.cols(); ++t)
    for (Index i = 0; i < scores.rows(); ++i, ++k) {
      pooled_scores[k] = scores(i, t);
      pooled_labels[k] = labels(i, t);
    }
  return roc_auc<Scalar>(pooled_scores, pooled_labels);
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.empty()) throw EmptyInputError("empty prediction vector");
  if (predicted.size() != truth.size())
    throw DimensionMismatch("prediction and truth differ in length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

// Ordered group-name -> rank map; ranks are a permutation of 1..J with
// rank 1 the most important group.
struct RankList {
  std::vector<std::pair<std::string, int>> entries;

  void check() const {
    const int j = static_cast<int>(entries.size());
    if (j < 1) throw EmptyInputError("empty rank list");
    std::vector<char> seen(static_cast<std::size_t>(j), 0);
    for (const auto& [name, rank] : entries) {
      if (rank < 1 || rank > j || seen[static_cast<std::size_t>(rank - 1)]++)
        throw DataError("ranks for '" + name + "' are not a permutation of 1.." +
                        std::to_string(j));
    }
  }

  int rank_of(const std::string& name) const {
    for (const auto& [n, r] : entries)
      if (n == name) return r;
    throw MismatchedGroupsError("group '" + name + "' missing from rank list");
  }
};

// Total absolute rank displacement between two rankings of the same groups.
inline int rank_abs_distance(const RankList& a, const RankList& b) {
  a.check();
  b.check();
  if (a.entries.size() != b.entries.size())
    throw MismatchedGroupsError("rank lists cover different group counts");
  int total = 0;
  for (const auto& [name, rank] : a.entries) total += std::abs(rank - b.rank_of(name));
  return total;
}

// Descending sort of importances into ranks; ties keep declaration order.
template <typename Scalar>
RankList importances_to_ranks(const VectorX<Scalar>& importances,
                              const std::vector<std::string>& group_names) {
  const Index j = importances.size();
  if (static_cast<Index>(group_names.size()) != j)
    throw DimensionMismatch("importance count does not match group names");
  for (Index i = 0; i < j; ++i)
    if (!std::isfinite(static_cast<double>(importances[i])))
      throw DataError("non-finite importance for group '" +
                      group_names[static_cast<std::size_t>(i)] + "'");

  std::vector<Index> order(static_cast<std::size_t>(j));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return importances[a] > importances[b]; });

  RankList ranks;
  ranks.entries.resize(static_cast<std::size_t>(j));
  for (Index pos = 0; pos < j; ++pos) {
    const Index g = order[static_cast<std::size_t>(pos)];
    ranks.entries[static_cast<std::size_t>(g)] = {group_names[static_cast<std::size_t>(g)],
                                                  static_cast<int>(pos) + 1};
  }
  return ranks;
}

// Largest deviation of any importance from the uniform share 1/J.
template <typename Scalar>
Scalar uniformity_gap(const VectorX<Scalar>& importances) {
  if (importances.size() < 1) throw EmptyInputError("empty importance vector");
  const Scalar uniform = Scalar(1) / Scalar(static_cast<double>(importances.size()));
  return (importances.array() - uniform).abs().maxCoeff();
}

}  // namespace emband

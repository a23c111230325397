#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "emband/dataset.hpp"
#include "emband/grouping.hpp"
#include "emband/rng.hpp"

namespace emband {

// Planted-structure benchmark generator. Features are i.i.d. standard normal
// (optionally mixed with one shared latent factor per group); true weights
// are N(0, weight_scale^2) on the columns of the active groups and exactly
// zero elsewhere; continuous targets are F w plus N(0, noise_sd^2) noise.
// Binary tags threshold the continuous score at its lower median, class ids
// take the argmax over per-class scores. Output is fully determined by seed.
struct PlantedSpec {
  Index n_samples = 500;
  std::vector<Index> group_sizes;    // D_j per group, all positive
  std::vector<Index> active_groups;  // indices of groups carrying signal
  double weight_scale = 1.0;
  double noise_sd = 0.1;
  TaskKind task = TaskKind::Regression;
  Index n_targets = 1;  // tags for multilabel, classes for multiclass
  std::uint64_t seed = 0;
  bool correlated = false;  // one latent factor per group
  double mixing = 0.5;      // latent weight when correlated

  Index total_columns() const {
    Index d = 0;
    for (Index s : group_sizes) d += s;
    return d;
  }

  void check() const {
    if (n_samples < 2) throw InvalidSpecError("need at least 2 samples");
    if (group_sizes.empty()) throw InvalidSpecError("no groups specified");
    for (Index s : group_sizes)
      if (s < 1) throw InvalidSpecError("group sizes must be positive");
    if (active_groups.empty())
      throw InvalidSpecError("at least one active group is required; "
                             "use weight_scale 0 for a pure-noise target");
    std::vector<char> seen(group_sizes.size(), 0);
    for (Index a : active_groups) {
      if (a < 0 || a >= static_cast<Index>(group_sizes.size()))
        throw InvalidSpecError("active group index " + std::to_string(a) + " out of range");
      if (seen[static_cast<std::size_t>(a)]++)
        throw InvalidSpecError("active group listed twice");
    }
    if (weight_scale < 0 || noise_sd < 0)
      throw InvalidSpecError("weight_scale and noise_sd must be non-negative");
    if (task == TaskKind::Regression) {
      if (n_targets != 1) throw InvalidSpecError("regression generates a single target");
    } else if (n_targets < (task == TaskKind::MultiClass ? 2 : 1)) {
      throw InvalidSpecError("too few targets for the task");
    }
    if (mixing < 0 || mixing >= 1) throw InvalidSpecError("mixing must be in [0, 1)");
  }
};

struct PlantedData {
  Dataset dataset;
  MatrixX<double> true_weights;  // D x T, one column per target
  GroupSpecDocument groups;
};

namespace detail {

inline std::string padded_name(const char* prefix, Index i, Index count) {
  std::size_t width = std::to_string(count).size();
  std::string num = std::to_string(i);
  return prefix + std::string(width - num.size(), '0') + num;
}

}  // namespace detail

inline PlantedData generate(const PlantedSpec& spec) {
  spec.check();
  const Index n = spec.n_samples;
  const Index d = spec.total_columns();
  const Index j_count = static_cast<Index>(spec.group_sizes.size());
  const Index t_count =
      spec.task == TaskKind::Regression ? 1 : spec.n_targets;

  SplitMix64 rng(spec.seed);

  std::vector<Index> group_of(static_cast<std::size_t>(d));
  {
    Index c = 0;
    for (Index j = 0; j < j_count; ++j)
      for (Index k = 0; k < spec.group_sizes[static_cast<std::size_t>(j)]; ++k)
        group_of[static_cast<std::size_t>(c++)] = j;
  }

  MatrixX<double> x(n, d);
  const double residual_scale = std::sqrt(1.0 - spec.mixing * spec.mixing);
  for (Index i = 0; i < n; ++i) {
    if (spec.correlated) {
      VectorX<double> latent(j_count);
      for (Index j = 0; j < j_count; ++j) latent[j] = rng.next_gaussian();
      for (Index c = 0; c < d; ++c)
        x(i, c) = spec.mixing * latent[group_of[static_cast<std::size_t>(c)]] +
                  residual_scale * rng.next_gaussian();
    } else {
      for (Index c = 0; c < d; ++c) x(i, c) = rng.next_gaussian();
    }
  }

  std::vector<char> active(static_cast<std::size_t>(j_count), 0);
  for (Index a : spec.active_groups) active[static_cast<std::size_t>(a)] = 1;

  MatrixX<double> weights = MatrixX<double>::Zero(d, t_count);
  for (Index t = 0; t < t_count; ++t)
    for (Index c = 0; c < d; ++c)
      if (active[static_cast<std::size_t>(group_of[static_cast<std::size_t>(c)])])
        weights(c, t) = spec.weight_scale * rng.next_gaussian();

  MatrixX<double> continuous(n, t_count);
  for (Index t = 0; t < t_count; ++t) {
    continuous.col(t) = x * weights.col(t);
    for (Index i = 0; i < n; ++i) continuous(i, t) += spec.noise_sd * rng.next_gaussian();
  }

  PlantedData out;
  out.true_weights = std::move(weights);

  Dataset& ds = out.dataset;
  ds.x = std::move(x);
  ds.task = spec.task;
  ds.sample_ids.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ds.sample_ids.push_back(detail::padded_name("s", i, n));
  ds.feature_names.reserve(static_cast<std::size_t>(d));
  for (Index c = 0; c < d; ++c) ds.feature_names.push_back(detail::padded_name("f", c, d));

  switch (spec.task) {
    case TaskKind::Regression:
      ds.target_names = {"target"};
      ds.labels = continuous;
      break;
    case TaskKind::MultiLabel: {
      for (Index t = 0; t < t_count; ++t)
        ds.target_names.push_back(detail::padded_name("tag", t, t_count));
      ds.labels.resize(n, t_count);
      for (Index t = 0; t < t_count; ++t) {
        VectorX<double> sorted = continuous.col(t);
        std::sort(sorted.data(), sorted.data() + n);
        const double median = sorted[(n - 1) / 2];
        for (Index i = 0; i < n; ++i) ds.labels(i, t) = continuous(i, t) > median ? 1.0 : 0.0;
      }
      break;
    }
    case TaskKind::MultiClass: {
      for (Index t = 0; t < t_count; ++t)
        ds.target_names.push_back(detail::padded_name("class", t, t_count));
      ds.class_ids.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        Index best = 0;
        for (Index t = 1; t < t_count; ++t)
          if (continuous(i, t) > continuous(i, best)) best = t;
        ds.class_ids[static_cast<std::size_t>(i)] = static_cast<int>(best);
      }
      break;
    }
  }
  ds.check();

  out.groups.name = "planted_seed" + std::to_string(spec.seed);
  {
    Index c = 0;
    for (Index j = 0; j < j_count; ++j) {
      std::vector<std::string> members;
      for (Index k = 0; k < spec.group_sizes[static_cast<std::size_t>(j)]; ++k)
        members.push_back(ds.feature_names[static_cast<std::size_t>(c++)]);
      out.groups.groups.emplace_back(detail::padded_name("g", j + 1, j_count + 1),
                                     std::move(members));
    }
  }
  out.groups.normalize();
  return out;
}

}  // namespace emband

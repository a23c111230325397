#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emband/errors.hpp"
#include "emband/types.hpp"

namespace emband {

// Assignment of the D design-matrix columns into J named, disjoint groups.
// Group j owns the column set groups[j].columns; every column belongs to
// exactly one group. The per-group prior covariance blocks are identity
// scaled by the group variance, so the full prior covariance is diagonal
// and is represented as a per-column variance vector.
struct GroupPartition {
  struct Group {
    std::string name;
    std::vector<Index> columns;
  };

  std::vector<Group> groups;
  Index total_columns = 0;

  Index group_count() const { return static_cast<Index>(groups.size()); }
  Index group_size(Index j) const { return static_cast<Index>(groups[j].columns.size()); }

  // Throws unless the groups form a partition of {0 .. total_columns-1}
  // with unique, non-empty names.
  void check() const;

  // Column index -> owning group index.
  std::vector<Index> column_to_group() const;
};

inline void GroupPartition::check() const {
  if (groups.empty()) throw DimensionMismatch("partition has no groups");
  if (total_columns < 1) throw DimensionMismatch("partition covers no columns");
  std::vector<char> seen(static_cast<std::size_t>(total_columns), 0);
  std::unordered_map<std::string, int> names;
  for (const auto& g : groups) {
    if (g.name.empty()) throw DataError("group with empty name");
    if (!names.emplace(g.name, 1).second)
      throw DataError("duplicate group name '" + g.name + "'");
    if (g.columns.empty()) throw EmptyGroupError("group '" + g.name + "' is empty");
    for (Index c : g.columns) {
      if (c < 0 || c >= total_columns)
        throw DimensionMismatch("group '" + g.name + "' references column " +
                                std::to_string(c) + " outside [0, " +
                                std::to_string(total_columns) + ")");
      if (seen[static_cast<std::size_t>(c)]++)
        throw OverlapError("column " + std::to_string(c) + " appears in two groups");
    }
  }
  for (Index c = 0; c < total_columns; ++c)
    if (!seen[static_cast<std::size_t>(c)])
      throw GapError("column " + std::to_string(c) + " belongs to no group");
}

inline std::vector<Index> GroupPartition::column_to_group() const {
  std::vector<Index> owner(static_cast<std::size_t>(total_columns), -1);
  for (Index j = 0; j < group_count(); ++j)
    for (Index c : groups[j].columns) owner[static_cast<std::size_t>(c)] = j;
  return owner;
}

// Resolves named groups against a feature-name list into a column partition.
// Succeeds iff the groups cover every feature name exactly once. With
// drop_unlisted, features absent from all groups are dropped instead of
// raising GapError; kept_columns then lists the surviving columns in their
// original order, and the partition indices refer to the reduced design.
struct ResolvedPartition {
  GroupPartition partition;
  std::vector<Index> kept_columns;
};

inline ResolvedPartition validate_partition(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& named_groups,
    const std::vector<std::string>& feature_names, bool drop_unlisted = false) {
  std::unordered_map<std::string, Index> position;
  position.reserve(feature_names.size());
  for (Index c = 0; c < static_cast<Index>(feature_names.size()); ++c) {
    if (!position.emplace(feature_names[static_cast<std::size_t>(c)], c).second)
      throw DuplicateFeatureError("feature name '" +
                                  feature_names[static_cast<std::size_t>(c)] +
                                  "' is not unique");
  }

  const Index d = static_cast<Index>(feature_names.size());
  std::vector<Index> owner(static_cast<std::size_t>(d), -1);
  for (Index j = 0; j < static_cast<Index>(named_groups.size()); ++j) {
    const auto& [name, features] = named_groups[static_cast<std::size_t>(j)];
    if (features.empty()) throw EmptyGroupError("group '" + name + "' is empty");
    for (const auto& f : features) {
      auto it = position.find(f);
      if (it == position.end())
        throw UnknownFeatureError("group '" + name + "' references unknown feature '" + f + "'");
      Index c = it->second;
      if (owner[static_cast<std::size_t>(c)] >= 0)
        throw OverlapError("feature '" + f + "' appears in two groups");
      owner[static_cast<std::size_t>(c)] = j;
    }
  }

  ResolvedPartition out;
  std::vector<Index> new_index(static_cast<std::size_t>(d), -1);
  for (Index c = 0; c < d; ++c) {
    if (owner[static_cast<std::size_t>(c)] < 0) {
      if (!drop_unlisted)
        throw GapError("feature '" + feature_names[static_cast<std::size_t>(c)] +
                       "' belongs to no group");
      continue;
    }
    new_index[static_cast<std::size_t>(c)] = static_cast<Index>(out.kept_columns.size());
    out.kept_columns.push_back(c);
  }

  out.partition.total_columns = static_cast<Index>(out.kept_columns.size());
  out.partition.groups.reserve(named_groups.size());
  for (Index j = 0; j < static_cast<Index>(named_groups.size()); ++j) {
    GroupPartition::Group g;
    g.name = named_groups[static_cast<std::size_t>(j)].first;
    for (const auto& f : named_groups[static_cast<std::size_t>(j)].second)
      g.columns.push_back(new_index[static_cast<std::size_t>(position.at(f))]);
    out.partition.groups.push_back(std::move(g));
  }
  out.partition.check();
  return out;
}

// Per-column prior variance for the block prior: column c in group j gets
// variance lambdas[j]. Group variances of exactly zero mark pruned groups
// whose weights are fixed at zero and excluded from the solve.
template <typename Scalar>
VectorX<Scalar> prior_column_variances(const GroupPartition& partition,
                                       const VectorX<Scalar>& lambdas) {
  if (lambdas.size() != partition.group_count())
    throw DimensionMismatch("expected " + std::to_string(partition.group_count()) +
                            " group variances, got " + std::to_string(lambdas.size()));
  VectorX<Scalar> variances = VectorX<Scalar>::Zero(partition.total_columns);
  for (Index j = 0; j < partition.group_count(); ++j) {
    if (lambdas[j] < Scalar(0))
      throw DataError("negative prior variance for group '" + partition.groups[static_cast<std::size_t>(j)].name + "'");
    for (Index c : partition.groups[static_cast<std::size_t>(j)].columns)
      variances[c] = lambdas[j];
  }
  return variances;
}

}  // namespace emband

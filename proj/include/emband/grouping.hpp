#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "emband/partition.hpp"

namespace emband {

// A named feature grouping as read from or written to a group-spec file.
// Groups are kept in canonical order (sorted by group name, matching the
// serialized form); feature lists preserve their declared order.
struct GroupSpecDocument {
  std::string name;
  bool drop_unlisted = false;
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;
  std::map<std::string, std::string> descriptions;  // optional, per group

  std::size_t group_count() const { return groups.size(); }
  std::size_t feature_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.second.size();
    return n;
  }

  // Sorts groups by name and checks structural validity (non-empty groups,
  // no feature listed twice).
  void normalize();

  ResolvedPartition resolve(const std::vector<std::string>& feature_names) const {
    return validate_partition(groups, feature_names, drop_unlisted);
  }
};

// Parses a group-spec document:
//   {"name": ..., "drop_unlisted": bool, "groups": {"<group>": ["<feature>", ...]}}
// Raises ParseError (with byte position) on malformed input,
// DuplicateFeatureError / EmptyGroupError on structural faults.
GroupSpecDocument parse_group_spec(const std::string& bytes);

// Canonical serialization: sorted group keys, feature-list order preserved,
// two-space indent, trailing newline. parse(serialize(doc)) == doc.
std::string serialize_group_spec(const GroupSpecDocument& doc);

// Seeded uniform shuffle of the feature names followed by round-robin
// assignment into J groups, so group sizes differ by at most one.
// Deterministic per seed.
GroupSpecDocument random_grouping(const std::vector<std::string>& feature_names,
                                  Index j_groups, std::uint64_t seed);

// One group per extraction method present in the manifest.
struct FeatureSource {
  std::string feature;
  std::string source;  // one of: symbolic, dnn, signal, nlp
};
GroupSpecDocument extraction_method_grouping(const std::vector<FeatureSource>& manifest);

}  // namespace emband

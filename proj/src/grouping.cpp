#include "emband/grouping.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "emband/errors.hpp"
#include "emband/rng.hpp"

namespace emband {

void GroupSpecDocument::normalize() {
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (groups.empty()) throw EmptyGroupError("document defines no groups");
  std::unordered_set<std::string> group_names;
  std::unordered_set<std::string> features;
  for (const auto& [name, list] : groups) {
    if (!group_names.insert(name).second)
      throw DuplicateFeatureError("group '" + name + "' defined twice");
    if (list.empty()) throw EmptyGroupError("group '" + name + "' is empty");
    for (const auto& f : list)
      if (!features.insert(f).second)
        throw DuplicateFeatureError("feature '" + f + "' listed twice");
  }
}

GroupSpecDocument parse_group_spec(const std::string& bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("group spec: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw ParseError("group spec: top level must be an object");
  if (!doc.contains("groups") || !doc["groups"].is_object())
    throw ParseError("group spec: missing \"groups\" object");

  GroupSpecDocument out;
  out.name = doc.value("name", std::string());
  out.drop_unlisted = doc.value("drop_unlisted", false);
  for (const auto& [group, list] : doc["groups"].items()) {
    if (!list.is_array())
      throw ParseError("group spec: group '" + group + "' is not an array");
    std::vector<std::string> features;
    for (const auto& f : list) {
      if (!f.is_string())
        throw ParseError("group spec: group '" + group + "' holds a non-string entry");
      features.push_back(f.get<std::string>());
    }
    out.groups.emplace_back(group, std::move(features));
  }
  if (doc.contains("descriptions")) {
    if (!doc["descriptions"].is_object())
      throw ParseError("group spec: \"descriptions\" must be an object");
    for (const auto& [group, text] : doc["descriptions"].items())
      out.descriptions[group] = text.get<std::string>();
  }
  out.normalize();
  return out;
}

std::string serialize_group_spec(const GroupSpecDocument& doc) {
  nlohmann::json j;
  j["name"] = doc.name;
  j["drop_unlisted"] = doc.drop_unlisted;
  j["groups"] = nlohmann::json::object();
  for (const auto& [group, features] : doc.groups) j["groups"][group] = features;
  if (!doc.descriptions.empty()) {
    j["descriptions"] = nlohmann::json::object();
    for (const auto& [group, text] : doc.descriptions) j["descriptions"][group] = text;
  }
  return j.dump(2) + "\n";
}

GroupSpecDocument random_grouping(const std::vector<std::string>& feature_names,
                                  Index j_groups, std::uint64_t seed) {
  const Index d = static_cast<Index>(feature_names.size());
  if (j_groups < 1 || j_groups > d)
    throw InvalidJError("group count must be in [1, " + std::to_string(d) + "], got " +
                        std::to_string(j_groups));

  std::vector<std::string> shuffled = feature_names;
  SplitMix64 rng(seed);
  shuffle(shuffled, rng);

  int width = 1;
  for (Index t = j_groups; t > 9; t /= 10) ++width;
  auto group_name = [&](Index g) {
    std::string num = std::to_string(g + 1);
    return "g" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
  };

  GroupSpecDocument out;
  out.name = "random_j" + std::to_string(j_groups) + "_seed" + std::to_string(seed);
  out.groups.resize(static_cast<std::size_t>(j_groups));
  for (Index g = 0; g < j_groups; ++g) out.groups[static_cast<std::size_t>(g)].first = group_name(g);
  for (Index i = 0; i < d; ++i)
    out.groups[static_cast<std::size_t>(i % j_groups)].second.push_back(
        shuffled[static_cast<std::size_t>(i)]);
  out.normalize();
  return out;
}

GroupSpecDocument extraction_method_grouping(const std::vector<FeatureSource>& manifest) {
  static const std::set<std::string> known = {"symbolic", "dnn", "signal", "nlp"};
  std::map<std::string, std::vector<std::string>> by_source;
  for (const auto& [feature, source] : manifest) {
    if (!known.count(source))
      throw MissingSourceTagError("feature '" + feature + "' has no valid source tag (got '" +
                                  source + "')");
    by_source[source].push_back(feature);
  }
  if (by_source.empty()) throw EmptyGroupError("manifest is empty");

  GroupSpecDocument out;
  out.name = "extraction_method";
  for (auto& [source, features] : by_source) out.groups.emplace_back(source, std::move(features));
  out.normalize();
  return out;
}

}  // namespace emband

#include "emband/report.hpp"

#include <json.hpp>

#include "emband/dataset_io.hpp"
#include "emband/errors.hpp"

namespace emband {

namespace {

using nlohmann::json;

// Per-target metric on one dataset: AUC for binary targets, squared error
// for regression. Returns nothing when the metric is undefined there.
std::optional<double> target_metric(const TaggingModel& model, const Dataset& ds,
                                    const MatrixX<double>& scores, Index t) {
  if (model.skipped[static_cast<std::size_t>(t)]) return std::nullopt;
  if (ds.task == TaskKind::Regression) {
    const VectorX<double> err = scores.col(t) - ds.labels.col(t);
    return err.squaredNorm() / static_cast<double>(ds.rows());
  }
  VectorX<double> truth(ds.rows());
  if (ds.task == TaskKind::MultiClass) {
    for (Index i = 0; i < ds.rows(); ++i)
      truth[i] = ds.class_ids[static_cast<std::size_t>(i)] == static_cast<int>(t) ? 1.0 : 0.0;
  } else {
    truth = ds.labels.col(t);
  }
  const double first = truth[0];
  if ((truth.array() == first).all()) return std::nullopt;
  return roc_auc<double>(scores.col(t), truth);
}

struct OverallMetric {
  std::string name;
  std::optional<double> value;
  int skipped = 0;
};

OverallMetric overall_metric(const Dataset& ds, const MatrixX<double>& scores) {
  OverallMetric out;
  switch (ds.task) {
    case TaskKind::MultiLabel: {
      out.name = "macro_auc";
      try {
        const auto macro = macro_auc<double>(scores, ds.labels);
        out.value = macro.value;
        out.skipped = macro.skipped_tags;
      } catch (const DegenerateError&) {
        out.value = std::nullopt;
        out.skipped = static_cast<int>(ds.target_count());
      }
      break;
    }
    case TaskKind::MultiClass: {
      out.name = "accuracy";
      std::vector<int> predicted(static_cast<std::size_t>(scores.rows()));
      for (Index i = 0; i < scores.rows(); ++i) {
        Index best = 0;
        for (Index t = 1; t < scores.cols(); ++t)
          if (scores(i, t) > scores(i, best)) best = t;
        predicted[static_cast<std::size_t>(i)] = static_cast<int>(best);
      }
      out.value = accuracy(predicted, ds.class_ids);
      break;
    }
    case TaskKind::Regression: {
      out.name = "mse";
      double total = 0.0;
      for (Index t = 0; t < ds.labels.cols(); ++t)
        total += (scores.col(t) - ds.labels.col(t)).squaredNorm();
      out.value = total / static_cast<double>(ds.rows() * ds.labels.cols());
      break;
    }
  }
  return out;
}

json opt_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::vector<double> to_std(const VectorX<double>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

std::string render_run_report(const ReportContext& context) {
  const TaggingModel& model = *context.model;
  const Dataset& train = *context.train;

  const MatrixX<double> train_scores = score(model, train.x);
  MatrixX<double> test_scores;
  if (context.test) test_scores = score(model, context.test->x);

  const ImportanceSummary importance = aggregate_importances(model);
  const std::vector<std::string> group_names = [&] {
    std::vector<std::string> names;
    for (const auto& g : model.partition.groups) names.push_back(g.name);
    return names;
  }();
  const RankList ranks = importances_to_ranks(importance.global, group_names);

  json report;
  report["version"] = EMBAND_VERSION;

  json config;
  config["eta"] = context.config.eta;
  config["tau"] = context.config.tau;
  config["kappa"] = context.config.kappa;
  config["phi"] = context.config.phi;
  config["lambda_init"] = context.config.lambda_init;
  config["nu_init"] = context.config.nu_init;
  config["max_iterations"] = context.config.max_iterations;
  config["relative_tolerance"] = context.config.relative_tolerance;
  config["prune_threshold"] = context.config.prune_threshold;
  config["learn_lambdas"] = context.config.learn_lambdas;
  config["standardize"] = context.config.standardize;
  report["config"] = config;

  json dataset;
  dataset["task"] = task_name(train.task);
  dataset["train_rows"] = train.rows();
  dataset["test_rows"] = context.test ? context.test->rows() : Index(0);
  dataset["feature_count"] = train.cols();
  dataset["group_count"] = model.partition.group_count();
  dataset["target_count"] = train.target_count();
  report["dataset"] = dataset;

  json digests;
  digests["features"] = context.features_digest;
  digests["labels"] = context.labels_digest;
  digests["groups"] = context.groups_digest;
  report["digests"] = digests;

  report["invocation"] = context.invocation;

  json groups = json::array();
  for (Index j = 0; j < model.partition.group_count(); ++j) {
    json g;
    g["name"] = group_names[static_cast<std::size_t>(j)];
    g["lambda"] = importance.mean_lambdas[j];
    g["importance"] = importance.global[j];
    g["rank"] = ranks.entries[static_cast<std::size_t>(j)].second;
    groups.push_back(g);
  }
  report["groups"] = groups;

  json targets = json::array();
  for (Index t = 0; t < model.target_count(); ++t) {
    json entry;
    entry["name"] = model.target_names[static_cast<std::size_t>(t)];
    const bool skipped = model.skipped[static_cast<std::size_t>(t)];
    entry["skipped"] = skipped;
    entry["train_metric"] = opt_to_json(target_metric(model, train, train_scores, t));
    entry["test_metric"] = context.test
                               ? opt_to_json(target_metric(model, *context.test, test_scores, t))
                               : json(nullptr);
    if (!skipped) {
      const auto& fitted = model.fits[static_cast<std::size_t>(t)];
      entry["lambdas"] = to_std(fitted.lambdas);
      entry["importances"] = to_std(fitted.importances);
      entry["nu"] = fitted.nu;
      entry["iterations"] = fitted.iterations_used;
      entry["converged"] = fitted.converged;
    }
    targets.push_back(entry);
  }
  report["targets"] = targets;

  json metrics;
  const OverallMetric train_overall = overall_metric(train, train_scores);
  metrics["name"] = train_overall.name;
  metrics["train"] = opt_to_json(train_overall.value);
  metrics["train_skipped_tags"] = train_overall.skipped;
  if (context.test) {
    const OverallMetric test_overall = overall_metric(*context.test, test_scores);
    metrics["test"] = opt_to_json(test_overall.value);
    metrics["test_skipped_tags"] = test_overall.skipped;
  } else {
    metrics["test"] = nullptr;
    metrics["test_skipped_tags"] = 0;
  }
  report["metrics"] = metrics;

  json diagnostics;
  json skipped_targets = json::array();
  for (Index t = 0; t < model.target_count(); ++t)
    if (model.skipped[static_cast<std::size_t>(t)])
      skipped_targets.push_back(model.target_names[static_cast<std::size_t>(t)]);
  diagnostics["skipped_targets"] = skipped_targets;
  json pruned = json::array();
  {
    std::vector<std::string> names;
    for (Index t = 0; t < model.target_count(); ++t) {
      if (model.skipped[static_cast<std::size_t>(t)]) continue;
      for (const auto& g : model.fits[static_cast<std::size_t>(t)].pruned_groups)
        if (std::find(names.begin(), names.end(), g) == names.end()) names.push_back(g);
    }
    std::sort(names.begin(), names.end());
    for (const auto& g : names) pruned.push_back(g);
  }
  diagnostics["pruned_groups"] = pruned;
  report["diagnostics"] = diagnostics;

  return report.dump(2) + "\n";
}

std::string render_importance_csv(const TaggingModel& model) {
  const ImportanceSummary importance = aggregate_importances(model);
  std::string out = "group,lambda,importance\n";
  for (Index j = 0; j < model.partition.group_count(); ++j)
    out += model.partition.groups[static_cast<std::size_t>(j)].name + "," +
           format_real(importance.mean_lambdas[j]) + "," +
           format_real(importance.global[j]) + "\n";
  return out;
}

NamedRanks parse_rank_file(const std::string& bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError("rank file: " + std::string(e.what()));
  }
  if (!doc.is_object() || !doc.contains("ranks") || !doc["ranks"].is_object())
    throw ParseError("rank file: expected {\"name\": ..., \"ranks\": {...}}");
  NamedRanks out;
  out.name = doc.value("name", std::string());
  for (const auto& [group, rank] : doc["ranks"].items()) {
    if (!rank.is_number_integer())
      throw ParseError("rank file: rank for '" + group + "' must be an integer");
    out.ranks.entries.emplace_back(group, rank.get<int>());
  }
  out.ranks.check();
  return out;
}

std::string serialize_rank_file(const NamedRanks& ranks) {
  json doc;
  doc["name"] = ranks.name;
  doc["ranks"] = json::object();
  for (const auto& [group, rank] : ranks.ranks.entries) doc["ranks"][group] = rank;
  return doc.dump(2) + "\n";
}

std::string render_compare_csv(const std::vector<NamedRanks>& methods,
                               const NamedRanks& reference) {
  std::string out = "method";
  for (const auto& [group, rank] : reference.ranks.entries) out += "," + group;
  out += ",abs_distance\n";
  auto append = [&](const NamedRanks& method) {
    out += method.name;
    for (const auto& [group, rank] : reference.ranks.entries)
      out += "," + std::to_string(method.ranks.rank_of(group));
    out += "," + std::to_string(rank_abs_distance(method.ranks, reference.ranks)) + "\n";
  };
  for (const auto& method : methods) append(method);
  append(reference);
  return out;
}

}  // namespace emband

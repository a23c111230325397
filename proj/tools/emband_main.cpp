#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "emband/dataset_io.hpp"
#include "emband/errors.hpp"
#include "emband/grouping.hpp"
#include "emband/report.hpp"
#include "emband/synthetic.hpp"
#include "emband/tagging.hpp"

namespace {

using namespace emband;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

TaskKind parse_task(const std::string& name) {
  if (name == "regression") return TaskKind::Regression;
  if (name == "multilabel") return TaskKind::MultiLabel;
  if (name == "multiclass") return TaskKind::MultiClass;
  throw UsageError("unknown task '" + name + "' (expected multilabel, multiclass or regression)");
}

struct FitArgs {
  std::string features, labels, groups, task, out;
  std::string importances_out;
  std::string test_features, test_labels;
  double holdout_fraction = 0.0;
  std::uint64_t seed = 0;
  EmBandedConfig config;
  bool no_standardize = false;
  bool fixed_lambdas = false;
};

int run_fit(const FitArgs& args) {
  const TaskKind task = parse_task(args.task);
  if (!args.test_features.empty() && args.holdout_fraction > 0.0)
    throw UsageError("--test-features and --holdout-fraction are mutually exclusive");
  if (args.test_features.empty() != args.test_labels.empty())
    throw UsageError("--test-features and --test-labels must be given together");

  EmBandedConfig config = args.config;
  config.standardize = !args.no_standardize;
  config.learn_lambdas = !args.fixed_lambdas;
  config.check();

  const std::string features_bytes = read_file(args.features);
  const std::string labels_bytes = read_file(args.labels);
  const std::string groups_bytes = read_file(args.groups);

  Dataset full = load_dataset(args.features, args.labels, task);
  const GroupSpecDocument groups = parse_group_spec(groups_bytes);
  const ResolvedPartition resolved = groups.resolve(full.feature_names);
  if (resolved.kept_columns.size() != static_cast<std::size_t>(full.cols()))
    full = take_columns(full, resolved.kept_columns);

  Dataset train = full;
  std::optional<Dataset> test;
  if (!args.test_features.empty()) {
    Dataset held = load_dataset(args.test_features, args.test_labels, task);
    if (resolved.kept_columns.size() != static_cast<std::size_t>(held.cols()))
      held = take_columns(held, resolved.kept_columns);
    if (held.feature_names != train.feature_names)
      throw FormatError("test features do not match training features");
    if (task != TaskKind::MultiClass && held.target_names != train.target_names)
      throw FormatError("test targets do not match training targets");
    test = std::move(held);
  } else if (args.holdout_fraction > 0.0) {
    const auto [train_rows, test_rows] = holdout_split(full.rows(), args.holdout_fraction, args.seed);
    train = take_rows(full, train_rows);
    test = take_rows(full, test_rows);
  }

  const TaggingModel model = fit_tagger(train, resolved.partition, config);

  ReportContext context;
  context.train = &train;
  context.test = test ? &*test : nullptr;
  context.model = &model;
  context.config = config;
  context.features_digest = fnv1a64_hex(features_bytes);
  context.labels_digest = fnv1a64_hex(labels_bytes);
  context.groups_digest = fnv1a64_hex(groups_bytes);
  context.invocation["features"] = args.features;
  context.invocation["labels"] = args.labels;
  context.invocation["groups"] = args.groups;
  context.invocation["task"] = args.task;
  if (!args.test_features.empty()) {
    context.invocation["test_features"] = args.test_features;
    context.invocation["test_labels"] = args.test_labels;
  }
  if (args.holdout_fraction > 0.0) {
    context.invocation["holdout_fraction"] = format_real(args.holdout_fraction);
    context.invocation["seed"] = std::to_string(args.seed);
  }

  write_file(args.out, render_run_report(context));
  if (!args.importances_out.empty())
    write_file(args.importances_out, render_importance_csv(model));
  return 0;
}

struct CompareArgs {
  std::vector<std::string> rank_paths;
  std::string reference_path;
  std::string out;
};

int run_compare(const CompareArgs& args) {
  const NamedRanks reference = parse_rank_file(read_file(args.reference_path));
  std::vector<NamedRanks> methods;
  for (const auto& path : args.rank_paths) {
    NamedRanks method = parse_rank_file(read_file(path));
    if (method.name.empty()) method.name = std::filesystem::path(path).stem().string();
    methods.push_back(std::move(method));
  }
  const std::string table = render_compare_csv(methods, reference);
  if (args.out.empty())
    std::cout << table;
  else
    write_file(args.out, table);
  return 0;
}

struct SynthArgs {
  Index n = 500;
  std::string group_sizes = "10,10,10,10,10";
  std::string active = "0";
  double noise_sd = 0.1;
  double weight_scale = 1.0;
  std::string task = "regression";
  Index targets = 3;
  std::uint64_t seed = 0;
  bool correlated = false;
  std::string out_dir;
};

std::vector<Index> parse_index_list(const std::string& text, const char* what) {
  std::vector<Index> values;
  std::string::size_type start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string token = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                            : comma - start);
    try {
      std::size_t used = 0;
      const long v = std::stol(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      values.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": '" + token + "' is not an integer");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

int run_synth(const SynthArgs& args) {
  PlantedSpec spec;
  spec.n_samples = args.n;
  spec.group_sizes = parse_index_list(args.group_sizes, "--groups-sizes");
  spec.active_groups = parse_index_list(args.active, "--active");
  spec.noise_sd = args.noise_sd;
  spec.weight_scale = args.weight_scale;
  spec.task = parse_task(args.task);
  spec.n_targets = spec.task == TaskKind::Regression ? 1 : args.targets;
  spec.seed = args.seed;
  spec.correlated = args.correlated;
  spec.check();

  const PlantedData data = generate(spec);
  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "features.csv", features_to_csv(data.dataset));
  write_file(dir / "labels.csv", labels_to_csv(data.dataset));
  write_file(dir / "groups.json", serialize_group_spec(data.groups));

  std::string truth = "feature";
  for (const auto& t : data.dataset.target_names) truth += "," + t;
  truth += "\n";
  for (Index c = 0; c < data.true_weights.rows(); ++c) {
    truth += data.dataset.feature_names[static_cast<std::size_t>(c)];
    for (Index t = 0; t < data.true_weights.cols(); ++t)
      truth += "," + format_real(data.true_weights(c, t));
    truth += "\n";
  }
  write_file(dir / "truth.csv", truth);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-banded Bayesian linear regression with learned per-group shrinkage"};
  app.set_version_flag("--version", EMBAND_VERSION);
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a tagging model and write a report");
  fit_cmd->add_option("--features", fit_args.features, "Feature CSV")->required();
  fit_cmd->add_option("--labels", fit_args.labels, "Label CSV")->required();
  fit_cmd->add_option("--groups", fit_args.groups, "Group-spec JSON")->required();
  fit_cmd->add_option("--task", fit_args.task, "multilabel, multiclass or regression")->required();
  fit_cmd->add_option("--test-features", fit_args.test_features, "Held-out feature CSV");
  fit_cmd->add_option("--test-labels", fit_args.test_labels, "Held-out label CSV");
  fit_cmd->add_option("--holdout-fraction", fit_args.holdout_fraction,
                      "Contiguous held-out block fraction");
  fit_cmd->add_option("--seed", fit_args.seed, "Seed for the holdout block offset");
  fit_cmd->add_option("--eta", fit_args.config.eta, "Group-variance hyperprior shape");
  fit_cmd->add_option("--tau", fit_args.config.tau, "Group-variance hyperprior scale");
  fit_cmd->add_option("--kappa", fit_args.config.kappa, "Noise-variance hyperprior shape");
  fit_cmd->add_option("--phi", fit_args.config.phi, "Noise-variance hyperprior scale");
  fit_cmd->add_option("--max-iter", fit_args.config.max_iterations, "Iteration cap");
  fit_cmd->add_option("--tol", fit_args.config.relative_tolerance, "Relative tolerance");
  fit_cmd->add_option("--lambda-init", fit_args.config.lambda_init, "Initial group variance");
  fit_cmd->add_option("--nu-init", fit_args.config.nu_init, "Initial noise variance");
  fit_cmd->add_option("--prune-threshold", fit_args.config.prune_threshold,
                      "Variance below which a group is frozen at zero");
  fit_cmd->add_flag("--no-standardize", fit_args.no_standardize, "Skip feature standardization");
  fit_cmd->add_flag("--fixed-lambdas", fit_args.fixed_lambdas,
                    "Keep hyperparameters at their initial values");
  fit_cmd->add_option("--out", fit_args.out, "Report JSON path")->required();
  fit_cmd->add_option("--importances-out", fit_args.importances_out, "Importance table CSV path");

  CompareArgs compare_args;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Rank-distance table between methods");
  compare_cmd->add_option("--ranks", compare_args.rank_paths, "Rank JSON files")->required();
  compare_cmd->add_option("--reference", compare_args.reference_path, "Reference rank JSON")
      ->required();
  compare_cmd->add_option("--out", compare_args.out, "Output CSV (stdout when omitted)");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a planted benchmark dataset");
  synth_cmd->add_option("--n", synth_args.n, "Sample count");
  synth_cmd->add_option("--groups-sizes", synth_args.group_sizes, "Comma list of group sizes");
  synth_cmd->add_option("--active", synth_args.active, "Comma list of active group indices");
  synth_cmd->add_option("--noise-sd", synth_args.noise_sd, "Target noise standard deviation");
  synth_cmd->add_option("--weight-scale", synth_args.weight_scale, "True weight scale");
  synth_cmd->add_option("--task", synth_args.task, "regression, multilabel or multiclass");
  synth_cmd->add_option("--targets", synth_args.targets, "Tag or class count");
  synth_cmd->add_option("--seed", synth_args.seed, "Generator seed");
  synth_cmd->add_flag("--correlated", synth_args.correlated,
                      "Mix a shared latent factor into each group");
  synth_cmd->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
    if (*fit_cmd) return run_fit(fit_args);
    if (*compare_cmd) return run_compare(compare_args);
    if (*synth_cmd) return run_synth(synth_args);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.category()) {
      case Error::Category::Usage:
        std::cerr << "run with --help for usage\n";
        return kExitUsage;
      case Error::Category::Data:
        return kExitData;
      case Error::Category::Numerical:
        return kExitNumerical;
    }
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emband/dataset.hpp"
#include "emband/grouping.hpp"
#include "emband/metrics.hpp"
#include "emband/tagging.hpp"

namespace emband {

// Everything a fit run needs to render its report: the fitted model, the
// datasets it was fit and evaluated on, input digests, and the echoed
// invocation settings. Reports are canonical JSON (sorted keys, two-space
// indent, trailing newline) so identical runs produce identical bytes.
struct ReportContext {
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;  // optional held-out set
  const TaggingModel* model = nullptr;
  EmBandedConfig config;
  std::string features_digest;
  std::string labels_digest;
  std::string groups_digest;
  std::map<std::string, std::string> invocation;
};

std::string render_run_report(const ReportContext& context);

// Flat plot-ready table: group,lambda,importance with one row per group in
// partition order. Lambdas are means over non-skipped targets.
std::string render_importance_csv(const TaggingModel& model);

// Rank files: {"name": ..., "ranks": {"<group>": <rank>}}.
struct NamedRanks {
  std::string name;
  RankList ranks;
};
NamedRanks parse_rank_file(const std::string& bytes);
std::string serialize_rank_file(const NamedRanks& ranks);

// Comparison table: one row per method (reference last), columns are the
// reference's groups plus the total absolute rank distance to the reference.
std::string render_compare_csv(const std::vector<NamedRanks>& methods,
                               const NamedRanks& reference);

}  // namespace emband

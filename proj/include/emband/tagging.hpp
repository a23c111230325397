#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "emband/dataset.hpp"
#include "emband/solver.hpp"

namespace emband {

// Lifts the scalar-target solver to multi-label tagging (one regression per
// tag on its 0/1 column) and multi-class classification (one regression per
// class on its one-vs-rest indicator, predictions by argmax). Targets are
// centered, never scaled; scoring is threshold-free.
struct TaggingModel {
  TaskKind task = TaskKind::Regression;
  std::vector<std::string> target_names;
  GroupPartition partition;
  ColumnScaling<double> scaling;
  std::vector<double> target_means;
  std::vector<FitResult<double>> fits;  // empty weights for skipped targets
  std::vector<bool> skipped;            // targets with all-equal labels

  Index target_count() const { return static_cast<Index>(target_names.size()); }
  Index active_target_count() const {
    Index n = 0;
    for (bool s : skipped)
      if (!s) ++n;
    return n;
  }
};

namespace detail {

inline VectorX<double> target_column(const Dataset& ds, Index t) {
  if (ds.task == TaskKind::MultiClass) {
    VectorX<double> indicator(ds.rows());
    for (Index i = 0; i < ds.rows(); ++i)
      indicator[i] = ds.class_ids[static_cast<std::size_t>(i)] == static_cast<int>(t) ? 1.0 : 0.0;
    return indicator;
  }
  return ds.labels.col(t);
}

// Runs fn(t) for t in [0, count) on up to hardware_concurrency threads.
// Each index owns its output slot, so scheduling cannot change results.
template <typename Fn>
void parallel_for_targets(Index count, Fn&& fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  const unsigned workers =
      std::min<unsigned>(hw == 0 ? 1 : hw, static_cast<unsigned>(count));
  if (workers <= 1) {
    for (Index t = 0; t < count; ++t) fn(t);
    return;
  }
  std::atomic<Index> next(0);
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const Index t = next.fetch_add(1);
        if (t >= count) return;
        try {
          fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

inline TaggingModel fit_tagger(const Dataset& dataset, const GroupPartition& partition,
                               const EmBandedConfig& config) {
  dataset.check();
  partition.check();
  config.check();
  if (partition.total_columns != dataset.cols())
    throw DimensionMismatch("partition does not match dataset width");

  TaggingModel model;
  model.task = dataset.task;
  model.target_names = dataset.target_names;
  model.partition = partition;
  model.scaling = config.standardize ? fit_column_scaling<double>(dataset.x)
                                     : ColumnScaling<double>::identity(dataset.cols());

  const Index t_count = dataset.target_count();
  const MatrixX<double> f = model.scaling.apply(dataset.x);
  model.target_means.assign(static_cast<std::size_t>(t_count), 0.0);
  model.fits.resize(static_cast<std::size_t>(t_count));
  model.skipped.assign(static_cast<std::size_t>(t_count), false);

  detail::parallel_for_targets(t_count, [&](Index t) {
    VectorX<double> y = detail::target_column(dataset, t);
    const double first = y[0];
    if ((y.array() == first).all()) {
      model.skipped[static_cast<std::size_t>(t)] = true;
      model.target_means[static_cast<std::size_t>(t)] = first;
      return;
    }
    const double mean = y.mean();
    model.target_means[static_cast<std::size_t>(t)] = mean;
    y.array() -= mean;
    model.fits[static_cast<std::size_t>(t)] = fit<double>(f, y, partition, config);
  });

  if (model.active_target_count() == 0)
    throw DegenerateError("every target has all-equal labels");
  return model;
}

// Real-valued scores for raw feature rows, one column per target. Skipped
// targets score at their constant label value.
inline MatrixX<double> score(const TaggingModel& model, const Eigen::Ref<const MatrixX<double>>& raw_rows) {
  if (raw_rows.cols() != model.partition.total_columns)
    throw DimensionMismatch("row width does not match model");
  const MatrixX<double> f = model.scaling.apply(raw_rows);
  MatrixX<double> scores(raw_rows.rows(), model.target_count());
  for (Index t = 0; t < model.target_count(); ++t) {
    if (model.skipped[static_cast<std::size_t>(t)]) {
      scores.col(t).setConstant(model.target_means[static_cast<std::size_t>(t)]);
      continue;
    }
    scores.col(t) = (f * model.fits[static_cast<std::size_t>(t)].weights).array() +
                    model.target_means[static_cast<std::size_t>(t)];
  }
  return scores;
}

// Argmax over class scores; ties resolve to the lowest class index.
inline std::vector<int> classify(const TaggingModel& model,
                                 const Eigen::Ref<const MatrixX<double>>& raw_rows) {
  if (model.task != TaskKind::MultiClass)
    throw DataError("classify requires a multiclass model");
  const MatrixX<double> scores = score(model, raw_rows);
  std::vector<int> ids(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index t = 1; t < scores.cols(); ++t)
      if (scores(i, t) > scores(i, best)) best = t;
    ids[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return ids;
}

struct ImportanceSummary {
  VectorX<double> global;          // J, sums to 1
  MatrixX<double> per_target;      // J x T, zero column for skipped targets
  VectorX<double> mean_lambdas;    // J, mean over non-skipped targets
};

// Global importance is the unweighted mean of per-target importances over
// non-skipped targets, renormalized to sum one.
inline ImportanceSummary aggregate_importances(const TaggingModel& model) {
  const Index j = model.partition.group_count();
  const Index t_count = model.target_count();
  ImportanceSummary out;
  out.per_target = MatrixX<double>::Zero(j, t_count);
  out.mean_lambdas = VectorX<double>::Zero(j);
  VectorX<double> total = VectorX<double>::Zero(j);
  Index used = 0;
  for (Index t = 0; t < t_count; ++t) {
    if (model.skipped[static_cast<std::size_t>(t)]) continue;
    const auto& fitted = model.fits[static_cast<std::size_t>(t)];
    out.per_target.col(t) = fitted.importances;
    total += fitted.importances;
    out.mean_lambdas += fitted.lambdas;
    ++used;
  }
  if (used == 0) throw DegenerateError("no fitted targets to aggregate");
  out.mean_lambdas /= static_cast<double>(used);
  out.global = total / total.sum();
  return out;
}

}  // namespace emband

#pragma once

#include <Eigen/Cholesky>
#include <vector>

#include "emband/errors.hpp"
#include "emband/types.hpp"

namespace emband {

// Classical ridge regression with one shared penalty, used as the non-banded
// comparator and as an oracle for the group solver in the single-group,
// fixed-hyperparameter case (penalty = nu / lambda).

struct RidgeConfig {
  double penalty = 1.0;
  // Non-empty grid switches to K-fold cross-validation over the grid with
  // deterministic contiguous folds; ties pick the earliest grid entry.
  std::vector<double> grid;
  int folds = 5;

  static std::vector<double> default_grid() {
    return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  }

  void check() const {
    if (grid.empty()) {
      if (penalty <= 0) throw InvalidSpecError("ridge penalty must be positive");
    } else {
      for (double p : grid)
        if (p <= 0) throw InvalidSpecError("ridge grid penalties must be positive");
      if (folds < 2) throw InvalidSpecError("cross-validation needs at least 2 folds");
    }
  }
};

template <typename Scalar>
VectorX<Scalar> ridge_fit(const Eigen::Ref<const MatrixX<Scalar>>& f,
                          const Eigen::Ref<const VectorX<Scalar>>& y, Scalar penalty) {
  if (y.size() != f.rows()) throw DimensionMismatch("target length does not match row count");
  if (!(penalty > Scalar(0))) throw InvalidSpecError("ridge penalty must be positive");
  MatrixX<Scalar> gram = f.transpose() * f;
  gram.diagonal().array() += penalty;
  Eigen::LLT<MatrixX<Scalar>> llt(gram);
  if (llt.info() != Eigen::Success)
    throw NumericalError("ridge_fit: Cholesky factorization failed");
  return llt.solve(f.transpose() * y);
}

template <typename Scalar>
struct RidgeCvResult {
  VectorX<Scalar> weights;
  Scalar penalty;
  std::vector<Scalar> cv_mse;  // aligned with the grid
};

template <typename Scalar>
RidgeCvResult<Scalar> ridge_fit_cv(const Eigen::Ref<const MatrixX<Scalar>>& f,
                                   const Eigen::Ref<const VectorX<Scalar>>& y,
                                   const std::vector<double>& grid, int folds) {
  RidgeConfig probe;
  probe.grid = grid;
  probe.folds = folds;
  probe.check();
  const Index n = f.rows();
  if (n < folds) throw DimensionMismatch("fewer rows than folds");

  RidgeCvResult<Scalar> result;
  result.cv_mse.assign(grid.size(), Scalar(0));
  for (int k = 0; k < folds; ++k) {
    const Index lo = n * k / folds;
    const Index hi = n * (k + 1) / folds;
    const Index n_val = hi - lo;
    const Index n_train = n - n_val;
    MatrixX<Scalar> f_train(n_train, f.cols());
    VectorX<Scalar> y_train(n_train);
    f_train.topRows(lo) = f.topRows(lo);
    y_train.head(lo) = y.head(lo);
    f_train.bottomRows(n - hi) = f.bottomRows(n - hi);
    y_train.tail(n - hi) = y.tail(n - hi);

    for (std::size_t g = 0; g < grid.size(); ++g) {
      const VectorX<Scalar> w = ridge_fit<Scalar>(f_train, y_train, Scalar(grid[g]));
      const VectorX<Scalar> err = f.middleRows(lo, n_val) * w - y.segment(lo, n_val);
      result.cv_mse[g] += err.squaredNorm();
    }
  }
  for (auto& m : result.cv_mse) m /= Scalar(static_cast<double>(n));

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (result.cv_mse[g] < result.cv_mse[best]) best = g;
  result.penalty = Scalar(grid[best]);
  result.weights = ridge_fit<Scalar>(f, y, result.penalty);
  return result;
}

template <typename Scalar>
VectorX<Scalar> ridge_fit(const Eigen::Ref<const MatrixX<Scalar>>& f,
                          const Eigen::Ref<const VectorX<Scalar>>& y,
                          const RidgeConfig& config) {
  config.check();
  if (config.grid.empty()) return ridge_fit<Scalar>(f, y, Scalar(config.penalty));
  return ridge_fit_cv<Scalar>(f, y, config.grid, config.folds).weights;
}

}  // namespace emband

#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <string>
#include <vector>

#include "emband/errors.hpp"
#include "emband/partition.hpp"
#include "emband/standardize.hpp"
#include "emband/types.hpp"

namespace emband {

// MAP-EM estimation of a Gaussian linear model whose prior covariance over
// the weights is block-diagonal by feature group, with one variance lambda_j
// learned per group and an inverse-gamma hyperprior on each variance:
//
//   y = F w + eps,  eps ~ N(0, nu I)
//   w ~ N(0, Lambda),  Lambda = diag over groups of lambda_j I
//   lambda_j ~ InvGamma(eta, tau),  nu ~ InvGamma(kappa, phi)
//
// E-step: posterior of w given (lambda, nu) is Gaussian with
//   sigma = (F'F / nu + Lambda^-1)^-1,  mu = sigma F' y / nu.
// M-step: unique maximizers of the expected complete-data log posterior,
//   lambda_j = (|mu_j|^2 + tr sigma_jj + 2 tau) / (D_j + 2 eta + 2)
//   nu       = (|y - F mu|^2 + tr(sigma F'F) + 2 phi) / (N + 2 kappa + 2)
// Each sweep is guaranteed not to decrease the log joint hyperparameter
// posterior log p(y | lambda, nu) + log p(lambda) + log p(nu).
//
// Larger converged lambda_j means less shrinkage on group j, so the
// normalized lambdas serve as group importance scores.

struct EmBandedConfig {
  // Inverse-gamma hyperprior on the group variances (shape eta, scale tau)
  // and on the noise variance (shape kappa, scale phi). Zero values give the
  // flat-hyperprior limit; the +2 in the update denominators keeps them valid.
  double eta = 1e-4;
  double tau = 1e-4;
  double kappa = 1e-4;
  double phi = 1e-4;

  int max_iterations = 200;
  double relative_tolerance = 1e-8;
  double lambda_init = 1.0;
  double nu_init = 1.0;

  // Groups whose variance falls below this are frozen at zero weights for
  // the rest of the fit; keeps Lambda^-1 bounded as lambda_j -> 0.
  double prune_threshold = 1e-10;

  // When false the hyperparameters stay at (lambda_init, nu_init) and the
  // fit is a single posterior evaluation (classical generalized ridge).
  bool learn_lambdas = true;

  // Consumed by the tagging layer: standardize features before fitting.
  bool standardize = true;

  void check() const {
    if (eta < 0 || tau < 0 || kappa < 0 || phi < 0)
      throw InvalidSpecError("hyperprior parameters must be non-negative");
    if (lambda_init <= 0 || nu_init <= 0)
      throw InvalidSpecError("lambda_init and nu_init must be positive");
    if (relative_tolerance <= 0) throw InvalidSpecError("relative_tolerance must be positive");
    if (max_iterations < 1) throw InvalidSpecError("max_iterations must be at least 1");
    if (prune_threshold < 0) throw InvalidSpecError("prune_threshold must be non-negative");
  }
};

template <typename Scalar>
struct Posterior {
  VectorX<Scalar> mu;      // D, zero on pruned columns
  MatrixX<Scalar> sigma;   // D x D, zero rows/columns on pruned columns
};

template <typename Scalar>
struct HyperParams {
  VectorX<Scalar> lambdas;  // J, zero for pruned groups
  Scalar nu;
};

// Solver state carried across EM sweeps.
template <typename Scalar>
struct FitState {
  VectorX<Scalar> mu;
  MatrixX<Scalar> sigma;
  VectorX<Scalar> lambdas;
  Scalar nu;
  int iteration = 0;
  std::vector<Scalar> objective_trace;
  std::vector<bool> pruned;
};

template <typename Scalar>
struct FitResult {
  VectorX<Scalar> weights;      // D, exactly zero on pruned columns
  VectorX<Scalar> lambdas;      // J, zero for pruned groups
  VectorX<Scalar> importances;  // J, non-negative, sums to 1
  Scalar nu = Scalar(0);
  bool converged = false;
  int iterations_used = 0;
  std::vector<std::string> pruned_groups;
  std::vector<Scalar> objective_trace;
};

namespace detail {

inline std::vector<bool> no_pruning(Index j) { return std::vector<bool>(static_cast<std::size_t>(j), false); }

inline std::vector<Index> active_columns(const GroupPartition& partition,
                                         const std::vector<bool>& pruned) {
  std::vector<Index> cols;
  cols.reserve(static_cast<std::size_t>(partition.total_columns));
  const auto owner = partition.column_to_group();
  for (Index c = 0; c < partition.total_columns; ++c)
    if (!pruned[static_cast<std::size_t>(owner[static_cast<std::size_t>(c)])]) cols.push_back(c);
  return cols;
}

// Cholesky with one diagonal-jitter retry (1e-10 * trace / dim). Non-finite
// factors count as failures; Cholesky does not flag NaN on its own.
template <typename Scalar>
Eigen::LLT<MatrixX<Scalar>> factor_spd(MatrixX<Scalar> a, const char* what) {
  Eigen::LLT<MatrixX<Scalar>> llt(a);
  if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) return llt;
  const Scalar jitter = Scalar(1e-10) * a.trace() / Scalar(a.rows());
  a.diagonal().array() += jitter;
  llt.compute(a);
  if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) return llt;
  throw NumericalError(std::string(what) + ": Cholesky factorization failed after jitter retry");
}

}  // namespace detail

// Gaussian posterior of the weights given the hyperparameters, restricted to
// columns of unpruned groups. Solves the D-side system when the number of
// active columns is at most N and switches to the N-side form
//   sigma = Lambda - Lambda F' (nu I + F Lambda F')^-1 F Lambda
// otherwise, so each sweep costs O(min(N, D)^3).
template <typename Scalar>
Posterior<Scalar> e_step(const Eigen::Ref<const MatrixX<Scalar>>& f,
                         const Eigen::Ref<const VectorX<Scalar>>& y,
                         const VectorX<Scalar>& lambdas, Scalar nu,
                         const GroupPartition& partition,
                         const std::vector<bool>& pruned_groups = {}) {
  const Index n = f.rows();
  const Index d = f.cols();
  if (y.size() != n) throw DimensionMismatch("target length does not match row count");
  if (d != partition.total_columns)
    throw DimensionMismatch("design width does not match partition");
  if (lambdas.size() != partition.group_count())
    throw DimensionMismatch("lambda count does not match group count");
  if (!(nu > Scalar(0))) throw DataError("noise variance must be positive");

  const std::vector<bool> pruned =
      pruned_groups.empty() ? detail::no_pruning(partition.group_count()) : pruned_groups;
  for (Index j = 0; j < partition.group_count(); ++j)
    if (!pruned[static_cast<std::size_t>(j)] && !(lambdas[j] > Scalar(0)))
      throw DataError("unpruned group variance must be positive");

  const std::vector<Index> cols = detail::active_columns(partition, pruned);
  const Index da = static_cast<Index>(cols.size());

  Posterior<Scalar> post;
  post.mu = VectorX<Scalar>::Zero(d);
  post.sigma = MatrixX<Scalar>::Zero(d, d);
  if (da == 0) return post;

  MatrixX<Scalar> fa(n, da);
  for (Index k = 0; k < da; ++k) fa.col(k) = f.col(cols[static_cast<std::size_t>(k)]);
  const VectorX<Scalar> full_var = prior_column_variances(partition, lambdas);
  VectorX<Scalar> var(da);
  for (Index k = 0; k < da; ++k) var[k] = full_var[cols[static_cast<std::size_t>(k)]];

  VectorX<Scalar> mu_a(da);
  MatrixX<Scalar> sigma_a(da, da);
  if (da <= n) {
    MatrixX<Scalar> precision = (fa.transpose() * fa) / nu;
    precision.diagonal() += var.cwiseInverse();
    auto llt = detail::factor_spd<Scalar>(std::move(precision), "e_step");
    sigma_a = llt.solve(MatrixX<Scalar>::Identity(da, da));
    mu_a = llt.solve(fa.transpose() * y) / nu;
  } else {
    MatrixX<Scalar> b = fa * var.asDiagonal();  // F Lambda
    MatrixX<Scalar> k = b * fa.transpose();     // F Lambda F'
    k.diagonal().array() += nu;
    auto llt = detail::factor_spd<Scalar>(std::move(k), "e_step");
    mu_a = b.transpose() * llt.solve(y);
    sigma_a = -b.transpose() * llt.solve(b);
    sigma_a.diagonal() += var;
  }
  sigma_a = ((sigma_a + sigma_a.transpose()) / Scalar(2)).eval();

  for (Index k = 0; k < da; ++k) {
    post.mu[cols[static_cast<std::size_t>(k)]] = mu_a[k];
    for (Index l = 0; l < da; ++l)
      post.sigma(cols[static_cast<std::size_t>(k)], cols[static_cast<std::size_t>(l)]) = sigma_a(k, l);
  }
  return post;
}

// Closed-form hyperparameter updates given the current posterior. Pruned
// groups keep variance zero.
template <typename Scalar>
HyperParams<Scalar> m_step(const VectorX<Scalar>& mu, const MatrixX<Scalar>& sigma,
                           const Eigen::Ref<const MatrixX<Scalar>>& f,
                           const Eigen::Ref<const VectorX<Scalar>>& y,
                           const GroupPartition& partition, const EmBandedConfig& config,
                           const std::vector<bool>& pruned_groups = {}) {
  const Index n = f.rows();
  if (mu.size() != f.cols() || sigma.rows() != f.cols() || sigma.cols() != f.cols())
    throw DimensionMismatch("posterior dimensions do not match design");
  const std::vector<bool> pruned =
      pruned_groups.empty() ? detail::no_pruning(partition.group_count()) : pruned_groups;

  HyperParams<Scalar> next;
  next.lambdas = VectorX<Scalar>::Zero(partition.group_count());
  for (Index j = 0; j < partition.group_count(); ++j) {
    if (pruned[static_cast<std::size_t>(j)]) continue;
    const auto& cols = partition.groups[static_cast<std::size_t>(j)].columns;
    Scalar s = Scalar(0);
    for (Index c : cols) s += mu[c] * mu[c] + sigma(c, c);
    const Scalar dj = Scalar(static_cast<double>(cols.size()));
    next.lambdas[j] = (s + Scalar(2) * Scalar(config.tau)) /
                      (dj + Scalar(2) * Scalar(config.eta) + Scalar(2));
  }

  const VectorX<Scalar> residual = y - f * mu;
  // tr(sigma F'F) accumulated column-wise keeps the reduction order fixed.
  Scalar trace_term = Scalar(0);
  for (Index c = 0; c < f.cols(); ++c) trace_term += f.col(c).dot(f * sigma.col(c));
  next.nu = (residual.squaredNorm() + trace_term + Scalar(2) * Scalar(config.phi)) /
            (Scalar(static_cast<double>(n)) + Scalar(2) * Scalar(config.kappa) + Scalar(2));
  return next;
}

// Log joint hyperparameter posterior with the weights marginalized out:
//   log N(y | 0, nu I + F Lambda F') + sum_j log InvGamma(lambda_j; eta, tau)
//     + log InvGamma(nu; kappa, phi)
// up to the hyperprior normalizing constants (dropped so the flat limit
// tau = phi = 0 stays finite). Pruned groups are excluded from both the
// covariance and the hyperprior sum.
template <typename Scalar>
Scalar log_joint_hyperposterior(const Eigen::Ref<const MatrixX<Scalar>>& f,
                                const Eigen::Ref<const VectorX<Scalar>>& y,
                                const VectorX<Scalar>& lambdas, Scalar nu,
                                const GroupPartition& partition, const EmBandedConfig& config,
                                const std::vector<bool>& pruned_groups = {}) {
  const Index n = f.rows();
  const std::vector<bool> pruned =
      pruned_groups.empty() ? detail::no_pruning(partition.group_count()) : pruned_groups;
  const std::vector<Index> cols = detail::active_columns(partition, pruned);
  const Index da = static_cast<Index>(cols.size());

  MatrixX<Scalar> fa(n, da);
  for (Index k = 0; k < da; ++k) fa.col(k) = f.col(cols[static_cast<std::size_t>(k)]);
  const VectorX<Scalar> full_var = prior_column_variances(partition, lambdas);
  VectorX<Scalar> var(da);
  for (Index k = 0; k < da; ++k) var[k] = full_var[cols[static_cast<std::size_t>(k)]];

  Scalar log_det;   // log det(nu I + F Lambda F')
  Scalar quad;      // y' (nu I + F Lambda F')^-1 y
  if (da == 0) {
    log_det = Scalar(static_cast<double>(n)) * std::log(nu);
    quad = y.squaredNorm() / nu;
  } else if (da <= n) {
    MatrixX<Scalar> precision = (fa.transpose() * fa) / nu;
    precision.diagonal() += var.cwiseInverse();
    auto llt = detail::factor_spd<Scalar>(std::move(precision), "log_joint");
    Scalar log_det_precision = Scalar(0);
    for (Index k = 0; k < da; ++k) log_det_precision += Scalar(2) * std::log(llt.matrixLLT()(k, k));
    log_det = Scalar(static_cast<double>(n)) * std::log(nu) + var.array().log().sum() +
              log_det_precision;
    const VectorX<Scalar> mu_a = llt.solve(fa.transpose() * y) / nu;
    quad = (y.squaredNorm() - y.dot(fa * mu_a)) / nu;
  } else {
    MatrixX<Scalar> k = fa * var.asDiagonal() * fa.transpose();
    k.diagonal().array() += nu;
    auto llt = detail::factor_spd<Scalar>(std::move(k), "log_joint");
    log_det = Scalar(0);
    for (Index i = 0; i < n; ++i) log_det += Scalar(2) * std::log(llt.matrixLLT()(i, i));
    quad = y.dot(llt.solve(y));
  }

  Scalar value = Scalar(-0.5) * (Scalar(static_cast<double>(n)) * Scalar(std::log(2.0 * M_PI)) +
                                 log_det + quad);
  for (Index j = 0; j < partition.group_count(); ++j) {
    if (pruned[static_cast<std::size_t>(j)]) continue;
    value += -(Scalar(config.eta) + Scalar(1)) * std::log(lambdas[j]) -
             Scalar(config.tau) / lambdas[j];
  }
  value += -(Scalar(config.kappa) + Scalar(1)) * std::log(nu) - Scalar(config.phi) / nu;
  return value;
}

// Normalized group importances: importance_j = lambda_j / sum_k lambda_k.
// Pruned groups (lambda exactly zero) get importance zero.
template <typename Scalar>
VectorX<Scalar> group_importances(const VectorX<Scalar>& lambdas) {
  if (lambdas.size() < 1) throw DimensionMismatch("no groups");
  if ((lambdas.array() < Scalar(0)).any())
    throw DataError("group variances must be non-negative");
  const Scalar total = lambdas.sum();
  if (!(total > Scalar(0))) throw DegenerateError("all groups pruned; importances undefined");
  return lambdas / total;
}

// Full MAP-EM fit. Alternates e_step and m_step from (lambda_init, nu_init)
// until the largest relative change over the unpruned variances and nu drops
// below relative_tolerance or max_iterations is reached. Groups falling
// below prune_threshold are frozen at zero weights for all later sweeps.
// The objective trace records the log joint hyperparameter posterior at the
// initial point and after every sweep. Bitwise deterministic for identical
// inputs and config.
template <typename Scalar>
FitResult<Scalar> fit(const Eigen::Ref<const MatrixX<Scalar>>& f,
                      const Eigen::Ref<const VectorX<Scalar>>& y,
                      const GroupPartition& partition, const EmBandedConfig& config) {
  partition.check();
  config.check();
  if (f.cols() != partition.total_columns)
    throw DimensionMismatch("design width does not match partition");
  if (y.size() != f.rows()) throw DimensionMismatch("target length does not match row count");

  const Index j_count = partition.group_count();
  FitState<Scalar> state;
  state.lambdas = VectorX<Scalar>::Constant(j_count, Scalar(config.lambda_init));
  state.nu = Scalar(config.nu_init);
  state.pruned.assign(static_cast<std::size_t>(j_count), false);
  state.objective_trace.push_back(log_joint_hyperposterior<Scalar>(
      f, y, state.lambdas, state.nu, partition, config, state.pruned));

  bool converged = !config.learn_lambdas;
  if (config.learn_lambdas) {
    constexpr Scalar kTiny = Scalar(1e-300);
    for (state.iteration = 1; state.iteration <= config.max_iterations; ++state.iteration) {
      Posterior<Scalar> post =
          e_step<Scalar>(f, y, state.lambdas, state.nu, partition, state.pruned);
      HyperParams<Scalar> next =
          m_step<Scalar>(post.mu, post.sigma, f, y, partition, config, state.pruned);

      Scalar rel = std::abs(next.nu - state.nu) / std::max(std::abs(state.nu), kTiny);
      for (Index j = 0; j < j_count; ++j) {
        if (state.pruned[static_cast<std::size_t>(j)]) continue;
        rel = std::max(rel, std::abs(next.lambdas[j] - state.lambdas[j]) /
                                std::max(std::abs(state.lambdas[j]), kTiny));
      }

      state.lambdas = next.lambdas;
      state.nu = next.nu;
      for (Index j = 0; j < j_count; ++j) {
        if (!state.pruned[static_cast<std::size_t>(j)] &&
            state.lambdas[j] < Scalar(config.prune_threshold)) {
          state.pruned[static_cast<std::size_t>(j)] = true;
          state.lambdas[j] = Scalar(0);
        }
      }
      state.objective_trace.push_back(log_joint_hyperposterior<Scalar>(
          f, y, state.lambdas, state.nu, partition, config, state.pruned));

      if (rel < Scalar(config.relative_tolerance)) {
        converged = true;
        break;
      }
    }
  }

  const Posterior<Scalar> post =
      e_step<Scalar>(f, y, state.lambdas, state.nu, partition, state.pruned);

  FitResult<Scalar> result;
  result.weights = post.mu;
  result.lambdas = state.lambdas;
  result.importances = group_importances(state.lambdas);
  result.nu = state.nu;
  result.converged = converged;
  result.iterations_used = config.learn_lambdas
                               ? std::min(state.iteration, config.max_iterations)
                               : 0;
  result.objective_trace = std::move(state.objective_trace);
  for (Index j = 0; j < j_count; ++j)
    if (state.pruned[static_cast<std::size_t>(j)])
      result.pruned_groups.push_back(partition.groups[static_cast<std::size_t>(j)].name);
  return result;
}

// Linear scoring of raw feature rows: standardize, apply weights, add back
// the target mean.
template <typename Scalar>
VectorX<Scalar> predict(const VectorX<Scalar>& weights, const ColumnScaling<Scalar>& scaling,
                        Scalar target_mean, const Eigen::Ref<const MatrixX<Scalar>>& raw_rows) {
  if (raw_rows.cols() != weights.size())
    throw DimensionMismatch("row width does not match weight vector");
  return (scaling.apply(raw_rows) * weights).array() + target_mean;
}

}  // namespace emband

#include <doctest.h>

#include <Eigen/LU>
#include <cmath>
#include <numeric>

#include "emband/ridge.hpp"
#include "emband/solver.hpp"
#include "emband/synthetic.hpp"
#include "test_util.hpp"

using namespace emband;

namespace {

GroupPartition contiguous_partition(const std::vector<Index>& sizes) {
  GroupPartition p;
  Index c = 0;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    GroupPartition::Group g;
    g.name = "g" + std::to_string(j + 1);
    for (Index k = 0; k < sizes[j]; ++k) g.columns.push_back(c++);
    p.groups.push_back(std::move(g));
  }
  p.total_columns = c;
  return p;
}

struct Instance {
  MatrixX<double> f;
  VectorX<double> y;
  GroupPartition partition;
};

Instance random_instance(Index n, std::vector<Index> sizes, SplitMix64& rng,
                         double noise_sd = 0.3) {
  Instance inst;
  inst.partition = contiguous_partition(sizes);
  const Index d = inst.partition.total_columns;
  inst.f = testutil::random_matrix(n, d, rng);
  const VectorX<double> w = testutil::random_vector(d, rng);
  inst.y = inst.f * w;
  for (Index i = 0; i < n; ++i) inst.y[i] += noise_sd * rng.next_gaussian();
  return inst;
}

// Direct generalized-ridge solve (F'F + nu Lambda^-1)^-1 F' y via full-pivot
// LU, independent of the Cholesky-based solver path.
VectorX<double> generalized_ridge_oracle(const MatrixX<double>& f, const VectorX<double>& y,
                                         const VectorX<double>& column_variances, double nu) {
  MatrixX<double> a = f.transpose() * f;
  a += nu * column_variances.cwiseInverse().asDiagonal().toDenseMatrix();
  return Eigen::FullPivLU<MatrixX<double>>(a).solve(f.transpose() * y);
}

}  // namespace

TEST_CASE("e_step on an orthonormal design with unit penalty") {
  MatrixX<double> f = MatrixX<double>::Identity(2, 2);
  VectorX<double> y(2);
  y << 1.0, 1.0;
  VectorX<double> lambdas(1);
  lambdas << 1.0;
  const auto p = contiguous_partition({2});
  const auto post = e_step<double>(f, y, lambdas, 1.0, p);
  CHECK((post.sigma - 0.5 * MatrixX<double>::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(post.mu[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(post.mu[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("e_step with a zero target gives a zero mean") {
  SplitMix64 rng(1);
  const auto f = testutil::random_matrix(9, 4, rng);
  const VectorX<double> y = VectorX<double>::Zero(9);
  VectorX<double> lambdas(2);
  lambdas << 0.7, 2.0;
  const auto p = contiguous_partition({2, 2});
  const auto post = e_step<double>(f, y, lambdas, 0.5, p);
  CHECK(post.mu.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("e_step matches the closed-form generalized ridge oracle within 1e-10") {
  SplitMix64 rng(42);
  SUBCASE("tall design (D-side solve)") {
    const auto inst = random_instance(6, {2, 2}, rng);
    VectorX<double> lambdas(2);
    lambdas << 0.9, 1.7;
    const double nu = 0.4;
    const auto post = e_step<double>(inst.f, inst.y, lambdas, nu, inst.partition);
    const auto vars = prior_column_variances(inst.partition, lambdas);
    const auto oracle = generalized_ridge_oracle(inst.f, inst.y, vars, nu);
    CHECK((post.mu - oracle).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("wide design (N-side solve)") {
    const auto inst = random_instance(5, {4, 4}, rng);
    VectorX<double> lambdas(2);
    lambdas << 1.3, 0.6;
    const double nu = 0.8;
    const auto post = e_step<double>(inst.f, inst.y, lambdas, nu, inst.partition);
    const auto vars = prior_column_variances(inst.partition, lambdas);
    const auto oracle = generalized_ridge_oracle(inst.f, inst.y, vars, nu);
    CHECK((post.mu - oracle).cwiseAbs().maxCoeff() < 1e-10);

    // the two solve paths agree on sigma as well
    MatrixX<double> a = (inst.f.transpose() * inst.f) / nu;
    a += vars.cwiseInverse().asDiagonal().toDenseMatrix();
    const MatrixX<double> sigma_oracle = Eigen::FullPivLU<MatrixX<double>>(a).inverse();
    CHECK((post.sigma - sigma_oracle).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("e_step zeroes pruned groups and matches the reduced solve") {
  SplitMix64 rng(9);
  const auto inst = random_instance(12, {2, 3}, rng);
  VectorX<double> lambdas(2);
  lambdas << 0.0, 1.1;
  std::vector<bool> pruned = {true, false};
  const auto post = e_step<double>(inst.f, inst.y, lambdas, 0.7, inst.partition, pruned);
  for (Index c : inst.partition.groups[0].columns) {
    CHECK(post.mu[c] == 0.0);
    CHECK(post.sigma.row(c).cwiseAbs().maxCoeff() == 0.0);
    CHECK(post.sigma.col(c).cwiseAbs().maxCoeff() == 0.0);
  }
  MatrixX<double> f_active = inst.f.rightCols(3);
  VectorX<double> lam_active(1);
  lam_active << 1.1;
  const auto p_active = contiguous_partition({3});
  const auto reduced = e_step<double>(f_active, inst.y, lam_active, 0.7, p_active);
  for (Index k = 0; k < 3; ++k) CHECK(post.mu[2 + k] == doctest::Approx(reduced.mu[k]).epsilon(1e-14));
}

TEST_CASE("e_step raises NumericalError when the system cannot be factored") {
  MatrixX<double> f(2, 2);
  f << 1.0, 2.0, 3.0, std::nan("");
  VectorX<double> y(2);
  y << 1.0, 1.0;
  VectorX<double> lambdas(1);
  lambdas << 1.0;
  const auto p = contiguous_partition({2});
  CHECK_THROWS_AS(e_step<double>(f, y, lambdas, 1.0, p), NumericalError);
}

TEST_CASE("m_step closed forms at hand-computable points") {
  const auto p = contiguous_partition({3});
  const Index n = 10, d = 3;
  SplitMix64 rng(4);
  const auto f = testutil::random_matrix(n, d, rng);

  EmBandedConfig config;
  config.eta = config.tau = config.kappa = config.phi = 1e-4;

  SUBCASE("zero posterior gives the prior-dominated lambda") {
    const VectorX<double> mu = VectorX<double>::Zero(d);
    const MatrixX<double> sigma = MatrixX<double>::Zero(d, d);
    const VectorX<double> y = f * VectorX<double>::Ones(d);
    const auto up = m_step<double>(mu, sigma, f, y, p, config);
    CHECK(up.lambdas[0] == doctest::Approx(2e-4 / (3.0 + 2.0002)).epsilon(1e-12));
  }
  SUBCASE("exact interpolation gives the prior-dominated nu") {
    const VectorX<double> mu = VectorX<double>::Ones(d);
    const MatrixX<double> sigma = MatrixX<double>::Zero(d, d);
    const VectorX<double> y = f * mu;  // zero residual
    const auto up = m_step<double>(mu, sigma, f, y, p, config);
    CHECK(up.nu == doctest::Approx(2e-4 / 12.0002).epsilon(1e-12));
  }
}

TEST_CASE("m_step updates maximize the expected log posterior (golden-section oracle)") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 8 + static_cast<Index>(rng.next_below(20));
    const auto inst = random_instance(n, {2, 3}, rng);
    EmBandedConfig config;

    VectorX<double> lambdas(2);
    lambdas << 0.5 + rng.next_double(), 0.5 + rng.next_double();
    const double nu = 0.2 + rng.next_double();
    const auto post = e_step<double>(inst.f, inst.y, lambdas, nu, inst.partition);
    const auto up = m_step<double>(post.mu, post.sigma, inst.f, inst.y, inst.partition, config);

    for (Index j = 0; j < 2; ++j) {
      double s = 0.0;
      for (Index c : inst.partition.groups[static_cast<std::size_t>(j)].columns)
        s += post.mu[c] * post.mu[c] + post.sigma(c, c);
      const double dj = static_cast<double>(inst.partition.group_size(j));
      auto q = [&](double lam) {
        return -0.5 * dj * std::log(lam) - s / (2.0 * lam) -
               (config.eta + 1.0) * std::log(lam) - config.tau / lam;
      };
      const double oracle =
          testutil::golden_section_max(q, 1e-12, s + 2.0 * config.tau + 1.0, 1e-12);
      CHECK(std::abs(up.lambdas[j] - oracle) / oracle < 1e-6);
    }

    const double rss = (inst.y - inst.f * post.mu).squaredNorm();
    double trace_term = 0.0;
    const MatrixX<double> ftf = inst.f.transpose() * inst.f;
    trace_term = (post.sigma.cwiseProduct(ftf)).sum();
    const double r = rss + trace_term;
    auto q_nu = [&](double v) {
      return -0.5 * static_cast<double>(n) * std::log(v) - r / (2.0 * v) -
             (config.kappa + 1.0) * std::log(v) - config.phi / v;
    };
    const double nu_oracle =
        testutil::golden_section_max(q_nu, 1e-12, r + 2.0 * config.phi + 1.0, 1e-12);
    CHECK(std::abs(up.nu - nu_oracle) / nu_oracle < 1e-6);
  }
}

TEST_CASE("fit on a zero target converges to the prior-dominated fixed point") {
  SplitMix64 rng(5);
  const Index n = 100;
  const auto p = contiguous_partition({2, 3});
  const auto f = testutil::random_matrix(n, p.total_columns, rng);
  const VectorX<double> y = VectorX<double>::Zero(n);
  EmBandedConfig config;
  const auto result = fit<double>(f, y, p, config);
  CHECK(result.converged);
  CHECK(result.weights.cwiseAbs().maxCoeff() == 0.0);
  for (Index j = 0; j < 2; ++j) {
    const double dj = static_cast<double>(p.group_size(j));
    const double expected = 2.0 * config.tau / (dj + 2.0 * config.eta + 2.0);
    CHECK(std::abs(result.lambdas[j] - expected) / expected < 1e-3);
  }
}

TEST_CASE("fixed lambdas reduce the fit to classical ridge within 1e-10") {
  SplitMix64 rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 10 + static_cast<Index>(rng.next_below(60));
    const Index d = 2 + static_cast<Index>(rng.next_below(20));
    const auto f = testutil::random_matrix(n, d, rng);
    const auto y = testutil::random_vector(n, rng);
    const double lambda0 = 0.3 + rng.next_double();
    const double nu0 = 0.2 + rng.next_double();

    EmBandedConfig config;
    config.learn_lambdas = false;
    config.lambda_init = lambda0;
    config.nu_init = nu0;
    const auto p = contiguous_partition({d});
    const auto result = fit<double>(f, y, p, config);
    CHECK(result.converged);
    CHECK(result.iterations_used == 0);

    const auto w_ridge = ridge_fit<double>(f, y, nu0 / lambda0);
    CHECK((result.weights - w_ridge).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("objective trace is non-decreasing on random instances (both solve paths)") {
  SplitMix64 rng(111);
  for (int trial = 0; trial < 8; ++trial) {
    const bool wide = trial % 2 == 1;
    const Index n = wide ? 10 + static_cast<Index>(rng.next_below(10))
                         : 30 + static_cast<Index>(rng.next_below(40));
    std::vector<Index> sizes;
    const Index j = 1 + static_cast<Index>(rng.next_below(4));
    Index d_total = 0;
    for (Index g = 0; g < j; ++g) {
      const Index s = 1 + static_cast<Index>(rng.next_below(wide ? 12 : 6));
      sizes.push_back(s);
      d_total += s;
    }
    if (wide && d_total <= n) sizes.back() += n - d_total + 3;

    const auto inst = random_instance(n, sizes, rng);
    EmBandedConfig config;
    config.max_iterations = 80;
    const auto result = fit<double>(inst.f, inst.y, inst.partition, config);
    REQUIRE(result.objective_trace.size() >= 2);
    for (std::size_t i = 0; i + 1 < result.objective_trace.size(); ++i) {
      const double slack = 1e-10 * std::max(1.0, std::abs(result.objective_trace[i]));
      CHECK(result.objective_trace[i + 1] >= result.objective_trace[i] - slack);
    }
  }
}

TEST_CASE("one extra EM sweep at convergence moves hyperparameters below 10x tolerance") {
  SplitMix64 rng(13);
  const auto inst = random_instance(50, {3, 4}, rng);
  EmBandedConfig config;
  const auto result = fit<double>(inst.f, inst.y, inst.partition, config);
  REQUIRE(result.converged);

  const auto post = e_step<double>(inst.f, inst.y, result.lambdas, result.nu, inst.partition);
  const auto up = m_step<double>(post.mu, post.sigma, inst.f, inst.y, inst.partition, config);
  for (Index j = 0; j < 2; ++j)
    CHECK(std::abs(up.lambdas[j] - result.lambdas[j]) / result.lambdas[j] <
          10.0 * config.relative_tolerance);
  CHECK(std::abs(up.nu - result.nu) / result.nu < 10.0 * config.relative_tolerance);
}

TEST_CASE("converged hyperparameters are a stationary point of the log joint (grid check)") {
  SplitMix64 rng(21);
  const auto inst = random_instance(12, {2}, rng);
  EmBandedConfig config;
  config.relative_tolerance = 1e-12;
  config.max_iterations = 2000;
  const auto result = fit<double>(inst.f, inst.y, inst.partition, config);
  REQUIRE(result.converged);

  const double center = log_joint_hyperposterior<double>(
      inst.f, inst.y, result.lambdas, result.nu, inst.partition, config);
  for (double delta : {1e-3, 1e-2, 1e-1}) {
    for (double sign : {-1.0, 1.0}) {
      VectorX<double> lam = result.lambdas * (1.0 + sign * delta);
      const double shifted_lambda = log_joint_hyperposterior<double>(
          inst.f, inst.y, lam, result.nu, inst.partition, config);
      CHECK(shifted_lambda <= center + 1e-10 * std::abs(center));

      const double shifted_nu = log_joint_hyperposterior<double>(
          inst.f, inst.y, result.lambdas, result.nu * (1.0 + sign * delta), inst.partition,
          config);
      CHECK(shifted_nu <= center + 1e-10 * std::abs(center));
    }
  }
}

TEST_CASE("permuting columns together with the partition permutes the fit") {
  SplitMix64 rng(31);
  const Index n = 60;
  const auto inst = random_instance(n, {3, 2, 4}, rng);
  const Index d = inst.partition.total_columns;

  std::vector<Index> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), Index(0));
  shuffle(perm, rng);  // column c of the original lands at perm[c]

  MatrixX<double> f_perm(n, d);
  for (Index c = 0; c < d; ++c) f_perm.col(perm[static_cast<std::size_t>(c)]) = inst.f.col(c);
  GroupPartition p_perm = inst.partition;
  for (auto& g : p_perm.groups)
    for (auto& c : g.columns) c = perm[static_cast<std::size_t>(c)];

  EmBandedConfig config;
  const auto base = fit<double>(inst.f, inst.y, inst.partition, config);
  const auto permuted = fit<double>(f_perm, inst.y, p_perm, config);

  for (Index c = 0; c < d; ++c)
    CHECK(std::abs(permuted.weights[perm[static_cast<std::size_t>(c)]] - base.weights[c]) <
          1e-12);
  CHECK((permuted.lambdas - base.lambdas).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((permuted.importances - base.importances).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(permuted.nu - base.nu) < 1e-12 * std::abs(base.nu));
}

TEST_CASE("relabeling groups permutes lambdas and changes nothing else, exactly") {
  SplitMix64 rng(37);
  const auto inst = random_instance(40, {2, 3, 2}, rng);
  GroupPartition reordered;
  reordered.total_columns = inst.partition.total_columns;
  reordered.groups = {inst.partition.groups[2], inst.partition.groups[0],
                      inst.partition.groups[1]};

  EmBandedConfig config;
  const auto base = fit<double>(inst.f, inst.y, inst.partition, config);
  const auto relabeled = fit<double>(inst.f, inst.y, reordered, config);

  CHECK(relabeled.weights == base.weights);
  CHECK(relabeled.nu == base.nu);
  CHECK(relabeled.lambdas[0] == base.lambdas[2]);
  CHECK(relabeled.lambdas[1] == base.lambdas[0]);
  CHECK(relabeled.lambdas[2] == base.lambdas[1]);
  // the importance normalizer sums the permuted lambdas, so only the
  // reduction order differs
  CHECK(relabeled.importances[0] == doctest::Approx(base.importances[2]).epsilon(1e-14));
}

TEST_CASE("flat-hyperprior fits are scale covariant") {
  SplitMix64 rng(41);
  const auto inst = random_instance(30, {3, 3}, rng, 0.5);
  EmBandedConfig config;
  config.eta = config.tau = config.kappa = config.phi = 0.0;
  config.relative_tolerance = 1e-12;
  config.max_iterations = 3000;

  const auto base = fit<double>(inst.f, inst.y, inst.partition, config);
  const double c = 2.7;
  const auto scaled = fit<double>(inst.f, (c * inst.y).eval(), inst.partition, config);

  REQUIRE(base.converged);
  REQUIRE(scaled.converged);
  CHECK((scaled.weights - c * base.weights).cwiseAbs().maxCoeff() <
        1e-6 * base.weights.cwiseAbs().maxCoeff());
  for (Index j = 0; j < 2; ++j)
    CHECK(std::abs(scaled.lambdas[j] - c * c * base.lambdas[j]) / (c * c * base.lambdas[j]) <
          1e-6);
  CHECK(std::abs(scaled.nu - c * c * base.nu) / (c * c * base.nu) < 1e-6);
  CHECK((scaled.importances - base.importances).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("target scaling keeps the dominant group dominant under nonzero hyperpriors") {
  PlantedSpec spec;
  spec.n_samples = 200;
  spec.group_sizes = {5, 5, 5};
  spec.active_groups = {0};
  spec.noise_sd = 0.1;
  spec.seed = 99;
  const auto data = generate(spec);
  const auto resolved = data.groups.resolve(data.dataset.feature_names);

  EmBandedConfig config;
  for (double c : {0.5, 1.0, 2.0}) {
    const VectorX<double> y = c * data.dataset.labels.col(0);
    const auto result = fit<double>(data.dataset.x, (y.array() - y.mean()).matrix().eval(),
                                    resolved.partition, config);
    Index argmax = 0;
    result.importances.maxCoeff(&argmax);
    CHECK(argmax == 0);
  }
}

TEST_CASE("groups pruned during a fit end with exactly zero weights") {
  PlantedSpec spec;
  spec.n_samples = 150;
  spec.group_sizes = {4, 4};
  spec.active_groups = {0};
  spec.noise_sd = 0.05;
  spec.seed = 7;
  const auto data = generate(spec);
  const auto resolved = data.groups.resolve(data.dataset.feature_names);

  EmBandedConfig config;
  config.tau = 0.0;  // flat scale lets empty groups shrink all the way
  config.phi = 0.0;
  config.prune_threshold = 1e-10;
  config.max_iterations = 500;
  VectorX<double> y = data.dataset.labels.col(0);
  y.array() -= y.mean();
  const auto result = fit<double>(data.dataset.x, y, resolved.partition, config);

  REQUIRE(result.pruned_groups.size() == 1);
  CHECK(result.pruned_groups[0] == resolved.partition.groups[1].name);
  CHECK(result.lambdas[1] == 0.0);
  for (Index c : resolved.partition.groups[1].columns) CHECK(result.weights[c] == 0.0);
  CHECK(result.importances[1] == 0.0);
  CHECK(result.importances[0] == 1.0);
}

TEST_CASE("group importances normalize lambdas") {
  SUBCASE("uniform") {
    VectorX<double> lambdas = VectorX<double>::Ones(5);
    const auto imp = group_importances(lambdas);
    for (Index j = 0; j < 5; ++j) CHECK(imp[j] == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("normalization") {
    VectorX<double> lambdas(2);
    lambdas << 3.0, 1.0;
    const auto imp = group_importances(lambdas);
    CHECK(imp[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(imp[1] == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("pruned groups get zero") {
    VectorX<double> lambdas(2);
    lambdas << 0.0, 2.0;
    const auto imp = group_importances(lambdas);
    CHECK(imp[0] == 0.0);
    CHECK(imp[1] == 1.0);
  }
  SUBCASE("all pruned is degenerate") {
    VectorX<double> lambdas = VectorX<double>::Zero(3);
    CHECK_THROWS_AS(group_importances(lambdas), DegenerateError);
  }
}

TEST_CASE("fit is bitwise deterministic") {
  SplitMix64 rng(55);
  const auto inst = random_instance(35, {2, 3}, rng);
  EmBandedConfig config;
  const auto a = fit<double>(inst.f, inst.y, inst.partition, config);
  const auto b = fit<double>(inst.f, inst.y, inst.partition, config);
  CHECK(a.weights == b.weights);
  CHECK(a.lambdas == b.lambdas);
  CHECK(a.nu == b.nu);
  CHECK(a.objective_trace == b.objective_trace);
}

TEST_CASE("predict maps raw rows through the scaling record") {
  SplitMix64 rng(61);
  const Index n = 30, d = 4;
  const auto x = testutil::random_matrix(n, d, rng);
  ColumnScaling<double> scaling;
  standardize_columns<double>(x, scaling);
  const double target_mean = 3.25;

  SUBCASE("zero weights score at the target mean") {
    const VectorX<double> w = VectorX<double>::Zero(d);
    const auto rows = testutil::random_matrix(5, d, rng);
    const auto scores = predict<double>(w, scaling, target_mean, rows);
    for (Index i = 0; i < 5; ++i) CHECK(scores[i] == doctest::Approx(target_mean));
  }
  SUBCASE("a row at the column means scores at the target mean") {
    const VectorX<double> w = testutil::random_vector(d, rng);
    MatrixX<double> row = scaling.mean.transpose();
    const auto scores = predict<double>(w, scaling, target_mean, row);
    CHECK(scores[0] == doctest::Approx(target_mean).epsilon(1e-12));
  }
  SUBCASE("width mismatch raises") {
    const VectorX<double> w = VectorX<double>::Zero(d);
    const auto rows = testutil::random_matrix(2, d + 1, rng);
    CHECK_THROWS_AS(predict<double>(w, scaling, target_mean, rows), DimensionMismatch);
  }
}

TEST_CASE("solver instantiates with float scalars") {
  MatrixX<float> f = MatrixX<float>::Identity(3, 3);
  VectorX<float> y(3);
  y << 1.f, 2.f, 3.f;
  const auto p = contiguous_partition({3});
  EmBandedConfig config;
  config.max_iterations = 20;
  config.relative_tolerance = 1e-4;
  const auto result = fit<float>(f, y, p, config);
  CHECK(result.weights.size() == 3);
  CHECK(result.importances[0] == doctest::Approx(1.0f));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "redistopt/lowrank.hpp"
#include "redistopt/models.hpp"

using namespace redistopt;

namespace {

ObservedMatrix full_observation(const Eigen::MatrixXd& o) {
  ObservedMatrix data;
  data.rows = o.rows();
  data.cols = o.cols();
  for (int i = 0; i < o.rows(); ++i) {
    for (int j = 0; j < o.cols(); ++j) {
      data.entries.push_back({i, j, o(i, j)});
    }
  }
  data.finalize();
  return data;
}

FactoredMatrix random_factor(SplitRng& rng, int m, int n, int k) {
  Eigen::MatrixXd a = oracles::random_matrix(rng, m, k);
  Eigen::MatrixXd b = oracles::random_matrix(rng, n, k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qa(a), qb(b);
  FactoredMatrix x;
  x.u = qa.householderQ() * Eigen::MatrixXd::Identity(m, k);
  x.v = qb.householderQ() * Eigen::MatrixXd::Identity(n, k);
  Eigen::MatrixXd c = oracles::random_matrix(rng, k, k);
  x.b = c * c.transpose() + 0.1 * Eigen::MatrixXd::Identity(k, k);
  return x;
}

Eigen::MatrixXd densify_factor(const FactoredMatrix& x) {
  if (x.empty()) return Eigen::MatrixXd();
  return x.u * x.b * x.v.transpose();
}

double spectral_bar_dense(const Eigen::MatrixXd& m, const KappaSpec& spec,
                          double mu) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return bar_spectral(spec, svd.singularValues(), mu).value;
}

}  // namespace

TEST_CASE("observed matrix validation") {
  ObservedMatrix data;
  data.rows = 2;
  data.cols = 2;
  data.entries = {{0, 0, 1.0}, {1, 1, 2.0}, {0, 0, 3.0}};
  CHECK_THROWS_AS(data.finalize(), std::invalid_argument);
  data.entries = {{0, 5, 1.0}};
  CHECK_THROWS_AS(data.finalize(), std::invalid_argument);
}

TEST_CASE("completion loss values and residuals") {
  SplitRng rng(1);
  const FactoredMatrix x = random_factor(rng, 5, 4, 2);
  const Eigen::MatrixXd dense = densify_factor(x);
  const ObservedMatrix data = full_observation(dense);
  CHECK(completion_value(x, data) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(completion_residual(x, data).norm() <= 1e-10);

  ObservedMatrix single;
  single.rows = 3;
  single.cols = 3;
  single.entries = {{1, 1, 5.0}};
  single.finalize();
  FactoredMatrix two;
  two.u = Eigen::MatrixXd::Zero(3, 1);
  two.u(1, 0) = 1.0;
  two.v = Eigen::MatrixXd::Zero(3, 1);
  two.v(1, 0) = 1.0;
  two.b = Eigen::MatrixXd::Constant(1, 1, 2.0);
  CHECK(completion_value(two, single) == doctest::Approx(4.5).epsilon(1e-14));
  CHECK(completion_residual(two, single)[0] == doctest::Approx(-3.0).epsilon(1e-14));
}

TEST_CASE("completion gradient matches finite differences through the factor") {
  SplitRng rng(3);
  const CompletionInstance inst = synth_completion(12, 9, 2, 0.3, 0.0, 0.0, 9);
  FactoredMatrix x = random_factor(rng, 12, 9, 3);
  const Eigen::VectorXd resid = completion_residual(x, inst.train);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(12, 9);
  for (std::size_t e = 0; e < inst.train.entries.size(); ++e) {
    r(inst.train.entries[e].row, inst.train.entries[e].col) =
        resid[static_cast<Eigen::Index>(e)];
  }
  // df/dB = U^T R V against central differences in a random direction.
  Eigen::MatrixXd dir = oracles::random_matrix(rng, 3, 3);
  dir = 0.5 * (dir + dir.transpose());
  const Eigen::MatrixXd grad_b = x.u.transpose() * r * x.v;
  const double h = 1e-6;
  FactoredMatrix xp = x, xm = x;
  xp.b += h * dir;
  xm.b -= h * dir;
  const double fd =
      (completion_value(xp, inst.train) - completion_value(xm, inst.train)) /
      (2.0 * h);
  const double analytic = grad_b.cwiseProduct(dir).sum();
  CHECK(std::abs(fd - analytic) <= 1e-5 * (1.0 + std::abs(analytic)));
}

TEST_CASE("rank1_svd on structured operators") {
  ObservedMatrix diag;
  diag.rows = 2;
  diag.cols = 2;
  diag.entries = {{0, 0, 3.0}, {1, 1, 1.0}};
  diag.finalize();
  GradOperator op;
  op.pattern = &diag;
  op.sparse_values.resize(2);
  op.sparse_values << 3.0, 1.0;
  const Rank1Triplet top = rank1_svd(op, 7);
  CHECK(top.s == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(std::abs(top.u[0]) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(top.v[0]) == doctest::Approx(1.0).epsilon(1e-6));

  // Rank-one operator: exact singular triplet.
  SplitRng rng(11);
  const Eigen::VectorXd a = oracles::random_vector(rng, 6);
  const Eigen::VectorXd b = oracles::random_vector(rng, 5);
  ObservedMatrix pattern;
  pattern.rows = 6;
  pattern.cols = 5;
  pattern.finalize();
  GradOperator outer;
  outer.pattern = &pattern;
  outer.sparse_values.resize(0);
  outer.p = a;
  outer.q = b;
  outer.w = Eigen::VectorXd::Ones(1);
  outer.scale = 1.0;
  const Rank1Triplet r1 = rank1_svd(outer, 13);
  CHECK(r1.s == doctest::Approx(a.norm() * b.norm()).epsilon(1e-9));
  CHECK(std::abs(r1.u.dot(a / a.norm())) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(r1.v.dot(b / b.norm())) == doctest::Approx(1.0).epsilon(1e-8));

  // Random sparse operator vs dense SVD.
  const CompletionInstance inst = synth_completion(50, 40, 4, 0.25, 0.0, 0.1, 3);
  GradOperator sparse;
  sparse.pattern = &inst.train;
  sparse.sparse_values.resize(static_cast<Eigen::Index>(inst.train.entries.size()));
  for (std::size_t e = 0; e < inst.train.entries.size(); ++e) {
    sparse.sparse_values[static_cast<Eigen::Index>(e)] =
        inst.train.entries[e].value;
  }
  const Rank1Triplet rs = rank1_svd(sparse, 17);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sparse.dense());
  CHECK(std::abs(rs.s - svd.singularValues()[0]) <=
        1e-5 * svd.singularValues()[0]);

  // Zero operator returns s = 0.
  GradOperator zero;
  zero.pattern = &pattern;
  zero.sparse_values.resize(0);
  const Rank1Triplet rz = rank1_svd(zero, 19);
  CHECK(rz.s == 0.0);
  CHECK(rz.u.norm() == doctest::Approx(1.0));
}

TEST_CASE("fw_qp degenerate and edge cases") {
  FwQpCoefficients empty;
  empty.s = -2.0;
  const FwStep step = fw_qp(empty, 1.0, 0.5);
  CHECK(step.beta == doctest::Approx(1.5).epsilon(1e-14));

  FwQpCoefficients nonneg;
  nonneg.s = 0.3;
  const FwStep none = fw_qp(nonneg, 1.0, 0.5);
  CHECK(none.beta == 0.0);

  CHECK_THROWS_AS(fw_qp(empty, 0.0, 0.5), std::domain_error);
}

TEST_CASE("fw_qp beats a dense grid on random coefficient draws") {
  SplitRng rng(23);
  for (int rep = 0; rep < 5; ++rep) {
    FwQpCoefficients c;
    const double f1 = 0.2 + 2.0 * rng.uniform();
    c.b_fro_sq = f1;
    c.cross = std::sqrt(f1) * (2.0 * rng.uniform() - 1.0) * 0.9;
    c.s = -3.0 * rng.uniform();
    c.grad_inner = 2.0 * (rng.uniform() - 0.5);
    c.b_nuclear = std::sqrt(f1) * (1.0 + rng.uniform());
    const double lbar = 0.5 + rng.uniform();
    const double mubar = 0.5 * rng.uniform();
    const FwStep step = fw_qp(c, lbar, mubar);
    const auto objective = [&](double alpha, double beta) {
      const double am1 = alpha - 1.0;
      return 0.5 * lbar * c.b_fro_sq * am1 * am1 + lbar * c.cross * am1 * beta +
             0.5 * lbar * beta * beta + c.s * beta + c.grad_inner * alpha +
             mubar * (alpha * c.b_nuclear + beta);
    };
    double grid_best = objective(0.0, 0.0);
    for (int i = 0; i < 400; ++i) {
      for (int j = 0; j < 400; ++j) {
        grid_best = std::min(grid_best, objective(3.0 * i / 399.0, 3.0 * j / 399.0));
      }
    }
    CHECK(objective(step.alpha, step.beta) <= grid_best + 1e-8);
  }
}

TEST_CASE("warmstart reconstruction is exact before projection") {
  SplitRng rng(29);
  // Identity case: alpha = 1, beta = 0 reproduces the factor exactly.
  {
    const FactoredMatrix x = random_factor(rng, 6, 5, 2);
    const Eigen::VectorXd u = oracles::random_vector(rng, 6).normalized();
    const Eigen::VectorXd v = oracles::random_vector(rng, 5).normalized();
    const WarmstartResult ws = warmstart(x, u, v, 1.0, 0.0);
    CHECK((densify_factor(ws.factor) - densify_factor(x)).norm() <= 1e-10);
  }
  // Empty factor with beta = 1 returns (u, [1], v).
  {
    FactoredMatrix empty;
    const Eigen::VectorXd u = oracles::random_vector(rng, 6).normalized();
    const Eigen::VectorXd v = oracles::random_vector(rng, 5).normalized();
    const WarmstartResult ws = warmstart(empty, u, v, 0.0, 1.0);
    CHECK(ws.factor.rank() == 1);
    CHECK(ws.factor.b(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((densify_factor(ws.factor) - u * v.transpose()).norm() <= 1e-10);
  }
  // 100 random instances: u_basis * b_raw * v_basis^T is exact.
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 1 + static_cast<int>(rng.uniform_int(0, 2));
    const FactoredMatrix x = random_factor(rng, 6, 5, k);
    const Eigen::VectorXd u = oracles::random_vector(rng, 6).normalized();
    const Eigen::VectorXd v = oracles::random_vector(rng, 5).normalized();
    const double alpha = rng.uniform();
    const double beta = rng.uniform();
    const WarmstartResult ws = warmstart(x, u, v, alpha, beta);
    const Eigen::MatrixXd target =
        alpha * densify_factor(x) + beta * u * v.transpose();
    const Eigen::MatrixXd raw =
        ws.u_basis * ws.b_raw * ws.v_basis.transpose();
    CHECK((raw - target).norm() <= 1e-10);
    CHECK(ws.factor.invariant_violation() <= 1e-8);
  }
}

TEST_CASE("spectral invariance of the concave remainder") {
  SplitRng rng(31);
  const KappaSpec spec(KappaVariant::lsp, 1.0, 0.7);
  for (int rep = 0; rep < 20; ++rep) {
    const FactoredMatrix x = random_factor(rng, 7, 6, 3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.b);
    const double direct = bar_spectral(spec, es.eigenvalues().cwiseMax(0.0), 1.3).value;
    const double via_dense = spectral_bar_dense(densify_factor(x), spec, 1.3);
    CHECK(std::abs(direct - via_dense) <= 1e-8);
  }
}

TEST_CASE("transformed gradient matches directional finite differences") {
  SplitRng rng(37);
  const CompletionInstance inst = synth_completion(10, 8, 2, 0.5, 0.0, 0.05, 7);
  const KappaSpec spec(KappaVariant::lsp, 1.0, 0.7);
  const double mu = 0.8;
  const double kappa0 = derived_constants(spec).kappa0;

  const FactoredMatrix x = random_factor(rng, 10, 8, 3);
  // fbar along B: f(U B V^T) + mu sum(kappa(sigma_i(B)) - kappa0 sigma_i(B)).
  const auto fbar = [&](const Eigen::MatrixXd& b) {
    FactoredMatrix probe = x;
    probe.b = b;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b + b.transpose()));
    return completion_value(probe, inst.train) +
           bar_spectral(spec, es.eigenvalues().cwiseMax(0.0), mu).value;
  };
  // Analytic gradient in B: U^T R V + mu Q diag(w) Q^T.
  const Eigen::VectorXd resid = completion_residual(x, inst.train);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(10, 8);
  for (std::size_t e = 0; e < inst.train.entries.size(); ++e) {
    r(inst.train.entries[e].row, inst.train.entries[e].col) =
        resid[static_cast<Eigen::Index>(e)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.b);
  Eigen::VectorXd w(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w[i] = kappa_derivative(spec, std::max(es.eigenvalues()[i], 0.0)) - kappa0;
  }
  const Eigen::MatrixXd grad =
      x.u.transpose() * r * x.v +
      mu * es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();

  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd dir = oracles::random_matrix(rng, 3, 3);
    dir = 0.5 * (dir + dir.transpose());
    const double h = 1e-6;
    const double fd = (fbar(x.b + h * dir) - fbar(x.b - h * dir)) / (2.0 * h);
    const double analytic = grad.cwiseProduct(dir).sum();
    CHECK(std::abs(fd - analytic) <= 1e-4 * (1.0 + std::abs(analytic)));
  }
}

TEST_CASE("local_optimize never increases the objective") {
  SplitRng rng(41);
  const KappaSpec spec(KappaVariant::lsp, 1.0, 0.7);
  const double mu = 0.5;

  // Random perturbation of an exact rank-2 factorization, fully observed.
  Eigen::MatrixXd truth =
      oracles::random_matrix(rng, 8, 6, 1.0).leftCols(2) *
      oracles::random_matrix(rng, 6, 6, 1.0).topRows(2);
  const ObservedMatrix data = full_observation(truth);
  FactoredMatrix x = random_factor(rng, 8, 6, 2);
  const double before = factored_objective(x, data, &spec, mu);
  const FactoredMatrix improved = local_optimize(x, data, &spec, mu, 30);
  const double after = factored_objective(improved, data, &spec, mu);
  CHECK(after < before);
  CHECK(improved.invariant_violation() <= 1e-8);

  // Spectral invariance holds for the returned factor.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(improved.b);
  const double via_b = bar_spectral(spec, es.eigenvalues().cwiseMax(0.0), mu).value;
  const double via_x = spectral_bar_dense(densify_factor(improved), spec, mu);
  CHECK(std::abs(via_b - via_x) <= 1e-8);
}

TEST_CASE("fw_solve single step from zero") {
  const CompletionInstance inst = synth_completion(10, 8, 2, 0.6, 0.0, 0.0, 21);
  const KappaSpec spec(KappaVariant::lsp, 1.0, 1.0);
  const double mu = 0.5;
  FwParams params;
  params.seed = 5;
  params.local_sweeps = 0;  // isolate the warm-start step
  FwResult result = fw_solve(inst.train, &spec, mu, 1, params);
  REQUIRE(result.trace.rows.size() == 1);
  CHECK(result.factor.rank() == 1);
  // X_1 = beta_1 * atom with beta_1 = (s_1 - mubar) / Lbar from the
  // degenerate program; here Lbar = 1 + 2 rho mu and mubar = mu kappa0.
  GradOperator op;
  op.pattern = &inst.train;
  op.sparse_values = completion_residual(FactoredMatrix{}, inst.train);
  const Rank1Triplet top =
      rank1_svd(op, SplitRng(5).split(std::uint64_t{1}).next_u64());
  const auto constants = derived_constants(spec);
  const double lbar = 1.0 + 2.0 * constants.rho * mu;
  const double mubar = mu * constants.kappa0;
  const double expected_beta = std::max(0.0, (top.s - mubar) / lbar);
  CHECK(std::abs(densify_factor(result.factor).norm() - expected_beta) <= 1e-8);
}

TEST_CASE("fw_solve convex path agrees with singular value thresholding") {
  const CompletionInstance inst = synth_completion(10, 8, 2, 0.8, 0.0, 0.0, 33);
  const double mu = 0.3;
  FwParams params;
  params.seed = 9;
  FwResult fw = fw_solve(inst.train, nullptr, mu, 80, params);

  // Independent proximal-gradient oracle with dense SVT steps.
  Eigen::MatrixXd o = Eigen::MatrixXd::Zero(10, 8);
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(10, 8);
  for (const auto& e : inst.train.entries) {
    o(e.row, e.col) = e.value;
    mask(e.row, e.col) = 1.0;
  }
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 8);
  for (int it = 0; it < 4000; ++it) {
    const Eigen::MatrixXd grad = mask.cwiseProduct(x - o);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x - grad, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = std::max(0.0, s[i] - mu);
    x = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  }
  const auto objective = [&](const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return 0.5 * mask.cwiseProduct(m - o).squaredNorm() +
           mu * svd.singularValues().sum();
  };
  const double f_fw = fw.trace.rows.back().objective;
  const double f_svt = objective(x);
  CHECK(f_fw <= f_svt + 1e-6);
  CHECK(f_fw >= f_svt - 1e-6);
}

TEST_CASE("fw_solve recovers a planted rank-3 completion") {
  const double mu = 1.0;
  const KappaSpec spec(KappaVariant::lsp, 1.0, std::sqrt(mu));
  const CompletionInstance inst = synth_completion(20, 15, 3, 0.5, 0.15, 0.01, 1);
  FwParams params;
  params.seed = 1;
  FwResult nonconvex = fw_solve(inst.train, &spec, mu, 16, params);
  CHECK(nonconvex.factor.rank() == 3);

  // Objective after the local step never exceeds the warm-started value.
  for (std::size_t t = 0; t < nonconvex.trace.rows.size(); ++t) {
    CHECK(nonconvex.trace.rows[t].objective <=
          nonconvex.warmstart_objectives[t] + 1e-12);
  }

  // Convex path with the matched slope mu * kappa0.
  const double kappa0 = derived_constants(spec).kappa0;
  FwResult convex = fw_solve(inst.train, nullptr, mu * kappa0, 16, params);
  CHECK(completion_rmse(nonconvex.factor, inst.heldout) <
        completion_rmse(convex.factor, inst.heldout));
}

TEST_CASE("planted critical point is reached within rank plus two iterations") {
  // MCP with the plateau active at the planted singular values makes the
  // planted matrix a critical point of the transformed objective.
  SplitRng rng(55);
  const KappaSpec spec(KappaVariant::mcp, 1.0, 2.0);  // flat for sigma > 2
  const double mu = 0.4;
  FactoredMatrix planted = random_factor(rng, 12, 10, 3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(planted.b);
  // Push eigenvalues well past the MCP plateau.
  planted.u = planted.u * es.eigenvectors();
  planted.v = planted.v * es.eigenvectors();
  planted.b = Eigen::MatrixXd::Zero(3, 3);
  planted.b.diagonal() << 5.0, 4.0, 3.0;
  const ObservedMatrix data = full_observation(densify_factor(planted));
  CHECK(critical_residual(planted, data, &spec, mu) <= 1e-8);

  FwParams params;
  params.seed = 3;
  params.local_sweeps = 60;
  FwResult result = fw_solve(data, &spec, mu, 5, params);
  CHECK(critical_residual(result.factor, data, &spec, mu) <= 1e-4);
}

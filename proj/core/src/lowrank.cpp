#include "redistopt/lowrank.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "redistopt/rng.hpp"

namespace redistopt {

namespace {

using Clock = std::chrono::steady_clock;

Eigen::MatrixXd thin_qr(const Eigen::MatrixXd& a, Eigen::MatrixXd* r_out) {
  const Eigen::Index k = a.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), k);
  Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) = -r.row(j);
      q.col(j) = -q.col(j);
    }
  }
  if (r_out) *r_out = std::move(r);
  return q;
}

struct EigenPair {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
};

EigenPair sym_eig(const Eigen::MatrixXd& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  return {es.eigenvectors(), es.eigenvalues()};
}

// Clips negative eigenvalues, prunes near-zero ones and rotates the factor
// bases so B stays diagonal-free symmetric PSD of minimal rank.
FactoredMatrix psd_project(const Eigen::MatrixXd& u, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& v) {
  const Eigen::MatrixXd sym = 0.5 * (b + b.transpose());
  EigenPair ep = sym_eig(sym);
  const double top = ep.values.size() ? ep.values.maxCoeff() : 0.0;
  const double cut = 1e-12 * std::max(top, 1.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ep.values.size(); ++i) {
    if (ep.values[i] > cut) keep.push_back(i);
  }
  FactoredMatrix out;
  const Eigen::Index k = static_cast<Eigen::Index>(keep.size());
  out.u.resize(u.rows(), k);
  out.v.resize(v.rows(), k);
  out.b = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    out.u.col(c) = u * ep.vectors.col(keep[c]);
    out.v.col(c) = v * ep.vectors.col(keep[c]);
    out.b(c, c) = ep.values[keep[c]];
  }
  return out;
}

Eigen::MatrixXd ub_product(const FactoredMatrix& x) { return x.u * x.b; }

}  // namespace

void ObservedMatrix::finalize() {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
      throw std::invalid_argument("ObservedMatrix: entry index out of range");
    }
    if (i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col) {
      throw std::invalid_argument("ObservedMatrix: duplicate entry");
    }
  }
}

double FactoredMatrix::invariant_violation() const {
  if (empty()) return 0.0;
  const Eigen::Index k = rank();
  const double ortho_u =
      (u.transpose() * u - Eigen::MatrixXd::Identity(k, k)).norm();
  const double ortho_v =
      (v.transpose() * v - Eigen::MatrixXd::Identity(k, k)).norm();
  const double asym = (b - b.transpose()).norm();
  EigenPair ep = sym_eig(0.5 * (b + b.transpose()));
  const double neg = ep.values.size() ? std::max(0.0, -ep.values.minCoeff()) : 0.0;
  return std::max({ortho_u, ortho_v, asym, neg});
}

double factored_inner(const FactoredMatrix& a, const FactoredMatrix& b) {
  if (a.empty() || b.empty()) return 0.0;
  const Eigen::MatrixXd m = (a.u.transpose() * b.u) * b.b * (b.v.transpose() * a.v);
  return (a.b.transpose().cwiseProduct(m)).sum();
}

double factored_sq_norm(const FactoredMatrix& a) {
  if (a.empty()) return 0.0;
  return a.b.squaredNorm();
}

double completion_value(const FactoredMatrix& x, const ObservedMatrix& data) {
  return 0.5 * completion_residual(x, data).squaredNorm();
}

Eigen::VectorXd completion_residual(const FactoredMatrix& x,
                                    const ObservedMatrix& data) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(data.entries.size()));
  if (x.empty()) {
    for (std::size_t e = 0; e < data.entries.size(); ++e) {
      r[static_cast<Eigen::Index>(e)] = -data.entries[e].value;
    }
    return r;
  }
  if (x.u.rows() != data.rows || x.v.rows() != data.cols) {
    throw std::invalid_argument("completion_residual: shape mismatch");
  }
  const Eigen::MatrixXd ub = ub_product(x);
  for (std::size_t e = 0; e < data.entries.size(); ++e) {
    const auto& entry = data.entries[e];
    const double xij = ub.row(entry.row).dot(x.v.row(entry.col));
    r[static_cast<Eigen::Index>(e)] = xij - entry.value;
  }
  return r;
}

Eigen::VectorXd GradOperator::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows());
  for (std::size_t e = 0; e < pattern->entries.size(); ++e) {
    const auto& entry = pattern->entries[e];
    y[entry.row] += sparse_values[static_cast<Eigen::Index>(e)] * x[entry.col];
  }
  if (scale != 0.0 && p.cols() > 0) {
    y.noalias() += scale * (p * w.asDiagonal() * (q.transpose() * x));
  }
  return y;
}

Eigen::VectorXd GradOperator::apply_transpose(const Eigen::VectorXd& y) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(cols());
  for (std::size_t e = 0; e < pattern->entries.size(); ++e) {
    const auto& entry = pattern->entries[e];
    x[entry.col] += sparse_values[static_cast<Eigen::Index>(e)] * y[entry.row];
  }
  if (scale != 0.0 && p.cols() > 0) {
    x.noalias() += scale * (q * w.asDiagonal() * (p.transpose() * y));
  }
  return x;
}

Eigen::MatrixXd GradOperator::dense() const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(rows(), cols());
  for (std::size_t e = 0; e < pattern->entries.size(); ++e) {
    const auto& entry = pattern->entries[e];
    g(entry.row, entry.col) = sparse_values[static_cast<Eigen::Index>(e)];
  }
  if (scale != 0.0 && p.cols() > 0) {
    g.noalias() += scale * (p * w.asDiagonal() * q.transpose());
  }
  return g;
}

Rank1Triplet rank1_svd(const GradOperator& op, std::uint64_t seed,
                       int max_iterations, double rel_tol) {
  SplitRng rng = SplitRng(seed).split("rank1-svd");
  Eigen::VectorXd v(op.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();

  Rank1Triplet out;
  double s_prev = -1.0;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd gv = op.apply(v);
    const double su = gv.norm();
    if (su == 0.0) {
      Eigen::VectorXd u = Eigen::VectorXd::Zero(op.rows());
      u[0] = 1.0;
      return {u, 0.0, v};
    }
    Eigen::VectorXd u = gv / su;
    Eigen::VectorXd gtu = op.apply_transpose(u);
    const double sv = gtu.norm();
    if (sv == 0.0) return {u, 0.0, v};
    v = gtu / sv;
    if (s_prev > 0.0 && std::abs(sv - s_prev) <= rel_tol * sv) {
      s_prev = sv;
      break;
    }
    s_prev = sv;
  }
  Eigen::VectorXd gv = op.apply(v);
  out.s = gv.norm();
  out.u = out.s > 0.0 ? (gv / out.s).eval() : Eigen::VectorXd::Unit(op.rows(), 0);
  out.v = v;
  return out;
}

FwStep fw_qp(const FwQpCoefficients& c, double lbar, double mubar) {
  if (!(lbar > 0.0)) throw std::domain_error("fw_qp: lbar must be positive");
  const auto objective = [&](double alpha, double beta) {
    const double am1 = alpha - 1.0;
    return 0.5 * lbar * c.b_fro_sq * am1 * am1 + lbar * c.cross * am1 * beta +
           0.5 * lbar * beta * beta + c.s * beta + c.grad_inner * alpha +
           mubar * (alpha * c.b_nuclear + beta);
  };

  std::vector<FwStep> candidates;
  // Interior stationary point.
  const double a11 = lbar * c.b_fro_sq;
  const double a12 = lbar * c.cross;
  const double a22 = lbar;
  const double det = a11 * a22 - a12 * a12;
  if (det > 1e-14 * std::max(1.0, a11 * a22)) {
    const double r1 = -(c.grad_inner + mubar * c.b_nuclear);
    const double r2 = -(c.s + mubar);
    const double am1 = (r1 * a22 - a12 * r2) / det;
    const double beta = (a11 * r2 - a12 * r1) / det;
    if (am1 + 1.0 >= 0.0 && beta >= 0.0) candidates.push_back({am1 + 1.0, beta});
  }
  // alpha = 0 edge.
  candidates.push_back({0.0, std::max(0.0, (a12 - c.s - mubar) / lbar)});
  // beta = 0 edge.
  if (a11 > 0.0) {
    candidates.push_back(
        {std::max(0.0, 1.0 - (c.grad_inner + mubar * c.b_nuclear) / a11), 0.0});
  }
  candidates.push_back({0.0, 0.0});

  FwStep best = candidates.front();
  double best_obj = objective(best.alpha, best.beta);
  for (const FwStep& cand : candidates) {
    const double obj = objective(cand.alpha, cand.beta);
    if (obj < best_obj) {
      best = cand;
      best_obj = obj;
    }
  }
  return best;
}

WarmstartResult warmstart(const FactoredMatrix& x, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& v, double alpha, double beta) {
  WarmstartResult out;
  if (x.empty()) {
    out.u_basis = u.normalized();
    out.v_basis = v.normalized();
    out.b_raw = Eigen::MatrixXd::Constant(1, 1, beta * u.norm() * v.norm());
    out.factor = psd_project(out.u_basis, out.b_raw, out.v_basis);
    return out;
  }
  const Eigen::Index k = x.rank();
  Eigen::MatrixXd au(x.u.rows(), k + 1);
  au << x.u, u;
  Eigen::MatrixXd av(x.v.rows(), k + 1);
  av << x.v, v;
  Eigen::MatrixXd ru, rv;
  out.u_basis = thin_qr(au, &ru);
  out.v_basis = thin_qr(av, &rv);
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(k + 1, k + 1);
  block.topLeftCorner(k, k) = alpha * x.b;
  block(k, k) = beta;
  out.b_raw = ru * block * rv.transpose();
  out.factor = psd_project(out.u_basis, out.b_raw, out.v_basis);
  return out;
}

namespace {

double spectral_part(const Eigen::VectorXd& eigs, const KappaSpec* spec,
                     double mu) {
  if (!spec) return 0.0;
  double val = 0.0;
  const double kappa0 = derived_constants(*spec).kappa0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double s = std::max(eigs[i], 0.0);
    val += kappa_value(*spec, s) - kappa0 * s;
  }
  return mu * val;
}

double resolve_mubar(const KappaSpec* spec, double mu) {
  return spec ? mu * derived_constants(*spec).kappa0 : mu;
}

}  // namespace

double factored_objective(const FactoredMatrix& x, const ObservedMatrix& data,
                          const KappaSpec* spec, double mu) {
  double obj = completion_value(x, data);
  if (!x.empty()) {
    EigenPair ep = sym_eig(0.5 * (x.b + x.b.transpose()));
    obj += spectral_part(ep.values, spec, mu);
    obj += resolve_mubar(spec, mu) * ep.values.cwiseMax(0.0).sum();
  }
  return obj;
}

FactoredMatrix local_optimize(const FactoredMatrix& x0,
                              const ObservedMatrix& data,
                              const KappaSpec* spec, double mu, int sweeps) {
  FactoredMatrix x = x0;
  if (x.empty()) return x;
  const double mubar = resolve_mubar(spec, mu);
  double obj = factored_objective(x, data, spec, mu);

  // R * M and R^T * M with the residual kept sparse on Omega.
  const auto residual_times = [&](const FactoredMatrix& f,
                                  const Eigen::MatrixXd& m, bool transpose) {
    const Eigen::VectorXd rv = completion_residual(f, data);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(
        transpose ? data.cols : data.rows, m.cols());
    for (std::size_t e = 0; e < data.entries.size(); ++e) {
      const auto& entry = data.entries[e];
      const double r = rv[static_cast<Eigen::Index>(e)];
      if (transpose) {
        out.row(entry.col) += r * m.row(entry.row);
      } else {
        out.row(entry.row) += r * m.row(entry.col);
      }
    }
    return out;
  };

  double step_u = 1.0, step_v = 1.0, step_b = 1.0;
  for (int sweep = 0; sweep < sweeps && !x.empty(); ++sweep) {
    // U block.
    {
      const Eigen::MatrixXd grad = residual_times(x, x.v * x.b, false);
      bool ok = false;
      for (int bt = 0; bt < 20; ++bt) {
        FactoredMatrix cand = x;
        cand.u = thin_qr(x.u - step_u * grad, nullptr);
        const double cand_obj = factored_objective(cand, data, spec, mu);
        if (cand_obj < obj) {
          x = std::move(cand);
          obj = cand_obj;
          ok = true;
          break;
        }
        step_u *= 0.5;
      }
      if (ok) step_u *= 2.0;
    }
    // V block.
    {
      const Eigen::MatrixXd grad = residual_times(x, x.u * x.b, true);
      bool ok = false;
      for (int bt = 0; bt < 20; ++bt) {
        FactoredMatrix cand = x;
        cand.v = thin_qr(x.v - step_v * grad, nullptr);
        const double cand_obj = factored_objective(cand, data, spec, mu);
        if (cand_obj < obj) {
          x = std::move(cand);
          obj = cand_obj;
          ok = true;
          break;
        }
        step_v *= 0.5;
      }
      if (ok) step_v *= 2.0;
    }
    // B block.
    {
      EigenPair ep = sym_eig(0.5 * (x.b + x.b.transpose()));
      Eigen::MatrixXd grad =
          x.u.transpose() * residual_times(x, x.v, false) +
          mubar * Eigen::MatrixXd::Identity(x.rank(), x.rank());
      if (spec) {
        const double kappa0 = derived_constants(*spec).kappa0;
        Eigen::VectorXd w(ep.values.size());
        for (Eigen::Index i = 0; i < ep.values.size(); ++i) {
          w[i] = kappa_derivative(*spec, std::max(ep.values[i], 0.0)) - kappa0;
        }
        grad.noalias() +=
            mu * (ep.vectors * w.asDiagonal() * ep.vectors.transpose());
      }
      bool ok = false;
      for (int bt = 0; bt < 20; ++bt) {
        FactoredMatrix cand = psd_project(x.u, x.b - step_b * grad, x.v);
        if (cand.empty()) {
          step_b *= 0.5;
          continue;
        }
        const double cand_obj = factored_objective(cand, data, spec, mu);
        if (cand_obj < obj) {
          x = std::move(cand);
          obj = cand_obj;
          ok = true;
          break;
        }
        step_b *= 0.5;
      }
      if (ok) step_b *= 2.0;
    }
  }
  return x;
}

FwResult fw_solve(const ObservedMatrix& data, const KappaSpec* spec, double mu,
                  int max_outer, const FwParams& params) {
  const auto start = Clock::now();
  FwResult result;
  result.trace.reason = TerminationReason::max_iterations;
  FactoredMatrix x;  // rank 0

  const double rho = spec ? derived_constants(*spec).rho : 0.0;
  const double kappa0 = spec ? derived_constants(*spec).kappa0 : 1.0;
  const double lbar = 1.0 + 2.0 * rho * mu;  // loss modulus is 1 for P_Omega
  const double mubar = mu * kappa0;
  SplitRng rng(params.seed);

  for (int t = 1; t <= max_outer; ++t) {
    GradOperator op;
    op.pattern = &data;
    op.sparse_values = completion_residual(x, data);
    Eigen::VectorXd eigs;
    Eigen::MatrixXd rot;
    if (!x.empty()) {
      EigenPair ep = sym_eig(0.5 * (x.b + x.b.transpose()));
      eigs = ep.values.cwiseMax(0.0);
      rot = ep.vectors;
      if (spec) {
        Eigen::VectorXd w(eigs.size());
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
          w[i] = kappa_derivative(*spec, eigs[i]) - kappa0;
        }
        op.p = x.u * rot;
        op.q = x.v * rot;
        op.w = std::move(w);
        op.scale = mu;
      }
    }

    Rank1Triplet top = rank1_svd(op, rng.split(static_cast<std::uint64_t>(t)).next_u64());
    // The descent atom for the nuclear-ball linear subproblem is -u v^T.
    const Eigen::VectorXd atom_u = -top.u;
    const double s_signed = -top.s;

    FwQpCoefficients coeff;
    if (!x.empty()) {
      coeff.b_fro_sq = x.b.squaredNorm();
      coeff.b_nuclear = eigs.sum();
      coeff.cross = (atom_u.transpose() * x.u) * x.b * (x.v.transpose() * top.v);
      // <B, U^T G V> where G = sparse + mu (U rot) diag(w) (V rot)^T.
      Eigen::MatrixXd utrv = Eigen::MatrixXd::Zero(x.rank(), x.rank());
      {
        Eigen::MatrixXd utr = Eigen::MatrixXd::Zero(x.rank(), data.cols);
        for (std::size_t e = 0; e < data.entries.size(); ++e) {
          const auto& entry = data.entries[e];
          utr.col(entry.col) +=
              op.sparse_values[static_cast<Eigen::Index>(e)] *
              x.u.row(entry.row).transpose();
        }
        utrv = utr * x.v;
      }
      coeff.grad_inner = (x.b.cwiseProduct(utrv)).sum();
      if (spec) {
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
          coeff.grad_inner +=
              mu * eigs[i] * (kappa_derivative(*spec, eigs[i]) - kappa0);
        }
      }
    }
    coeff.s = s_signed;

    const FwStep step = fw_qp(coeff, lbar, mubar);
    WarmstartResult ws = warmstart(x, atom_u, top.v, step.alpha, step.beta);
    result.warmstart_objectives.push_back(
        factored_objective(ws.factor, data, spec, mu));
    FactoredMatrix x_next =
        local_optimize(ws.factor, data, spec, mu, params.local_sweeps);

    const double d_t = factored_sq_norm(x_next) + factored_sq_norm(x) -
                       2.0 * factored_inner(x_next, x);
    const double obj = factored_objective(x_next, data, spec, mu);
    x = std::move(x_next);
    result.trace.rows.push_back(
        {t, obj, std::max(d_t, 0.0), 0.0,
         std::chrono::duration<double, std::milli>(Clock::now() - start).count(),
         false, 0, static_cast<int>(x.rank())});
    if (!std::isfinite(obj)) {
      result.trace.reason = TerminationReason::aborted;
      break;
    }
    if (params.tolerance > 0.0 && d_t < params.tolerance) {
      result.trace.reason = TerminationReason::tolerance;
      break;
    }
  }
  result.factor = std::move(x);
  return result;
}

double critical_residual(const FactoredMatrix& x, const ObservedMatrix& data,
                         const KappaSpec* spec, double mu) {
  const double mubar = resolve_mubar(spec, mu);
  GradOperator op;
  op.pattern = &data;
  op.sparse_values = completion_residual(x, data);
  Eigen::MatrixXd ux, vx;
  if (!x.empty()) {
    EigenPair ep = sym_eig(0.5 * (x.b + x.b.transpose()));
    ux = x.u * ep.vectors;
    vx = x.v * ep.vectors;
    if (spec) {
      const double kappa0 = derived_constants(*spec).kappa0;
      Eigen::VectorXd w(ep.values.size());
      for (Eigen::Index i = 0; i < ep.values.size(); ++i) {
        w[i] = kappa_derivative(*spec, std::max(ep.values[i], 0.0)) - kappa0;
      }
      op.p = ux;
      op.q = vx;
      op.w = std::move(w);
      op.scale = mu;
    }
  }
  const Eigen::MatrixXd g = op.dense();
  if (x.empty()) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
    return std::max(0.0, svd.singularValues()[0] - mubar);
  }
  const Eigen::Index k = ux.cols();
  const Eigen::MatrixXd m = ux.transpose() * g * vx;
  const double r_in = (m + mubar * Eigen::MatrixXd::Identity(k, k)).norm();
  const Eigen::MatrixXd gv = g * vx - ux * m;
  const Eigen::MatrixXd ug = ux.transpose() * g - m * vx.transpose();
  const Eigen::MatrixXd g_out =
      g - ux * (ux.transpose() * g) - (g * vx) * vx.transpose() +
      ux * m * vx.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g_out);
  const double excess = std::max(0.0, svd.singularValues()[0] - mubar);
  return std::sqrt(r_in * r_in + gv.squaredNorm() + ug.squaredNorm()) + excess;
}

}  // namespace redistopt

#include "redistopt/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "redistopt/kappa.hpp"

namespace redistopt {

namespace {

bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool is_disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) ++ia;
    else if (*ib < *ia) ++ib;
    else return false;
  }
  return true;
}

}  // namespace

void GroupStructure::validate(Eigen::Index d) const {
  if (groups.size() != weights.size()) {
    throw std::invalid_argument("GroupStructure: one weight per group required");
  }
  for (const double w : weights) {
    if (w < 0.0) throw std::invalid_argument("GroupStructure: negative weight");
  }
  std::vector<std::vector<int>> sorted(groups.size());
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (groups[j].empty()) {
      throw std::invalid_argument("GroupStructure: empty group");
    }
    sorted[j] = groups[j];
    std::sort(sorted[j].begin(), sorted[j].end());
    if (std::adjacent_find(sorted[j].begin(), sorted[j].end()) != sorted[j].end()) {
      throw std::invalid_argument("GroupStructure: duplicate index inside a group");
    }
    for (const int i : sorted[j]) {
      if (i < 0 || i >= d) {
        throw std::invalid_argument("GroupStructure: index out of range");
      }
    }
  }
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    for (std::size_t b = a + 1; b < sorted.size(); ++b) {
      if (kind == GroupKind::disjoint) {
        if (!is_disjoint(sorted[a], sorted[b])) {
          throw std::invalid_argument("GroupStructure: overlapping groups in disjoint structure");
        }
      } else {
        if (!is_disjoint(sorted[a], sorted[b]) && !is_subset(sorted[a], sorted[b]) &&
            !is_subset(sorted[b], sorted[a])) {
          throw std::invalid_argument("GroupStructure: groups are not laminar");
        }
      }
    }
  }
}

Eigen::VectorXd prox_l1(const Eigen::VectorXd& z, double lam) {
  if (lam < 0.0) throw std::domain_error("prox_l1: lam must be non-negative");
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double a = std::abs(z[i]) - lam;
    out[i] = a > 0.0 ? (z[i] > 0.0 ? a : -a) : 0.0;
  }
  return out;
}

Eigen::VectorXd prox_group_l2(const Eigen::VectorXd& z, double lam) {
  if (lam < 0.0) throw std::domain_error("prox_group_l2: lam must be non-negative");
  const double norm = z.norm();
  if (norm <= lam) return Eigen::VectorXd::Zero(z.size());
  return (1.0 - lam / norm) * z;
}

Eigen::VectorXd prox_sparse_group(const Eigen::VectorXd& z, double lam,
                                  const GroupStructure& groups) {
  if (groups.kind != GroupKind::disjoint) {
    throw std::invalid_argument("prox_sparse_group: disjoint groups required");
  }
  groups.validate(z.size());
  Eigen::VectorXd out = prox_l1(z, lam);
  for (std::size_t j = 0; j < groups.groups.size(); ++j) {
    const auto& idx = groups.groups[j];
    Eigen::VectorXd block(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) block[k] = out[idx[k]];
    block = prox_group_l2(block, groups.weights[j]);
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = block[k];
  }
  return out;
}

Eigen::VectorXd prox_tree(const Eigen::VectorXd& z,
                          const GroupStructure& groups) {
  if (groups.kind != GroupKind::tree) {
    throw std::invalid_argument("prox_tree: tree structure required");
  }
  groups.validate(z.size());
  // Children before parents: in a laminar family, ordering by size (ties by
  // group index) is a valid linear extension of containment.
  std::vector<std::size_t> order(groups.groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return groups.groups[a].size() < groups.groups[b].size();
  });
  Eigen::VectorXd out = z;
  for (const std::size_t j : order) {
    const auto& idx = groups.groups[j];
    double norm2 = 0.0;
    for (const int i : idx) norm2 += out[i] * out[i];
    const double norm = std::sqrt(norm2);
    if (norm <= groups.weights[j]) {
      for (const int i : idx) out[i] = 0.0;
    } else {
      const double factor = 1.0 - groups.weights[j] / norm;
      for (const int i : idx) out[i] *= factor;
    }
  }
  return out;
}

double prox_convexified_scalar(double z, double c, const KappaSpec& spec) {
  if (c < 0.0) throw std::domain_error("prox_convexified_scalar: c must be non-negative");
  const double a = std::abs(z);
  const double kappa0 = derived_constants(spec).kappa0;
  const double rho = derived_constants(spec).rho;
  // phi(r) = 1/2 (r-a)^2 + c kappa(r) + (c rho / 2) r^2 is convex on r >= 0;
  // phi'(0+) = -a + c kappa0.
  if (a <= c * kappa0) return 0.0;
  double lo = 0.0;
  double hi = a;  // phi'(a) = c kappa'(a) + c rho a >= 0
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double d = mid - a + c * kappa_derivative(spec, mid) + c * rho * mid;
    if (d > 0.0) hi = mid;
    else lo = mid;
    if (hi - lo <= 1e-17 * (1.0 + a)) break;
  }
  const double r = 0.5 * (lo + hi);
  return z >= 0.0 ? r : -r;
}

Eigen::VectorXd prox_convexified_group(const Eigen::VectorXd& z, double c,
                                       const KappaSpec& spec) {
  const double norm = z.norm();
  if (norm == 0.0) return Eigen::VectorXd::Zero(z.size());
  const double r = prox_convexified_scalar(norm, c, spec);
  return (r / norm) * z;
}

}  // namespace redistopt

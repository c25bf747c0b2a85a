#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cwconv/energy.hpp"
#include "cwconv/trajectory.hpp"

namespace cwconv {

// ---------------------------------------------------------------------------
// Derivative estimation
// ---------------------------------------------------------------------------

/// Fills missing derivative samples with three-point Lagrange differences
/// (central in the interior, one-sided second order at the ends). Analytic
/// derivatives already present are returned untouched.
inline Trajectory estimate_derivatives(Trajectory traj)
{
  traj.validate();
  if (traj.derivatives) return traj;
  const std::size_t count = traj.size();
  if (count < 3) throw std::invalid_argument("estimate_derivatives: need at least 3 samples, got " + std::to_string(count));

  const auto& t = traj.times;
  const auto& y = traj.states;
  // Derivative at t[at] of the quadratic through samples a < b < c.
  auto lagrange = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t at) {
    const double ta = t[a], tb = t[b], tc = t[c], s = t[at];
    const double wa = ((s - tb) + (s - tc)) / ((ta - tb) * (ta - tc));
    const double wb = ((s - ta) + (s - tc)) / ((tb - ta) * (tb - tc));
    const double wc = ((s - ta) + (s - tb)) / ((tc - ta) * (tc - tb));
    return Eigen::VectorXd(wa * y[a] + wb * y[b] + wc * y[c]);
  };

  std::vector<Eigen::VectorXd> dy(count);
  dy[0] = lagrange(0, 1, 2, 0);
  for (std::size_t k = 1; k + 1 < count; ++k) dy[k] = lagrange(k - 1, k, k + 1, k);
  dy[count - 1] = lagrange(count - 3, count - 2, count - 1, count - 1);
  traj.derivatives = std::move(dy);
  return traj;
}

// ---------------------------------------------------------------------------
// Coordinate-wise decrease conditions
// ---------------------------------------------------------------------------

enum class ConditionMode { Weak, Strict };

inline const char* to_string(ConditionMode mode) { return mode == ConditionMode::Weak ? "weak" : "strict"; }

struct Violation {
  std::size_t sample = 0;
  std::size_t coordinate = 0;
  double product = 0.0;
};

struct ConditionReport {
  ConditionMode mode = ConditionMode::Weak;
  double tol = 0.0;
  double zero_tol = 0.0;  // strict mode only
  /// products(k, i) = dy_i(t_k) * dV/dx_i(y(t_k))
  Eigen::MatrixXd products;
  std::vector<Violation> violations;
  /// Largest product among the entries the mode inspects (moving
  /// coordinates in strict mode); 0 when nothing is inspected.
  double worst_violation = 0.0;

  bool satisfied() const { return violations.empty(); }
  std::size_t entries() const { return static_cast<std::size_t>(products.size()); }
  double violation_fraction() const
  {
    return entries() == 0 ? 0.0 : static_cast<double>(violations.size()) / static_cast<double>(entries());
  }
};

namespace detail {

inline void require_condition_inputs(const Trajectory& traj, const EnergyFunction& v)
{
  traj.validate();
  if (!traj.derivatives) throw std::invalid_argument("condition check: trajectory has no derivative samples");
  if (!traj.empty() && traj.dimension() != v.dimension())
    throw std::invalid_argument("dimension mismatch: trajectory has dimension " + std::to_string(traj.dimension()) +
                                ", energy has " + std::to_string(v.dimension()));
}

inline Eigen::MatrixXd condition_products(const Trajectory& traj, const EnergyFunction& v)
{
  const auto count = static_cast<Eigen::Index>(traj.size());
  const auto n = static_cast<Eigen::Index>(traj.dimension());
  Eigen::MatrixXd products(count, n);
  for (Eigen::Index k = 0; k < count; ++k) {
    const Eigen::VectorXd grad = v.gradient(traj.states[k]);
    products.row(k) = (*traj.derivatives)[k].cwiseProduct(grad).transpose();
  }
  return products;
}

}  // namespace detail

/// Weak condition: flags every (k, i) with dy_i * dV/dx_i > tol.
inline ConditionReport check_condition_cw(const Trajectory& traj, const EnergyFunction& v, double tol)
{
  detail::require_condition_inputs(traj, v);
  ConditionReport report;
  report.mode = ConditionMode::Weak;
  report.tol = tol;
  report.products = detail::condition_products(traj, v);
  if (report.products.size() > 0) report.worst_violation = report.products.maxCoeff();
  for (Eigen::Index k = 0; k < report.products.rows(); ++k)
    for (Eigen::Index i = 0; i < report.products.cols(); ++i)
      if (report.products(k, i) > tol)
        report.violations.push_back({static_cast<std::size_t>(k), static_cast<std::size_t>(i), report.products(k, i)});
  return report;
}

/// Strict condition: a coordinate moving faster than zero_tol must show
/// certified strict descent, dy_i * dV/dx_i < -tol.
inline ConditionReport check_condition_strict(const Trajectory& traj, const EnergyFunction& v, double zero_tol, double tol)
{
  detail::require_condition_inputs(traj, v);
  ConditionReport report;
  report.mode = ConditionMode::Strict;
  report.tol = tol;
  report.zero_tol = zero_tol;
  report.products = detail::condition_products(traj, v);
  bool any = false;
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < report.products.rows(); ++k) {
    const auto& dy = (*traj.derivatives)[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < report.products.cols(); ++i) {
      if (std::abs(dy[i]) <= zero_tol) continue;
      const double s = report.products(k, i);
      any = true;
      worst = std::max(worst, s);
      if (s >= -tol) report.violations.push_back({static_cast<std::size_t>(k), static_cast<std::size_t>(i), s});
    }
  }
  report.worst_violation = any ? worst : 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Energy monotonicity
// ---------------------------------------------------------------------------

struct EnergyProfile {
  std::vector<double> values;
  /// max(0, max_k V(y_{k+1}) - V(y_k))
  double max_increase = 0.0;
  std::size_t worst_step = 0;
  double tol = 0.0;
  bool monotone = true;
};

inline EnergyProfile energy_profile_monotone(const Trajectory& traj, const EnergyFunction& v, double tol)
{
  traj.validate();
  if (traj.size() < 2) throw std::invalid_argument("energy_profile_monotone: need at least 2 samples");
  EnergyProfile profile;
  profile.tol = tol;
  profile.values.reserve(traj.size());
  for (const auto& y : traj.states) profile.values.push_back(v.value(y));
  for (std::size_t k = 0; k + 1 < profile.values.size(); ++k) {
    const double inc = profile.values[k + 1] - profile.values[k];
    if (inc > profile.max_increase) {
      profile.max_increase = inc;
      profile.worst_step = k;
    }
  }
  profile.monotone = profile.max_increase <= tol;
  return profile;
}

// ---------------------------------------------------------------------------
// Accumulation points
// ---------------------------------------------------------------------------

/// Index of the first sample in the last ceil(fraction * N) samples.
inline std::size_t tail_start(std::size_t count, double tail_fraction)
{
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("tail_fraction must lie in (0, 1]");
  const auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(count)));
  return count - std::min(tail, count);
}

struct Cluster {
  Eigen::VectorXd center;
  std::size_t members = 0;
};

/// Greedy radius clustering of the trajectory tail. Samples are visited in
/// index order; each joins the first cluster whose seed lies within
/// cluster_radius, otherwise it seeds a new one. Centers are member means,
/// sorted by member count (descending, ties by creation order).
inline std::vector<Cluster> cluster_tail(const Trajectory& traj, double tail_fraction, double cluster_radius)
{
  if (!(cluster_radius > 0.0)) throw std::invalid_argument("cluster_radius must be > 0");
  const std::size_t first = tail_start(traj.size(), tail_fraction);
  if (first >= traj.size()) throw std::invalid_argument("estimate_accumulation_points: empty tail");

  std::vector<Eigen::VectorXd> seeds;
  std::vector<Eigen::VectorXd> sums;
  std::vector<std::size_t> counts;
  const double r2 = cluster_radius * cluster_radius;
  for (std::size_t k = first; k < traj.size(); ++k) {
    const auto& y = traj.states[k];
    std::size_t c = 0;
    while (c < seeds.size() && (y - seeds[c]).squaredNorm() > r2) ++c;
    if (c == seeds.size()) {
      seeds.push_back(y);
      sums.push_back(Eigen::VectorXd::Zero(y.size()));
      counts.push_back(0);
    }
    sums[c] += y;
    ++counts[c];
  }

  std::vector<std::size_t> order(seeds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::vector<Cluster> clusters;
  clusters.reserve(order.size());
  for (auto c : order) clusters.push_back({sums[c] / static_cast<double>(counts[c]), counts[c]});
  return clusters;
}

inline std::vector<Eigen::VectorXd> estimate_accumulation_points(const Trajectory& traj, double tail_fraction,
                                                                 double cluster_radius)
{
  std::vector<Eigen::VectorXd> centers;
  for (auto& c : cluster_tail(traj, tail_fraction, cluster_radius)) centers.push_back(std::move(c.center));
  return centers;
}

// ---------------------------------------------------------------------------
// Hessian kernel and the condition-(b) certificate
// ---------------------------------------------------------------------------

/// Orthonormal basis (n x d) of the numerical kernel of a symmetric H:
/// right singular vectors with singular value < rank_tol * max(1, sigma_max).
inline Eigen::MatrixXd hessian_kernel_basis(const Eigen::MatrixXd& h, double rank_tol)
{
  if (h.rows() != h.cols()) throw std::invalid_argument("hessian_kernel_basis: matrix is not square");
  const double scale = h.size() == 0 ? 1.0 : std::max(1.0, h.cwiseAbs().maxCoeff());
  if (h.size() > 0 && (h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("hessian_kernel_basis: matrix is not symmetric");
  const auto n = h.cols();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double threshold = rank_tol * std::max(1.0, s[0]);
  Eigen::Index rank = 0;
  while (rank < n && s[rank] >= threshold) ++rank;
  Eigen::MatrixXd basis = svd.matrixV().rightCols(n - rank);
  if (basis.cols() == 1) {
    Eigen::Index at = 0;
    basis.col(0).cwiseAbs().maxCoeff(&at);
    if (basis(at, 0) < 0.0) basis *= -1.0;
  }
  return basis;
}

struct ConditionBReport {
  Eigen::VectorXd point;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double rank_tol = 0.0;
  /// Unit right singular vector for sigma_min, sign fixed so its largest
  /// entry is positive.
  Eigen::VectorXd kernel_vector;
  bool holds = false;
  Eigen::VectorXd per_coordinate_products;
};

/// Rank test on the stacked 2n x n matrix [H; diag(g)] for Hessian H and
/// gradient g at x. A nontrivial kernel means some Hessian-kernel vector is
/// supported only on coordinates where the gradient vanishes.
inline ConditionBReport condition_b_certificate(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, const Eigen::VectorXd& x,
                                                double rank_tol)
{
  const auto n = x.size();
  if (n == 0 || h.rows() != n || h.cols() != n || g.size() != n)
    throw std::invalid_argument("condition_b_certificate: inconsistent dimensions");
  if (!x.allFinite() || !h.allFinite() || !g.allFinite())
    throw std::invalid_argument("condition_b_certificate: non-finite input");

  Eigen::MatrixXd stacked(2 * n, n);
  stacked.topRows(n) = h;
  stacked.bottomRows(n) = g.asDiagonal();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();

  ConditionBReport report;
  report.point = x;
  report.rank_tol = rank_tol;
  report.sigma_max = s[0];
  report.sigma_min = s[n - 1];
  report.kernel_vector = svd.matrixV().col(n - 1);
  Eigen::Index at = 0;
  report.kernel_vector.cwiseAbs().maxCoeff(&at);
  if (report.kernel_vector[at] < 0.0) report.kernel_vector *= -1.0;
  report.holds = report.sigma_min < rank_tol * std::max(1.0, report.sigma_max);
  report.per_coordinate_products = report.kernel_vector.cwiseProduct(g);
  return report;
}

inline ConditionBReport condition_b_certificate(const EnergyFunction& v, const Eigen::VectorXd& x, double rank_tol)
{
  if (!x.allFinite()) throw std::invalid_argument("condition_b_certificate: point is not finite");
  return condition_b_certificate(v.hessian(x), v.gradient(x), x, rank_tol);
}

/// Whether span(basis) holds a nonzero vector with some zero entry: always
/// for d >= 2 (one linear constraint on d >= 2 unknowns), never for d = 0,
/// and for d = 1 exactly when the basis vector has an entry below zero_tol.
inline bool kernel_zero_component_property(const Eigen::MatrixXd& basis, double zero_tol = 1e-9)
{
  const auto d = basis.cols();
  if (d == 0) return false;
  const Eigen::MatrixXd gram = basis.transpose() * basis;
  if ((gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("kernel_zero_component_property: basis columns are not orthonormal");
  if (d >= 2) return true;
  return basis.col(0).cwiseAbs().minCoeff() < zero_tol;
}

struct KMembership {
  Eigen::VectorXd point;
  double grad_tol = 0.0;
  std::vector<std::size_t> indices;  // 0-based
};

inline KMembership k_membership(const EnergyFunction& v, const Eigen::VectorXd& x, double grad_tol)
{
  KMembership m;
  m.point = x;
  m.grad_tol = grad_tol;
  const Eigen::VectorXd g = v.gradient(x);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (std::abs(g[i]) <= grad_tol) m.indices.push_back(static_cast<std::size_t>(i));
  return m;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

struct ConvergenceParams {
  double condition_tol = 1e-9;
  double eps_conv = 1e-4;
  double tail_fraction = 0.25;
  double cluster_radius = 1e-3;
  double radius_threshold = 1e6;
  double rank_tol = 1e-8;
};

struct Converged {
  Eigen::VectorXd limit;
  double tail_diameter = 0.0;
};

struct NotConverged {
  std::vector<Eigen::VectorXd> accumulation_points;
  std::vector<ConditionBReport> condition_b;
};

struct Unbounded {
  double exit_radius = 0.0;
};

struct Inconclusive {
  std::string reason;
};

using ConvergenceVerdict = std::variant<Converged, NotConverged, Unbounded, Inconclusive>;

inline const char* verdict_name(const ConvergenceVerdict& verdict)
{
  struct {
    const char* operator()(const Converged&) const { return "converged"; }
    const char* operator()(const NotConverged&) const { return "not_converged"; }
    const char* operator()(const Unbounded&) const { return "unbounded"; }
    const char* operator()(const Inconclusive&) const { return "inconclusive"; }
  } names;
  return std::visit(names, verdict);
}

/// Max pairwise distance over states[first, end), exact up to an absolute
/// `resolution`. Stops early and returns a lower bound once that bound
/// reaches `stop_at`.
inline double tail_diameter(const std::vector<Eigen::VectorXd>& states, std::size_t first,
                            double stop_at = std::numeric_limits<double>::infinity(), double resolution = 1e-12)
{
  const std::size_t m = states.size() - first;
  if (m < 2) return 0.0;
  // Visit points by distance to a reference point (the last state), largest
  // first; the pair (a, b) cannot beat r_a + r_b, which prunes the inner loop.
  const Eigen::VectorXd& reference = states.back();
  std::vector<std::pair<double, std::size_t>> radial(m);
  for (std::size_t k = 0; k < m; ++k) radial[k] = {(states[first + k] - reference).norm(), first + k};
  std::sort(radial.begin(), radial.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  double best = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    if (2.0 * radial[a].first <= best + resolution) break;
    for (std::size_t b = a + 1; b < m; ++b) {
      if (radial[a].first + radial[b].first <= best + resolution) break;
      const double dist = (states[radial[a].second] - states[radial[b].second]).norm();
      if (dist > best) {
        best = dist;
        if (best >= stop_at) return best;
      }
    }
  }
  return best;
}

/// Classifies the sampled asymptotics of a trajectory satisfying the weak
/// condition: converged, unbounded, or not converged with condition-(b)
/// certificates at estimated accumulation points.
inline ConvergenceVerdict classify_convergence(const Trajectory& input, const EnergyFunction& v,
                                               const ConvergenceParams& params = {})
{
  input.validate();
  if (input.size() < 10)
    return Inconclusive{"trajectory has " + std::to_string(input.size()) + " samples; at least 10 required"};
  const Trajectory traj = estimate_derivatives(input);
  const auto weak = check_condition_cw(traj, v, params.condition_tol);
  if (!weak.satisfied())
    return Inconclusive{"condition violated: " + std::to_string(weak.violations.size()) +
                        " sample-coordinate pairs exceed tol"};

  const std::size_t first = tail_start(traj.size(), params.tail_fraction);
  const double diameter = tail_diameter(traj.states, first, params.eps_conv);
  if (diameter < params.eps_conv) return Converged{traj.states.back(), diameter};

  // Unbounded: some sample beyond radius_threshold after the last sample
  // inside half of it.
  const auto& states = traj.states;
  std::size_t resume = 0;
  for (std::size_t k = states.size(); k-- > 0;) {
    if (states[k].norm() < 0.5 * params.radius_threshold) {
      resume = k + 1;
      break;
    }
  }
  for (std::size_t k = resume; k < states.size(); ++k)
    if (states[k].norm() > params.radius_threshold) return Unbounded{states.back().norm()};

  NotConverged result;
  result.accumulation_points = estimate_accumulation_points(traj, params.tail_fraction, params.cluster_radius);
  for (const auto& p : result.accumulation_points)
    result.condition_b.push_back(condition_b_certificate(v, p, params.rank_tol));
  return result;
}

}  // namespace cwconv

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cwconv/graph.hpp"
#include "cwconv/potential.hpp"

namespace cwconv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline void require_dimension(std::size_t expected, const Vector& x)
{
  if (static_cast<std::size_t>(x.size()) != expected)
    throw std::invalid_argument("dimension mismatch: energy has dimension " + std::to_string(expected) +
                                ", point has " + std::to_string(x.size()));
}

}  // namespace detail

/// V(x) = x^T Q x.
class QuadraticEnergy {
 public:
  explicit QuadraticEnergy(Matrix q) : q_(std::move(q))
  {
    if (q_.rows() == 0 || q_.rows() != q_.cols()) throw std::invalid_argument("quadratic energy: Q must be square and non-empty");
    if (!q_.allFinite()) throw std::invalid_argument("quadratic energy: Q has non-finite entries");
    const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
    if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("quadratic energy: Q is not symmetric");
    q_ = 0.5 * (q_ + q_.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q_, Eigen::EigenvaluesOnly);
    min_eigenvalue_ = eig.eigenvalues().minCoeff();
    const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
    psd_ = min_eigenvalue_ >= -1e-10 * norm;
  }

  std::size_t dimension() const { return static_cast<std::size_t>(q_.rows()); }
  const Matrix& q() const { return q_; }
  bool positive_semidefinite() const { return psd_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

  double value(const Vector& x) const { return x.dot(q_ * x); }
  Vector gradient(const Vector& x) const { return 2.0 * (q_ * x); }
  Matrix hessian(const Vector&) const { return 2.0 * q_; }

 private:
  Matrix q_;
  double min_eigenvalue_ = 0.0;
  bool psd_ = false;
};

/// V(x) = sum_i sum_{j~i} f_ij(x_j - x_i), with every undirected edge
/// contributing once per direction.
class PairwiseEnergy {
 public:
  PairwiseEnergy(Graph graph, std::vector<EdgePotential> potentials)
      : graph_(std::move(graph)), potentials_(std::move(potentials))
  {
    if (potentials_.size() != graph_.edges().size())
      throw std::invalid_argument("pairwise energy: need exactly one potential per undirected edge");
    connected_ = graph_.is_connected();
  }

  std::size_t dimension() const { return graph_.size(); }
  const Graph& graph() const { return graph_; }
  const std::vector<EdgePotential>& potentials() const { return potentials_; }
  bool connected() const { return connected_; }

  /// f_ij as seen from node i across the given incidence.
  DirectedPotential directed(const Incidence& inc) const { return {potentials_[inc.edge], inc.forward}; }

  double value(const Vector& x) const
  {
    double v = 0.0;
    for (std::size_t i = 0; i < dimension(); ++i)
      for (const auto& inc : graph_.neighbors(i)) v += directed(inc).value(x[inc.neighbor] - x[i]);
    return v;
  }

  Vector gradient(const Vector& x) const
  {
    Vector g = Vector::Zero(x.size());
    for (std::size_t i = 0; i < dimension(); ++i)
      for (const auto& inc : graph_.neighbors(i)) g[i] -= 2.0 * directed(inc).first(x[inc.neighbor] - x[i]);
    return g;
  }

  /// Weighted graph Laplacian with edge weights 2 f''_ij(x_j - x_i).
  Matrix hessian(const Vector& x) const
  {
    const auto n = static_cast<Eigen::Index>(dimension());
    Matrix h = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < dimension(); ++i) {
      for (const auto& inc : graph_.neighbors(i)) {
        const double w = 2.0 * directed(inc).second(x[inc.neighbor] - x[i]);
        h(i, inc.neighbor) -= w;
        h(i, i) += w;
      }
    }
    return h;
  }

 private:
  Graph graph_;
  std::vector<EdgePotential> potentials_;
  bool connected_ = false;
};

/// V(x) = d(x, C)^4 for the axis-aligned box C = prod [l_i, u_i].
class BoxQuarticEnergy {
 public:
  BoxQuarticEnergy(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper))
  {
    if (lower_.size() == 0 || lower_.size() != upper_.size())
      throw std::invalid_argument("box energy: lower and upper must be non-empty with equal length");
    for (Eigen::Index i = 0; i < lower_.size(); ++i)
      if (!(lower_[i] < upper_[i]))
        throw std::invalid_argument("box energy: need lower < upper in coordinate " + std::to_string(i + 1));
  }

  std::size_t dimension() const { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  /// Signed per-coordinate excess outside the box; zero inside [l_i, u_i].
  Vector excess(const Vector& x) const
  {
    Vector e(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      e[i] = std::max(x[i] - upper_[i], 0.0) + std::min(x[i] - lower_[i], 0.0);
    return e;
  }

  double value(const Vector& x) const
  {
    const double d2 = excess(x).squaredNorm();
    return d2 * d2;
  }

  Vector gradient(const Vector& x) const
  {
    const Vector e = excess(x);
    return 4.0 * e.squaredNorm() * e;
  }

  Matrix hessian(const Vector& x) const
  {
    const Vector e = excess(x);
    const double d2 = e.squaredNorm();
    Matrix h = 8.0 * e * e.transpose();
    for (Eigen::Index i = 0; i < e.size(); ++i)
      if (e[i] != 0.0) h(i, i) += 4.0 * d2;
    return h;
  }

 private:
  Vector lower_;
  Vector upper_;
};

/// V(x) = ||x||_2. Not C^2 at the origin, so evaluation is restricted to
/// ||x|| >= min_radius. Used to exercise the condition checker only.
class NormEnergy {
 public:
  explicit NormEnergy(std::size_t n, double min_radius = 0.5) : n_(n), min_radius_(min_radius)
  {
    if (n_ == 0) throw std::invalid_argument("norm energy: dimension must be positive");
  }

  std::size_t dimension() const { return n_; }
  double min_radius() const { return min_radius_; }

  double value(const Vector& x) const { return checked_norm(x); }
  Vector gradient(const Vector& x) const { return x / checked_norm(x); }
  Matrix hessian(const Vector& x) const
  {
    const double r = checked_norm(x);
    const auto n = x.size();
    return (Matrix::Identity(n, n) - x * x.transpose() / (r * r)) / r;
  }

 private:
  double checked_norm(const Vector& x) const
  {
    const double r = x.norm();
    if (r < min_radius_)
      throw std::domain_error("norm energy evaluated at ||x|| = " + std::to_string(r) + " below the admissible radius");
    return r;
  }

  std::size_t n_;
  double min_radius_;
};

/// V(x) = sum_i exp(x_i): strictly convex without a minimizer.
class SumExpEnergy {
 public:
  explicit SumExpEnergy(std::size_t n) : n_(n)
  {
    if (n_ == 0) throw std::invalid_argument("sum-exp energy: dimension must be positive");
  }

  std::size_t dimension() const { return n_; }
  double value(const Vector& x) const { return x.array().exp().sum(); }
  Vector gradient(const Vector& x) const { return x.array().exp().matrix(); }
  Matrix hessian(const Vector& x) const { return x.array().exp().matrix().asDiagonal(); }

 private:
  std::size_t n_;
};

enum class EnergyFamily { Quadratic, PairwiseGraph, BoxDistanceQuartic, Norm, SumExp };

inline std::string_view to_string(EnergyFamily family)
{
  switch (family) {
    case EnergyFamily::Quadratic: return "quadratic";
    case EnergyFamily::PairwiseGraph: return "pairwise";
    case EnergyFamily::BoxDistanceQuartic: return "box_quartic";
    case EnergyFamily::Norm: return "norm";
    case EnergyFamily::SumExp: return "sum_exp";
  }
  return "unknown";
}

/// Twice-differentiable energy V with exact gradient and Hessian.
/// Immutable after construction.
class EnergyFunction {
 public:
  using Model = std::variant<QuadraticEnergy, PairwiseEnergy, BoxQuarticEnergy, NormEnergy, SumExpEnergy>;

  EnergyFunction(QuadraticEnergy e) : model_(std::move(e)) {}
  EnergyFunction(PairwiseEnergy e) : model_(std::move(e)) {}
  EnergyFunction(BoxQuarticEnergy e) : model_(std::move(e)) {}
  EnergyFunction(NormEnergy e) : model_(std::move(e)) {}
  EnergyFunction(SumExpEnergy e) : model_(std::move(e)) {}

  static EnergyFunction quadratic(Matrix q) { return QuadraticEnergy(std::move(q)); }
  static EnergyFunction box_quartic(Vector lower, Vector upper)
  {
    return BoxQuarticEnergy(std::move(lower), std::move(upper));
  }
  static EnergyFunction pairwise(Graph graph, std::vector<EdgePotential> potentials)
  {
    return PairwiseEnergy(std::move(graph), std::move(potentials));
  }

  EnergyFamily family() const { return static_cast<EnergyFamily>(model_.index()); }
  const Model& model() const { return model_; }

  template <typename T>
  const T* as() const
  {
    return std::get_if<T>(&model_);
  }

  std::size_t dimension() const
  {
    return std::visit([](const auto& m) { return m.dimension(); }, model_);
  }

  double value(const Vector& x) const
  {
    detail::require_dimension(dimension(), x);
    return std::visit([&](const auto& m) { return m.value(x); }, model_);
  }

  Vector gradient(const Vector& x) const
  {
    detail::require_dimension(dimension(), x);
    return std::visit([&](const auto& m) { return Vector(m.gradient(x)); }, model_);
  }

  Matrix hessian(const Vector& x) const
  {
    detail::require_dimension(dimension(), x);
    return std::visit([&](const auto& m) { return Matrix(m.hessian(x)); }, model_);
  }

 private:
  Model model_;
};

struct FdReport {
  double max_rel_err_grad = 0.0;
  double max_rel_err_hess = 0.0;
};

/// Compares the analytic gradient and Hessian with central differences of
/// step h. Errors are measured as ||fd - exact||_inf / max(1, ||exact||_inf).
inline FdReport fd_consistency(const EnergyFunction& v, const Vector& x, double h)
{
  if (!(h > 0.0)) throw std::invalid_argument("fd_consistency: h must be > 0");
  const auto n = x.size();
  const Vector grad = v.gradient(x);
  const Matrix hess = v.hessian(x);

  Vector fd_grad(n);
  Matrix fd_hess(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector xp = x;
    Vector xm = x;
    xp[i] += h;
    xm[i] -= h;
    fd_grad[i] = (v.value(xp) - v.value(xm)) / (2.0 * h);
    fd_hess.col(i) = (v.gradient(xp) - v.gradient(xm)) / (2.0 * h);
  }

  FdReport report;
  report.max_rel_err_grad = (fd_grad - grad).cwiseAbs().maxCoeff() / std::max(1.0, grad.cwiseAbs().maxCoeff());
  report.max_rel_err_hess = (fd_hess - hess).cwiseAbs().maxCoeff() / std::max(1.0, hess.cwiseAbs().maxCoeff());
  return report;
}

}  // namespace cwconv

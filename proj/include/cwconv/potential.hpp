#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace cwconv {

// Edge potentials f(z) acting on the relative position z = x_j - x_i.
// Every shipped kind is C^2 with locally Lipschitz f'', locally strongly
// convex, and attains its minimum value 0 at z = d, so no normalization
// offset is needed to get f >= 0.

/// f(z) = w (z - d)^2 / 2
struct QuadraticSpacing {
  double w = 1.0;
  double d = 0.0;
  bool operator==(const QuadraticSpacing&) const = default;
};

/// f(z) = w (z - d)^2 / 2 + beta (z - d)^4
struct QuadQuartic {
  double w = 1.0;
  double d = 0.0;
  double beta = 0.0;
  bool operator==(const QuadQuartic&) const = default;
};

/// f(z) = w (cosh(z - d) - 1)
struct CoshSpacing {
  double w = 1.0;
  double d = 0.0;
  bool operator==(const CoshSpacing&) const = default;
};

class EdgePotential {
 public:
  using Kind = std::variant<QuadraticSpacing, QuadQuartic, CoshSpacing>;

  EdgePotential() : EdgePotential(QuadraticSpacing{}) {}

  explicit EdgePotential(Kind kind) : kind_(kind)
  {
    std::visit([](const auto& k) { validate(k); }, kind_);
  }

  const Kind& kind() const { return kind_; }

  std::string_view name() const
  {
    struct {
      std::string_view operator()(const QuadraticSpacing&) const { return "quadratic_spacing"; }
      std::string_view operator()(const QuadQuartic&) const { return "quad_quartic"; }
      std::string_view operator()(const CoshSpacing&) const { return "cosh"; }
    } names;
    return std::visit(names, kind_);
  }

  /// Location of the minimum.
  double spacing() const
  {
    return std::visit([](const auto& k) { return k.d; }, kind_);
  }

  double value(double z) const
  {
    struct {
      double z;
      double operator()(const QuadraticSpacing& k) const { return 0.5 * k.w * (z - k.d) * (z - k.d); }
      double operator()(const QuadQuartic& k) const
      {
        const double s = (z - k.d) * (z - k.d);
        return 0.5 * k.w * s + k.beta * s * s;
      }
      double operator()(const CoshSpacing& k) const { return k.w * (std::cosh(z - k.d) - 1.0); }
    } eval{z};
    return std::visit(eval, kind_);
  }

  double first(double z) const
  {
    struct {
      double z;
      double operator()(const QuadraticSpacing& k) const { return k.w * (z - k.d); }
      double operator()(const QuadQuartic& k) const
      {
        const double r = z - k.d;
        return k.w * r + 4.0 * k.beta * r * r * r;
      }
      double operator()(const CoshSpacing& k) const { return k.w * std::sinh(z - k.d); }
    } eval{z};
    return std::visit(eval, kind_);
  }

  double second(double z) const
  {
    struct {
      double z;
      double operator()(const QuadraticSpacing& k) const { return k.w; }
      double operator()(const QuadQuartic& k) const
      {
        const double r = z - k.d;
        return k.w + 12.0 * k.beta * r * r;
      }
      double operator()(const CoshSpacing& k) const { return k.w * std::cosh(z - k.d); }
    } eval{z};
    return std::visit(eval, kind_);
  }

  bool operator==(const EdgePotential&) const = default;

 private:
  static void check_common(double w, double d)
  {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("edge potential: w must be finite and > 0");
    if (!std::isfinite(d)) throw std::invalid_argument("edge potential: d must be finite");
  }
  static void validate(const QuadraticSpacing& k) { check_common(k.w, k.d); }
  static void validate(const QuadQuartic& k)
  {
    check_common(k.w, k.d);
    if (!(k.beta >= 0.0) || !std::isfinite(k.beta))
      throw std::invalid_argument("edge potential: beta must be finite and >= 0");
  }
  static void validate(const CoshSpacing& k) { check_common(k.w, k.d); }

  Kind kind_;
};

/// f_ij seen from node i. The graph stores f_ab once; the reverse direction
/// is f_ba(z) = f_ab(-z).
class DirectedPotential {
 public:
  DirectedPotential(const EdgePotential& f, bool forward) : f_(&f), forward_(forward) {}

  double value(double z) const { return forward_ ? f_->value(z) : f_->value(-z); }
  double first(double z) const { return forward_ ? f_->first(z) : -f_->first(-z); }
  double second(double z) const { return forward_ ? f_->second(z) : f_->second(-z); }

 private:
  const EdgePotential* f_;
  bool forward_;
};

}  // namespace cwconv

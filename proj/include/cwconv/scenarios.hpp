#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cwconv/energy.hpp"
#include "cwconv/multiagent.hpp"
#include "cwconv/seeding.hpp"
#include "cwconv/trajectory.hpp"

namespace cwconv {

/// Number of dt steps needed to reach t_end: ceil(t_end / dt), with
/// round-off just above an integer ignored.
inline std::size_t grid_steps(double t_end, double dt)
{
  if (!(t_end > 0.0) || !(dt > 0.0)) throw std::invalid_argument("t_end and dt must be > 0");
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

/// y(t) = (2 + e^-t, sin t) sampled at t_k = k dt with exact derivatives.
/// Non-converging under V = d(x, [-1,1]^2)^4; accumulates on {2} x [-1, 1].
inline Trajectory example1_trajectory(double t_end, double dt)
{
  const std::size_t steps = grid_steps(t_end, dt);
  Trajectory traj;
  traj.derivatives.emplace();
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double decay = std::exp(-t);
    traj.push_back(t, Eigen::Vector2d(2.0 + decay, std::sin(t)), Eigen::Vector2d(-decay, std::cos(t)));
  }
  return traj;
}

inline EnergyFunction example1_energy()
{
  return EnergyFunction::box_quartic(Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0));
}

/// y(t) = (1 + e^-t)(cos t, sin t): ||y|| decreases strictly, yet the
/// per-coordinate sign condition fails against V = ||x||.
inline Trajectory spiral_trajectory(double t_end, double dt)
{
  const std::size_t steps = grid_steps(t_end, dt);
  Trajectory traj;
  traj.derivatives.emplace();
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double decay = std::exp(-t);
    const double r = 1.0 + decay;
    const double c = std::cos(t);
    const double s = std::sin(t);
    traj.push_back(t, Eigen::Vector2d(r * c, r * s), Eigen::Vector2d(-decay * c - r * s, -decay * s + r * c));
  }
  return traj;
}

inline EnergyFunction spiral_energy() { return NormEnergy(2); }

// ---------------------------------------------------------------------------
// Platoon
// ---------------------------------------------------------------------------

enum class PotentialKind { QuadraticSpacing, QuadQuartic, Cosh };
enum class PerturbationKind { Zero, Constant, Sinusoid, Uniform, Adversarial, Mix };
enum class ActuatorKind { Identity, Gain, StopGo, Saturation };

inline PotentialKind parse_potential_kind(std::string_view name)
{
  if (name == "quadratic_spacing" || name == "quadratic") return PotentialKind::QuadraticSpacing;
  if (name == "quad_quartic") return PotentialKind::QuadQuartic;
  if (name == "cosh") return PotentialKind::Cosh;
  throw std::invalid_argument("invalid potential kind '" + std::string(name) +
                              "' (expected quadratic_spacing, quad_quartic or cosh)");
}

inline PerturbationKind parse_perturbation_kind(std::string_view name)
{
  if (name == "zero") return PerturbationKind::Zero;
  if (name == "constant") return PerturbationKind::Constant;
  if (name == "sinusoid") return PerturbationKind::Sinusoid;
  if (name == "uniform") return PerturbationKind::Uniform;
  if (name == "adversarial_stall") return PerturbationKind::Adversarial;
  if (name == "mix") return PerturbationKind::Mix;
  throw std::invalid_argument("invalid perturbation kind '" + std::string(name) +
                              "' (expected zero, constant, sinusoid, uniform, adversarial_stall or mix)");
}

inline ActuatorKind parse_actuator_kind(std::string_view name)
{
  if (name == "identity") return ActuatorKind::Identity;
  if (name == "gain") return ActuatorKind::Gain;
  if (name == "stop_go") return ActuatorKind::StopGo;
  if (name == "saturation") return ActuatorKind::Saturation;
  throw std::invalid_argument("invalid actuator kind '" + std::string(name) +
                              "' (expected identity, gain, stop_go or saturation)");
}

struct PlatoonOptions {
  std::size_t n = 5;
  double spacing = 1.0;
  PotentialKind potential = PotentialKind::QuadraticSpacing;
  double pbar = 0.1;
  PerturbationKind perturbation = PerturbationKind::Mix;
  ActuatorKind actuator = ActuatorKind::StopGo;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double t_end = 200.0;
};

/// Path graph 1 - 2 - ... - n with every edge potential minimal at gap
/// `spacing`. Initial state: equally spaced plus seeded uniform jitter of
/// amplitude spacing / 4.
///
/// Sinusoid perturbations use half the admissible amplitude with distinct
/// frequencies per direction; `Mix` puts a sinusoid on each forward
/// measurement and an adversarial stall on each backward one.
inline MultiAgentConfig build_platoon(const PlatoonOptions& options)
{
  if (options.n < 2) throw std::invalid_argument("build_platoon: n must be >= 2");
  MultiAgentConfig config;
  config.n = options.n;
  config.dt = options.dt;
  config.t_end = options.t_end;
  config.seed = options.seed;

  auto sinusoid = [](std::size_t edge, bool forward) {
    const double k = static_cast<double>(2 * edge + (forward ? 0 : 1));
    return SinusoidPerturbation{0.5, 1.0 + 0.37 * k, 0.9 * k};
  };
  auto potential = [&]() -> EdgePotential {
    switch (options.potential) {
      case PotentialKind::QuadraticSpacing: return EdgePotential(QuadraticSpacing{1.0, options.spacing});
      case PotentialKind::QuadQuartic: return EdgePotential(QuadQuartic{1.0, options.spacing, 0.25});
      case PotentialKind::Cosh: return EdgePotential(CoshSpacing{1.0, options.spacing});
    }
    throw std::invalid_argument("build_platoon: invalid potential kind");
  };

  for (std::size_t e = 0; e + 1 < options.n; ++e) {
    MultiAgentEdge edge;
    edge.a = e;
    edge.b = e + 1;
    edge.potential = potential();
    edge.pbar = options.pbar;
    switch (options.perturbation) {
      case PerturbationKind::Zero: break;
      case PerturbationKind::Constant:
        edge.forward = ConstantPerturbation{0.5};
        edge.backward = ConstantPerturbation{-0.5};
        break;
      case PerturbationKind::Sinusoid:
        edge.forward = sinusoid(e, true);
        edge.backward = sinusoid(e, false);
        break;
      case PerturbationKind::Uniform:
        edge.forward = UniformPerturbation{options.seed, 0.1};
        edge.backward = UniformPerturbation{options.seed, 0.1};
        break;
      case PerturbationKind::Adversarial:
        edge.forward = AdversarialStall{};
        edge.backward = AdversarialStall{};
        break;
      case PerturbationKind::Mix:
        edge.forward = sinusoid(e, true);
        edge.backward = AdversarialStall{};
        break;
    }
    config.edges.push_back(edge);
  }

  for (std::size_t i = 0; i < options.n; ++i) {
    switch (options.actuator) {
      case ActuatorKind::Identity: config.actuators.emplace_back(IdentityActuator{}); break;
      case ActuatorKind::Gain: config.actuators.emplace_back(GainActuator{2.0}); break;
      case ActuatorKind::StopGo: config.actuators.emplace_back(StopGoActuator{1.0, 0.5, 1.0}); break;
      case ActuatorKind::Saturation: config.actuators.emplace_back(SaturationActuator{1.0, 0.5}); break;
    }
  }

  std::mt19937_64 rng(options.seed);
  for (std::size_t i = 0; i < options.n; ++i)
    config.y0.push_back(static_cast<double>(i) * options.spacing + uniform_symmetric(rng, 0.25 * options.spacing));

  validate(config);
  return config;
}

// ---------------------------------------------------------------------------
// Quadratic descent (strongly convex setting)
// ---------------------------------------------------------------------------

/// Per-coordinate nonnegative gains. StopGo splits time into slots of length
/// tau; coordinate i runs at kappa in slot m when m % 4 == 0 or a seeded coin
/// says so, and is idle otherwise.
struct GainSchedule {
  enum class Kind { Constant, StopGo };
  Kind kind = Kind::Constant;
  double kappa = 1.0;
  double tau = 0.5;
  bool operator==(const GainSchedule&) const = default;

  double gain(std::size_t coordinate, double t, std::uint64_t seed) const
  {
    if (kind == Kind::Constant) return kappa;
    const auto slot = static_cast<std::uint64_t>(std::floor(t / tau));
    if (slot % 4 == 0) return kappa;
    const std::uint64_t bits = splitmix64(splitmix64(splitmix64(seed) ^ coordinate) + slot);
    return (bits >> 63) != 0 ? kappa : 0.0;
  }
};

/// Symmetric n x n matrix with spectral norm exactly `norm`.
inline Eigen::MatrixXd random_symmetric(std::size_t n, double norm, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) r(i, j) = r(j, i) = uniform_symmetric(rng, 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
  const double spectral = eig.eigenvalues().cwiseAbs().maxCoeff();
  return spectral > 0.0 ? Eigen::MatrixXd(r * (norm / spectral)) : r;
}

/// Euler-integrated dy_i = -kappa_i(t) dV/dx_i for V = x^T Q x. Each sample
/// product is -kappa_i (dV/dx_i)^2 <= 0, so the weak condition holds exactly.
inline Trajectory quadratic_descent_trajectory(const Eigen::MatrixXd& q, const GainSchedule& gains,
                                               const Eigen::VectorXd& y0, double t_end, double dt, std::uint64_t seed,
                                               bool require_pd = false)
{
  const QuadraticEnergy energy(q);
  if (static_cast<std::size_t>(y0.size()) != energy.dimension())
    throw std::invalid_argument("quadratic_descent_trajectory: y0 dimension mismatch");
  if (require_pd && !(energy.min_eigenvalue() > 0.0))
    throw std::invalid_argument("quadratic_descent_trajectory: Q is not positive definite");
  if (!(gains.kappa >= 0.0) || (gains.kind == GainSchedule::Kind::StopGo && !(gains.tau > 0.0)))
    throw std::invalid_argument("quadratic_descent_trajectory: gains need kappa >= 0 and tau > 0");

  const std::size_t steps = grid_steps(t_end, dt);
  Trajectory traj;
  traj.derivatives.emplace();
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.derivatives->reserve(steps + 1);
  Eigen::VectorXd y = y0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Eigen::VectorXd g = energy.gradient(y);
    Eigen::VectorXd ydot(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
      ydot[i] = -gains.gain(static_cast<std::size_t>(i), t, seed) * g[i];
    traj.push_back(t, y, ydot);
    y += dt * ydot;
  }
  return traj;
}

}  // namespace cwconv

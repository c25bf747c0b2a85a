#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cwconv/energy.hpp"
#include "cwconv/graph.hpp"
#include "cwconv/potential.hpp"
#include "cwconv/seeding.hpp"
#include "cwconv/trajectory.hpp"

namespace cwconv {

// ---------------------------------------------------------------------------
// Perturbation models. Each directed measurement i -> j owns one model; the
// emitted value is always clamped to [-pbar, pbar].
// ---------------------------------------------------------------------------

struct ZeroPerturbation {
  bool operator==(const ZeroPerturbation&) const = default;
};

/// p = s * pbar
struct ConstantPerturbation {
  double s = 0.0;
  bool operator==(const ConstantPerturbation&) const = default;
};

/// p = amplitude_frac * pbar * sin(omega t + phase)
struct SinusoidPerturbation {
  double amplitude_frac = 1.0;
  double omega = 1.0;
  double phase = 0.0;
  bool operator==(const SinusoidPerturbation&) const = default;
};

/// Uniform on [-pbar, pbar], held constant over [m hold_dt, (m+1) hold_dt).
struct UniformPerturbation {
  std::uint64_t seed = 0;
  double hold_dt = 0.1;
  bool operator==(const UniformPerturbation&) const = default;
};

/// Picks p in {-pbar, +pbar} each step so the measuring agent's robust
/// interval is pushed toward containing 0.
struct AdversarialStall {
  bool operator==(const AdversarialStall&) const = default;
};

using PerturbationModel =
    std::variant<ZeroPerturbation, ConstantPerturbation, SinusoidPerturbation, UniformPerturbation, AdversarialStall>;

// ---------------------------------------------------------------------------
// Actuators h_i(t, u): sign preserving, h(t, 0) = 0 and h(t, u) u >= 0.
// ---------------------------------------------------------------------------

struct IdentityActuator {
  bool operator==(const IdentityActuator&) const = default;
};

struct GainActuator {
  double kappa = 1.0;
  bool operator==(const GainActuator&) const = default;
};

/// kappa u while frac(t / period) < duty, else 0.
struct StopGoActuator {
  double period = 1.0;
  double duty = 0.5;
  double kappa = 1.0;
  bool operator==(const StopGoActuator&) const = default;
};

/// clamp(kappa u, -cap, cap)
struct SaturationActuator {
  double kappa = 1.0;
  double cap = 1.0;
  bool operator==(const SaturationActuator&) const = default;
};

using ActuatorModel = std::variant<IdentityActuator, GainActuator, StopGoActuator, SaturationActuator>;

inline double actuate(const ActuatorModel& am, double t, double u)
{
  struct {
    double t, u;
    double operator()(const IdentityActuator&) const { return u; }
    double operator()(const GainActuator& a) const { return a.kappa * u; }
    double operator()(const StopGoActuator& a) const
    {
      const double phase = t / a.period - std::floor(t / a.period);
      return phase < a.duty ? a.kappa * u : 0.0;
    }
    double operator()(const SaturationActuator& a) const { return std::clamp(a.kappa * u, -a.cap, a.cap); }
  } apply{t, u};
  return std::visit(apply, am);
}

/// |h(t, u)| >= alpha |u| on infinitely many disjoint intervals of length >= tau.
struct ActivityWitness {
  double alpha = 0.0;
  double tau = 0.0;
};

/// Saturation only admits a witness under a declared bound |u| <= input_bound.
inline std::optional<ActivityWitness> activity_witness(const ActuatorModel& am,
                                                       std::optional<double> input_bound = std::nullopt)
{
  struct {
    std::optional<double> bound;
    std::optional<ActivityWitness> operator()(const IdentityActuator&) const { return ActivityWitness{1.0, 1.0}; }
    std::optional<ActivityWitness> operator()(const GainActuator& a) const { return ActivityWitness{a.kappa, 1.0}; }
    std::optional<ActivityWitness> operator()(const StopGoActuator& a) const
    {
      return ActivityWitness{a.kappa, a.duty * a.period};
    }
    std::optional<ActivityWitness> operator()(const SaturationActuator& a) const
    {
      if (!bound || !(*bound > 0.0)) return std::nullopt;
      return ActivityWitness{std::min(a.kappa, a.cap / *bound), 1.0};
    }
  } witness{input_bound};
  return std::visit(witness, am);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Undirected edge a - b. `forward` perturbs a's measurement of b,
/// `backward` perturbs b's measurement of a.
struct MultiAgentEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  EdgePotential potential;
  double pbar = 0.0;
  PerturbationModel forward = ZeroPerturbation{};
  PerturbationModel backward = ZeroPerturbation{};
  bool operator==(const MultiAgentEdge&) const = default;
};

struct MultiAgentConfig {
  std::size_t n = 0;
  std::vector<MultiAgentEdge> edges;
  std::vector<ActuatorModel> actuators;
  std::vector<double> y0;
  double dt = 1e-3;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  bool operator==(const MultiAgentConfig&) const = default;
};

inline PairwiseEnergy pairwise_energy(const MultiAgentConfig& config)
{
  std::vector<Edge> edges;
  std::vector<EdgePotential> potentials;
  for (const auto& e : config.edges) {
    edges.push_back({e.a, e.b});
    potentials.push_back(e.potential);
  }
  return PairwiseEnergy(Graph(config.n, std::move(edges)), std::move(potentials));
}

/// Throws std::invalid_argument naming the offending field.
inline void validate(const MultiAgentConfig& config)
{
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (config.n < 1) fail("n: must be >= 1");
  if (!(config.dt > 0.0) || !std::isfinite(config.dt)) fail("dt: must be finite and > 0");
  if (!(config.t_end > config.dt) || !std::isfinite(config.t_end)) fail("t_end: must be finite and > dt");
  if (config.y0.size() != config.n) fail("y0: expected " + std::to_string(config.n) + " entries");
  for (double v : config.y0)
    if (!std::isfinite(v)) fail("y0: entries must be finite");
  if (config.actuators.size() != config.n) fail("actuators: expected " + std::to_string(config.n) + " entries");

  for (std::size_t k = 0; k < config.edges.size(); ++k) {
    const auto& e = config.edges[k];
    const std::string where = "edges[" + std::to_string(k) + "]";
    if (!(e.pbar >= 0.0) || !std::isfinite(e.pbar)) fail(where + ".pbar: must be finite and >= 0");
    for (const auto* pm : {&e.forward, &e.backward}) {
      if (const auto* c = std::get_if<ConstantPerturbation>(pm); c && !(std::abs(c->s) <= 1.0))
        fail(where + ".perturbation: constant s must lie in [-1, 1]");
      if (const auto* s = std::get_if<SinusoidPerturbation>(pm);
          s && (!(s->amplitude_frac >= 0.0 && s->amplitude_frac <= 1.0) || !std::isfinite(s->omega) ||
                !std::isfinite(s->phase)))
        fail(where + ".perturbation: sinusoid needs amplitude_frac in [0, 1] and finite omega, phase");
      if (const auto* u = std::get_if<UniformPerturbation>(pm); u && !(u->hold_dt > 0.0))
        fail(where + ".perturbation: uniform hold_dt must be > 0");
    }
  }
  for (std::size_t i = 0; i < config.actuators.size(); ++i) {
    const std::string where = "actuators[" + std::to_string(i) + "]";
    const auto& am = config.actuators[i];
    if (const auto* g = std::get_if<GainActuator>(&am); g && !(g->kappa > 0.0)) fail(where + ".kappa: must be > 0");
    if (const auto* s = std::get_if<StopGoActuator>(&am)) {
      if (!(s->period > 0.0)) fail(where + ".period: must be > 0");
      if (!(s->duty > 0.0 && s->duty <= 1.0)) fail(where + ".duty: must lie in (0, 1]");
      if (!(s->kappa > 0.0)) fail(where + ".kappa: must be > 0");
    }
    if (const auto* s = std::get_if<SaturationActuator>(&am)) {
      if (!(s->kappa > 0.0)) fail(where + ".kappa: must be > 0");
      if (!(s->cap > 0.0)) fail(where + ".cap: must be > 0");
    }
  }

  const auto energy = pairwise_energy(config);  // also validates edge indices
  if (!energy.connected()) fail("edges: graph is not connected");
}

// ---------------------------------------------------------------------------
// Control law building blocks
// ---------------------------------------------------------------------------

struct RobustBounds {
  double g_minus = 0.0;
  double g_plus = 0.0;
};

/// Range of -f'_ij(delta_hat + p) over p in [-pbar, pbar]. Endpoint
/// evaluation is exact because every shipped f' is nondecreasing.
inline RobustBounds edge_interval(const DirectedPotential& f, double delta_hat, double pbar)
{
  const double a = -f.first(delta_hat - pbar);
  const double b = -f.first(delta_hat + pbar);
  return {std::min(a, b), std::max(a, b)};
}

/// Dead-zone control: moves only when the interval excludes 0, against the
/// certified sign of the partial derivative.
inline double control(double g_minus, double g_plus)
{
  if (g_minus > g_plus) throw std::invalid_argument("control: inverted interval (g_minus > g_plus)");
  return -std::max(g_minus, 0.0) - std::min(g_plus, 0.0);
}

struct AgentMeasurement {
  std::size_t neighbor = 0;
  double delta_hat = 0.0;
  double perturbation = 0.0;
};

struct AgentStep {
  std::vector<AgentMeasurement> measurements;
  RobustBounds bounds;
  double u = 0.0;
  double ydot = 0.0;
};

struct StepLogRow {
  double t = 0.0;
  std::size_t agent = 0;
  double u = 0.0;
  double g_minus = 0.0;
  double g_plus = 0.0;
};

struct PerturbationLogRow {
  double t = 0.0;
  std::size_t from = 0;
  std::size_t to = 0;
  double p = 0.0;
};

struct SimulationOptions {
  bool record_log = true;
  bool record_perturbations = false;
};

struct SimulationResult {
  Trajectory trajectory;
  std::vector<StepLogRow> log;
  std::vector<PerturbationLogRow> perturbations;
  bool diverged = false;
  std::string message;
};

struct SpReport {
  std::vector<double> g_tilde_minus;
  std::vector<double> g_tilde_plus;
  std::vector<bool> member_i;
  bool member = false;
  double tol = 0.0;
};

struct MinimizerResult {
  Eigen::VectorXd x;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

class MultiAgentSystem {
 public:
  explicit MultiAgentSystem(MultiAgentConfig config) : config_(std::move(config)), energy_((validate(config_), pairwise_energy(config_)))
  {
  }

  const MultiAgentConfig& config() const { return config_; }
  const PairwiseEnergy& energy() const { return energy_; }
  const Graph& graph() const { return energy_.graph(); }
  std::size_t size() const { return config_.n; }

  /// Number of Euler steps: ceil(t_end / dt), ignoring round-off just above
  /// an integer.
  std::size_t step_count() const
  {
    return static_cast<std::size_t>(std::ceil(config_.t_end / config_.dt - 1e-9));
  }

  /// Perturbation on i's measurement of j for the time-driven models.
  double perturbation(std::size_t i, std::size_t j, double t) const
  {
    const auto* inc = graph().find_incidence(i, j);
    if (!inc) throw std::invalid_argument("perturbation: (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") is not an edge");
    const auto& edge = config_.edges[inc->edge];
    const auto& model = inc->forward ? edge.forward : edge.backward;
    if (std::holds_alternative<AdversarialStall>(model))
      throw std::logic_error("perturbation: adversarial stall depends on the measuring agent's state");
    return scheduled_perturbation(model, edge.pbar, t, stream_key(i, j));
  }

  /// Measurements of agent i for all its neighbors in adjacency order.
  /// Adversarial edges choose p = -pbar or +pbar greedily, minimizing the
  /// distance between 0 and the interval accumulated so far.
  std::vector<AgentMeasurement> measure_agent(std::size_t i, double t, const Eigen::VectorXd& y) const
  {
    std::vector<AgentMeasurement> out;
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& inc : graph().neighbors(i)) {
      const auto& edge = config_.edges[inc.edge];
      const auto& model = inc.forward ? edge.forward : edge.backward;
      const auto f = energy_.directed(inc);
      const double gap = y[inc.neighbor] - y[i];
      double p = 0.0;
      if (std::holds_alternative<AdversarialStall>(model)) {
        double best = std::numeric_limits<double>::infinity();
        for (double candidate : {-edge.pbar, edge.pbar}) {
          const auto c = edge_interval(f, gap + candidate, edge.pbar);
          const double dist = std::max(lo + c.g_minus, 0.0) + std::max(-(hi + c.g_plus), 0.0);
          if (dist < best) {
            best = dist;
            p = candidate;
          }
        }
      } else {
        p = scheduled_perturbation(model, edge.pbar, t, stream_key(i, inc.neighbor));
      }
      const auto c = edge_interval(f, gap + p, edge.pbar);
      lo += c.g_minus;
      hi += c.g_plus;
      out.push_back({inc.neighbor, gap + p, p});
    }
    return out;
  }

  /// Single measurement y_j - y_i + p_ij(t).
  double measure(std::size_t i, std::size_t j, double t, const Eigen::VectorXd& y) const
  {
    if (!graph().has_edge(i, j))
      throw std::invalid_argument("measure: (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") is not an edge");
    for (const auto& m : measure_agent(i, t, y))
      if (m.neighbor == j) return m.delta_hat;
    throw std::logic_error("measure: neighbor missing from measurement set");
  }

  /// Bounds on dV_i/dx_i from one measurement per neighbor of i.
  RobustBounds robust_bounds(std::size_t i, std::span<const AgentMeasurement> measurements) const
  {
    RobustBounds total;
    for (const auto& inc : graph().neighbors(i)) {
      auto it = std::find_if(measurements.begin(), measurements.end(),
                             [&](const AgentMeasurement& m) { return m.neighbor == inc.neighbor; });
      if (it == measurements.end())
        throw std::invalid_argument("robust_bounds: missing measurement of neighbor " + std::to_string(inc.neighbor + 1) +
                                    " for agent " + std::to_string(i + 1));
      const auto c = edge_interval(energy_.directed(inc), it->delta_hat, config_.edges[inc.edge].pbar);
      total.g_minus += c.g_minus;
      total.g_plus += c.g_plus;
    }
    return total;
  }

  /// dV_i/dx_i = -sum_{j~i} f'_ij(x_j - x_i), half of dV/dx_i.
  double local_partial(std::size_t i, const Eigen::VectorXd& x) const
  {
    double s = 0.0;
    for (const auto& inc : graph().neighbors(i)) s -= energy_.directed(inc).first(x[inc.neighbor] - x[i]);
    return s;
  }

  AgentStep agent_step(std::size_t i, double t, const Eigen::VectorXd& y) const
  {
    AgentStep s;
    s.measurements = measure_agent(i, t, y);
    s.bounds = robust_bounds(i, s.measurements);
    s.u = control(s.bounds.g_minus, s.bounds.g_plus);
    s.ydot = actuate(config_.actuators[i], t, s.u);
    return s;
  }

  Eigen::VectorXd velocity(double t, const Eigen::VectorXd& y) const
  {
    Eigen::VectorXd v(y.size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = agent_step(i, t, y).ydot;
    return v;
  }

  /// One explicit Euler step.
  Eigen::VectorXd step(double t, const Eigen::VectorXd& y) const
  {
    if (static_cast<std::size_t>(y.size()) != size()) throw std::invalid_argument("step: state dimension mismatch");
    if (!y.allFinite()) throw std::domain_error("step: non-finite state");
    return y + config_.dt * velocity(t, y);
  }

  SimulationResult simulate(const SimulationOptions& options = {}) const
  {
    SimulationResult result;
    const std::size_t steps = step_count();
    auto& traj = result.trajectory;
    traj.derivatives.emplace();
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.derivatives->reserve(steps + 1);
    if (options.record_log) result.log.reserve((steps + 1) * size());

    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(config_.y0.data(), static_cast<Eigen::Index>(size()));
    for (std::size_t k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * config_.dt;
      Eigen::VectorXd ydot(size());
      for (std::size_t i = 0; i < size(); ++i) {
        const auto s = agent_step(i, t, y);
        ydot[i] = s.ydot;
        if (options.record_log) result.log.push_back({t, i, s.u, s.bounds.g_minus, s.bounds.g_plus});
        if (options.record_perturbations)
          for (const auto& m : s.measurements) result.perturbations.push_back({t, i, m.neighbor, m.perturbation});
      }
      traj.push_back(t, y, ydot);
      if (k == steps) break;
      Eigen::VectorXd next = y + config_.dt * ydot;
      if (!next.allFinite()) {
        result.diverged = true;
        result.message = "state became non-finite at t = " + format_double(t + config_.dt);
        break;
      }
      y = std::move(next);
    }
    return result;
  }

  /// Perturbation-inflated bounds at the true state:
  /// g~+ = -sum f'_ij(x_j - x_i - 2 pbar), g~- = -sum f'_ij(x_j - x_i + 2 pbar).
  std::vector<RobustBounds> tilde_bounds(const Eigen::VectorXd& x) const
  {
    if (static_cast<std::size_t>(x.size()) != size()) throw std::invalid_argument("tilde_bounds: dimension mismatch");
    std::vector<RobustBounds> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
      for (const auto& inc : graph().neighbors(i)) {
        const auto f = energy_.directed(inc);
        const double gap = x[inc.neighbor] - x[i];
        const double pbar = config_.edges[inc.edge].pbar;
        out[i].g_plus -= f.first(gap - 2.0 * pbar);
        out[i].g_minus -= f.first(gap + 2.0 * pbar);
      }
    }
    return out;
  }

  /// Membership of x in the guaranteed limit set: every agent's inflated
  /// interval straddles 0 (up to tol).
  SpReport sp_membership(const Eigen::VectorXd& x, double tol) const
  {
    SpReport report;
    report.tol = tol;
    report.member = true;
    for (const auto& b : tilde_bounds(x)) {
      report.g_tilde_minus.push_back(b.g_minus);
      report.g_tilde_plus.push_back(b.g_plus);
      const bool in = b.g_minus <= tol && b.g_plus >= -tol;
      report.member_i.push_back(in);
      report.member = report.member && in;
    }
    return report;
  }

 private:
  std::uint64_t stream_key(std::size_t i, std::size_t j) const
  {
    const auto lo = static_cast<std::uint64_t>(std::min(i, j));
    const auto hi = static_cast<std::uint64_t>(std::max(i, j));
    const std::uint64_t direction = i < j ? 0 : 1;
    return splitmix64(splitmix64(splitmix64(config_.seed) ^ lo) ^ (hi << 1)) ^ direction;
  }

  static double scheduled_perturbation(const PerturbationModel& model, double pbar, double t, std::uint64_t stream)
  {
    struct {
      double pbar, t;
      std::uint64_t stream;
      double operator()(const ZeroPerturbation&) const { return 0.0; }
      double operator()(const ConstantPerturbation& m) const { return m.s * pbar; }
      double operator()(const SinusoidPerturbation& m) const
      {
        return m.amplitude_frac * pbar * std::sin(m.omega * t + m.phase);
      }
      double operator()(const UniformPerturbation& m) const
      {
        const auto slot = static_cast<std::uint64_t>(std::max(0.0, std::floor(t / m.hold_dt)));
        const std::uint64_t bits = splitmix64(splitmix64(stream ^ splitmix64(m.seed)) + slot);
        const double unit = unit_interval(bits);
        return (2.0 * unit - 1.0) * pbar;
      }
      double operator()(const AdversarialStall&) const { return 0.0; }
    } eval{pbar, t, stream};
    return std::clamp(std::visit(eval, model), -pbar, pbar);
  }

  MultiAgentConfig config_;
  PairwiseEnergy energy_;
};

// ---------------------------------------------------------------------------
// Minimizer and envelope checks
// ---------------------------------------------------------------------------

/// Minimizes a pairwise energy on the zero-sum subspace by projected gradient
/// descent with Armijo backtracking. Throws std::runtime_error when
/// max_iterations is exceeded.
inline MinimizerResult find_constrained_minimizer(const PairwiseEnergy& v, double tol,
                                                  std::size_t max_iterations = 1'000'000)
{
  const auto n = static_cast<Eigen::Index>(v.dimension());
  auto project = [](Eigen::VectorXd g) {
    g.array() -= g.mean();
    return g;
  };

  MinimizerResult result;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double value = v.value(x);
  Eigen::VectorXd g = project(v.gradient(x));
  double step = 1.0;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const double gnorm = g.norm();
    if (gnorm < tol) {
      result.x = x;
      result.grad_norm = gnorm;
      result.iterations = it;
      return result;
    }
    // Armijo backtracking; once energy differences drown in round-off,
    // take damped Newton steps on the zero-sum subspace instead, accepted
    // when the projected gradient shrinks.
    step = std::min(1.0, 2.0 * step);
    bool accepted = false;
    Eigen::VectorXd trial;
    Eigen::VectorXd trial_g;
    double trial_value = 0.0;
    const double resolution = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(value));
    while (step > 1e-16 && 1e-4 * step * gnorm * gnorm > resolution) {
      trial = x - step * g;
      trial.array() -= trial.mean();
      trial_value = v.value(trial);
      if (trial_value <= value - 1e-4 * step * gnorm * gnorm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      const Eigen::MatrixXd h = v.hessian(x) + Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
      const Eigen::VectorXd direction = h.ldlt().solve(g);
      double damping = 1.0;
      while (damping > 1e-8) {
        trial = x - damping * direction;
        trial.array() -= trial.mean();
        trial_g = project(v.gradient(trial));
        if (trial_g.norm() < gnorm) {
          accepted = true;
          break;
        }
        damping *= 0.5;
      }
      if (!accepted) throw std::runtime_error("find_constrained_minimizer: line search stalled");
      trial_value = v.value(trial);
      x = trial;
      value = trial_value;
      g = trial_g;
      continue;
    }
    x = trial;
    value = trial_value;
    g = project(v.gradient(x));
  }
  throw std::runtime_error("find_constrained_minimizer: iteration cap exceeded");
}

struct EnvelopeReport {
  double max_upper_increase = 0.0;
  double max_lower_decrease = 0.0;
  double tol = 0.0;
  bool ok = true;
};

/// Tracks max_k (y_k - x*_k) (should not increase) and min_k (y_k - x*_k)
/// (should not decrease) across consecutive samples.
inline EnvelopeReport envelope_monotonicity_check(const Trajectory& traj, const Eigen::VectorXd& xstar, double tol)
{
  traj.validate();
  if (!traj.empty() && static_cast<std::size_t>(xstar.size()) != traj.dimension())
    throw std::invalid_argument("envelope_monotonicity_check: dimension mismatch");
  EnvelopeReport report;
  report.tol = tol;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const Eigen::VectorXd a = traj.states[k] - xstar;
    const Eigen::VectorXd b = traj.states[k + 1] - xstar;
    report.max_upper_increase = std::max(report.max_upper_increase, b.maxCoeff() - a.maxCoeff());
    report.max_lower_decrease = std::max(report.max_lower_decrease, a.minCoeff() - b.minCoeff());
  }
  report.ok = report.max_upper_increase <= tol && report.max_lower_decrease <= tol;
  return report;
}

}  // namespace cwconv

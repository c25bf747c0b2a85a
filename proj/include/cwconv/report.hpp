#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cwconv/analysis.hpp"
#include "cwconv/config.hpp"
#include "cwconv/energy.hpp"
#include "cwconv/multiagent.hpp"
#include "cwconv/trajectory.hpp"

namespace cwconv {

/// FNV-1a 64-bit digest rendered as "fnv1a64:<16 hex digits>".
inline std::string config_hash(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Largest gap between consecutive sample times (0 for fewer than 2 samples).
inline double max_time_step(const Trajectory& traj)
{
  double h = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) h = std::max(h, traj.times[k + 1] - traj.times[k]);
  return h;
}

struct PlatoonSummary {
  std::string sp_point;  // "limit" or "final_state"
  SpReport sp;
  std::optional<MinimizerResult> minimizer;
  std::string minimizer_error;
  std::optional<EnvelopeReport> envelope;
};

struct SimulationSummary {
  std::size_t steps = 0;
  bool diverged = false;
  std::string message;
};

struct RunReport {
  std::string scenario_kind;
  std::string version = "1";
  std::string config_hash;
  std::string mode = "weak";
  std::size_t dimension = 0;
  std::size_t samples = 0;
  bool derivatives_estimated = false;
  AnalysisSettings settings;
  double energy_tol = 0.0;
  std::optional<ConditionReport> weak;
  std::optional<ConditionReport> strict;
  std::optional<EnergyProfile> energy;
  ConvergenceVerdict verdict = Inconclusive{"not analyzed"};
  std::optional<PlatoonSummary> platoon;
  std::optional<SimulationSummary> simulation;
  std::optional<double> wall_clock_seconds;
};

/// Runs the condition checks, energy profile and classification on `input`.
/// Missing derivatives are estimated first. The energy tolerance is
/// 10 h^2 with h the largest sample spacing.
inline RunReport analyze_trajectory(const Trajectory& input, const EnergyFunction& v, const AnalysisSettings& settings)
{
  input.validate();
  if (input.dimension() != v.dimension())
    throw std::invalid_argument("trajectory dimension " + std::to_string(input.dimension()) +
                                " does not match energy dimension " + std::to_string(v.dimension()));
  RunReport report;
  report.settings = settings;
  report.dimension = input.dimension();
  report.samples = input.size();
  report.derivatives_estimated = !input.has_derivatives();
  const double h = max_time_step(input);
  report.energy_tol = 10.0 * h * h;

  if (input.size() >= 3) {
    const Trajectory traj = estimate_derivatives(input);
    report.weak = check_condition_cw(traj, v, settings.tol);
    report.strict = check_condition_strict(traj, v, settings.zero_tol, settings.tol);
  }
  if (input.size() >= 2) report.energy = energy_profile_monotone(input, v, report.energy_tol);
  report.verdict = classify_convergence(input, v, settings.convergence());
  return report;
}

/// S^p membership at the limit (or final state), plus the
/// envelope check against a zero-sum minimizer shifted to the mean of y0.
inline PlatoonSummary platoon_summary(const MultiAgentSystem& system, const Trajectory& traj,
                                      const ConvergenceVerdict& verdict, const AnalysisSettings& settings)
{
  PlatoonSummary summary;
  Eigen::VectorXd point = traj.states.back();
  summary.sp_point = "final_state";
  if (const auto* c = std::get_if<Converged>(&verdict)) {
    point = c->limit;
    summary.sp_point = "limit";
  }
  summary.sp = system.sp_membership(point, settings.sp_tol);
  try {
    auto minimizer = find_constrained_minimizer(system.energy(), 1e-10);
    const double shift = traj.states.front().mean();
    const Eigen::VectorXd xstar = minimizer.x.array() + shift;
    summary.envelope = envelope_monotonicity_check(traj, xstar, 10.0 * system.config().dt);
    summary.minimizer = std::move(minimizer);
  } catch (const std::runtime_error& e) {
    summary.minimizer_error = e.what();
  }
  return summary;
}

namespace detail {

using nlohmann::json;

inline json vector_json(const Eigen::VectorXd& v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json condition_json(const ConditionReport& r, const Trajectory* traj, std::size_t max_listed)
{
  json listed = json::array();
  for (std::size_t k = 0; k < r.violations.size() && k < max_listed; ++k) {
    const auto& v = r.violations[k];
    json row = {{"sample", v.sample}, {"coordinate", v.coordinate + 1}, {"product", v.product}};
    if (traj) row["t"] = traj->times[v.sample];
    listed.push_back(row);
  }
  json out = {{"mode", to_string(r.mode)},
              {"tol", r.tol},
              {"entries", r.entries()},
              {"violation_count", r.violations.size()},
              {"violation_fraction", r.violation_fraction()},
              {"worst_violation", r.worst_violation},
              {"satisfied", r.satisfied()},
              {"violations", listed}};
  if (r.mode == ConditionMode::Strict) out["zero_tol"] = r.zero_tol;
  return out;
}

}  // namespace detail

inline nlohmann::json condition_b_json(const ConditionBReport& r, const EnergyFunction& v, double grad_tol)
{
  using detail::vector_json;
  nlohmann::json k = nlohmann::json::array();
  for (auto i : k_membership(v, r.point, grad_tol).indices) k.push_back(i + 1);
  return {{"point", vector_json(r.point)},
          {"sigma_min", r.sigma_min},
          {"sigma_max", r.sigma_max},
          {"rank_tol", r.rank_tol},
          {"holds", r.holds},
          {"kernel_vector", vector_json(r.kernel_vector)},
          {"per_coordinate_products", vector_json(r.per_coordinate_products)},
          {"k_indices", k}};
}

inline nlohmann::json settings_json(const AnalysisSettings& s, double energy_tol)
{
  return {{"tol", s.tol},
          {"zero_tol", s.zero_tol},
          {"grad_tol", s.grad_tol},
          {"rank_tol", s.rank_tol},
          {"eps_conv", s.eps_conv},
          {"tail_fraction", s.tail_fraction},
          {"cluster_radius", s.cluster_radius},
          {"radius_threshold", s.radius_threshold},
          {"sp_tol", s.sp_tol},
          {"energy_tol", energy_tol}};
}

/// Serializes a report. `traj` (optional) adds sample times to listed
/// violations; `max_listed` caps each violation list.
inline nlohmann::json to_json(const RunReport& r, const EnergyFunction& v, const Trajectory* traj = nullptr,
                              std::size_t max_listed = 20)
{
  using detail::json;
  using detail::vector_json;
  json out;
  out["report_version"] = "1";
  out["scenario"] = {{"kind", r.scenario_kind},
                     {"version", r.version},
                     {"config_hash", r.config_hash},
                     {"energy_family", to_string(v.family())},
                     {"dimension", r.dimension},
                     {"samples", r.samples},
                     {"derivatives_estimated", r.derivatives_estimated}};
  out["mode"] = r.mode;
  out["tolerances"] = settings_json(r.settings, r.energy_tol);

  json conditions = json::object();
  if (r.weak) conditions["weak"] = detail::condition_json(*r.weak, traj, max_listed);
  if (r.strict) conditions["strict"] = detail::condition_json(*r.strict, traj, max_listed);
  out["conditions"] = conditions;

  if (r.energy) {
    out["energy_profile"] = {{"initial", r.energy->values.front()},
                             {"final", r.energy->values.back()},
                             {"max_increase", r.energy->max_increase},
                             {"worst_step", r.energy->worst_step},
                             {"tol", r.energy->tol},
                             {"monotone", r.energy->monotone}};
  }

  json verdict = {{"kind", verdict_name(r.verdict)}};
  json certificates = json::array();
  if (const auto* c = std::get_if<Converged>(&r.verdict)) {
    verdict["limit"] = vector_json(c->limit);
    verdict["tail_diameter"] = c->tail_diameter;
  } else if (const auto* nc = std::get_if<NotConverged>(&r.verdict)) {
    json points = json::array();
    for (const auto& p : nc->accumulation_points) points.push_back(vector_json(p));
    verdict["accumulation_points"] = points;
    bool all = !nc->condition_b.empty();
    for (const auto& cb : nc->condition_b) {
      certificates.push_back(condition_b_json(cb, v, r.settings.grad_tol));
      all = all && cb.holds;
    }
    verdict["all_condition_b_hold"] = all;
  } else if (const auto* u = std::get_if<Unbounded>(&r.verdict)) {
    verdict["exit_radius"] = u->exit_radius;
  } else {
    verdict["reason"] = std::get<Inconclusive>(r.verdict).reason;
  }
  out["verdict"] = verdict;
  out["condition_b"] = certificates;

  if (r.platoon) {
    const auto& p = *r.platoon;
    json agents = json::array();
    for (std::size_t i = 0; i < p.sp.member_i.size(); ++i)
      agents.push_back({{"agent", i + 1},
                        {"g_tilde_minus", p.sp.g_tilde_minus[i]},
                        {"g_tilde_plus", p.sp.g_tilde_plus[i]},
                        {"member", static_cast<bool>(p.sp.member_i[i])}});
    json platoon = {{"sp", {{"point", p.sp_point}, {"tol", p.sp.tol}, {"member", p.sp.member}, {"agents", agents}}}};
    if (p.minimizer)
      platoon["minimizer"] = {{"x", vector_json(p.minimizer->x)},
                              {"grad_norm", p.minimizer->grad_norm},
                              {"iterations", p.minimizer->iterations}};
    else
      platoon["minimizer"] = {{"error", p.minimizer_error}};
    if (p.envelope)
      platoon["envelope"] = {{"max_upper_increase", p.envelope->max_upper_increase},
                             {"max_lower_decrease", p.envelope->max_lower_decrease},
                             {"tol", p.envelope->tol},
                             {"ok", p.envelope->ok}};
    out["platoon"] = platoon;
  }

  if (r.simulation)
    out["simulation"] = {{"steps", r.simulation->steps},
                         {"diverged", r.simulation->diverged},
                         {"message", r.simulation->message}};
  if (r.wall_clock_seconds) out["wall_clock_seconds"] = *r.wall_clock_seconds;
  return out;
}

}  // namespace cwconv

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cwconv/cwconv.hpp"

namespace {

using namespace cwconv;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDiverged = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> parse_list(const std::string& text, const std::string& what)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_double(item));
    } catch (const std::invalid_argument& e) {
      throw UsageError(what + ": " + e.what());
    }
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

void write_json(const std::string& path, const nlohmann::json& j)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

void write_step_log(const std::string& path, const std::vector<StepLogRow>& rows)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "t,agent,u,g_minus,g_plus\n";
  for (const auto& r : rows)
    out << format_double(r.t) << ',' << r.agent + 1 << ',' << format_double(r.u) << ',' << format_double(r.g_minus) << ','
        << format_double(r.g_plus) << '\n';
}

void write_perturbation_log(const std::string& path, const std::vector<PerturbationLogRow>& rows)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "t,from,to,p\n";
  for (const auto& r : rows)
    out << format_double(r.t) << ',' << r.from + 1 << ',' << r.to + 1 << ',' << format_double(r.p) << '\n';
}

struct Loaded {
  ConfigDocument doc;
  std::string hash;
};

Loaded load(const std::string& path)
{
  const auto bytes = read_file_bytes(path);
  return {parse_config_text(bytes), config_hash(bytes)};
}

// Drops samples from the first non-finite state on.
bool truncate_non_finite(Trajectory& traj)
{
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const bool bad = !traj.states[k].allFinite() || (traj.derivatives && !(*traj.derivatives)[k].allFinite());
    if (bad) {
      traj.times.resize(k);
      traj.states.resize(k);
      if (traj.derivatives) traj.derivatives->resize(k);
      return true;
    }
  }
  return false;
}

Trajectory generate(const ScenarioSpec& spec)
{
  if (const auto* s = std::get_if<Example1Spec>(&spec)) return example1_trajectory(s->t_end, s->dt);
  if (const auto* s = std::get_if<SpiralSpec>(&spec)) return spiral_trajectory(s->t_end, s->dt);
  if (const auto* s = std::get_if<QuadraticDescentSpec>(&spec)) {
    try {
      return quadratic_descent_trajectory(to_matrix(s->q), s->gains, to_vector(s->y0), s->t_end, s->dt, s->seed,
                                          s->require_pd);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("scenario: ") + e.what());
    }
  }
  throw ConfigError("scenario.kind: '" + std::string(scenario_kind(spec)) + "' does not generate a trajectory");
}

struct SimulateArgs {
  std::string config, out_traj, out_log, out_perturbations, report;
  bool timing = false;
};

int cmd_simulate(const SimulateArgs& a)
{
  const auto start = Clock::now();
  const auto [doc, hash] = load(a.config);
  const auto settings = resolve_settings(doc.analysis);
  const auto energy = scenario_energy(doc.scenario);

  Trajectory traj;
  std::vector<StepLogRow> log;
  std::vector<PerturbationLogRow> perturbations;
  SimulationSummary sim;
  std::optional<MultiAgentSystem> system;

  if (const auto* p = std::get_if<PlatoonSpec>(&doc.scenario)) {
    system.emplace(p->system);
    SimulationOptions options;
    options.record_perturbations = !a.out_perturbations.empty();
    auto result = system->simulate(options);
    traj = std::move(result.trajectory);
    log = std::move(result.log);
    perturbations = std::move(result.perturbations);
    sim.diverged = result.diverged;
    sim.message = result.message;
  } else {
    traj = generate(doc.scenario);
    if (truncate_non_finite(traj)) {
      sim.diverged = true;
      sim.message = "state became non-finite at t = " + format_double(traj.empty() ? 0.0 : traj.times.back());
    }
  }
  sim.steps = traj.empty() ? 0 : traj.size() - 1;

  write_trajectory_csv(a.out_traj, traj);
  write_step_log(a.out_log, log);
  if (!a.out_perturbations.empty()) write_perturbation_log(a.out_perturbations, perturbations);

  RunReport report;
  if (!sim.diverged && !traj.empty()) {
    report = analyze_trajectory(traj, energy, settings);
    if (system) report.platoon = platoon_summary(*system, traj, report.verdict, settings);
  } else {
    report.settings = settings;
    report.dimension = energy.dimension();
    report.samples = traj.size();
    report.verdict = Inconclusive{"simulation diverged: " + sim.message};
  }
  report.scenario_kind = scenario_kind(doc.scenario);
  report.config_hash = hash;
  report.simulation = sim;
  if (a.timing) report.wall_clock_seconds = seconds_since(start);
  write_json(a.report, to_json(report, energy, &traj));

  if (sim.diverged) {
    std::cerr << "cwconv simulate: divergence: " << sim.message << " (partial trajectory written)\n";
    return kDiverged;
  }
  return kOk;
}

struct AnalyzeArgs {
  std::string traj, config, mode = "weak", report;
  bool timing = false;
};

int cmd_analyze(const AnalyzeArgs& a)
{
  const auto start = Clock::now();
  const auto [doc, hash] = load(a.config);
  const auto settings = resolve_settings(doc.analysis);
  const auto energy = scenario_energy(doc.scenario);

  Trajectory traj;
  try {
    traj = read_trajectory_csv(a.traj);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--traj: ") + e.what());
  }
  if (traj.dimension() != energy.dimension())
    throw UsageError("--traj: trajectory dimension " + std::to_string(traj.dimension()) +
                     " does not match energy dimension " + std::to_string(energy.dimension()));

  RunReport report = analyze_trajectory(traj, energy, settings);
  report.scenario_kind = scenario_kind(doc.scenario);
  report.config_hash = hash;
  report.mode = a.mode;
  if (const auto* p = std::get_if<PlatoonSpec>(&doc.scenario))
    report.platoon = platoon_summary(MultiAgentSystem(p->system), traj, report.verdict, settings);
  if (a.timing) report.wall_clock_seconds = seconds_since(start);
  write_json(a.report, to_json(report, energy, &traj));

  const auto& selected = a.mode == "strict" ? report.strict : report.weak;
  std::cerr << "verdict: " << verdict_name(report.verdict);
  if (selected) std::cerr << "; " << a.mode << " violations: " << selected->violations.size();
  std::cerr << '\n';
  return kOk;
}

struct ConditionBArgs {
  std::string config, point;
  std::optional<double> rank_tol;
};

int cmd_condition_b(const ConditionBArgs& a)
{
  const auto [doc, hash] = load(a.config);
  const auto settings = resolve_settings(doc.analysis);
  const auto energy = scenario_energy(doc.scenario);
  const auto values = parse_list(a.point, "--point");
  if (values.size() != energy.dimension())
    throw UsageError("--point: expected " + std::to_string(energy.dimension()) + " values, got " +
                     std::to_string(values.size()));
  const Eigen::VectorXd x = to_vector(values);
  double rank_tol = a.rank_tol.value_or(settings.rank_tol);
  if (!(rank_tol > 0.0)) throw UsageError("--rank-tol: must be > 0");
  Eigen::VectorXd g;
  try {
    g = energy.gradient(x);
  } catch (const std::domain_error& e) {
    throw UsageError(std::string("--point: ") + e.what());
  }
  const auto report = condition_b_certificate(energy, x, rank_tol);
  std::cout << condition_b_json(report, energy, settings.grad_tol).dump(2) << '\n';
  return kOk;
}

struct ScenarioArgs {
  std::string name, out_traj;
  std::optional<double> t_end, dt;
  std::size_t n = 4;
  double r_norm = 0.5;
  std::string gains = "stop_go";
  double tau = 0.5;
  double kappa = 1.0;
  std::uint64_t seed = 1;
  std::string y0;
};

int cmd_scenario(const ScenarioArgs& a)
{
  Trajectory traj;
  if (a.name == "example1") {
    traj = example1_trajectory(a.t_end.value_or(200.0), a.dt.value_or(0.01));
  } else if (a.name == "spiral") {
    traj = spiral_trajectory(a.t_end.value_or(20.0), a.dt.value_or(0.01));
  } else if (a.name == "quad-descent") {
    if (a.n == 0) throw UsageError("--n: must be >= 1");
    GainSchedule gains;
    if (a.gains == "constant")
      gains = {GainSchedule::Kind::Constant, a.kappa, a.tau};
    else if (a.gains == "stop_go")
      gains = {GainSchedule::Kind::StopGo, a.kappa, a.tau};
    else
      throw UsageError("--gains: expected constant or stop_go, got '" + a.gains + "'");
    const Eigen::MatrixXd q =
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(a.n), static_cast<Eigen::Index>(a.n)) +
        random_symmetric(a.n, a.r_norm, a.seed);
    Eigen::VectorXd y0 = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(a.n));
    if (!a.y0.empty()) {
      const auto values = parse_list(a.y0, "--y0");
      if (values.size() != a.n) throw UsageError("--y0: expected " + std::to_string(a.n) + " values");
      y0 = to_vector(values);
    }
    traj = quadratic_descent_trajectory(q, gains, y0, a.t_end.value_or(200.0), a.dt.value_or(1e-3), a.seed, true);
  } else {
    throw UsageError("--name: unknown scenario '" + a.name + "' (valid names: example1, spiral, quad-descent)");
  }
  write_trajectory_csv(a.out_traj, traj);
  return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Coordinate-wise convergence checker and robust multi-agent simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate or simulate the configured scenario and analyze it");
  simulate->add_option("--config", sim.config, "Scenario config JSON")->required();
  simulate->add_option("--out-traj", sim.out_traj, "Trajectory CSV output")->required();
  simulate->add_option("--out-log", sim.out_log, "Step log CSV output")->required();
  simulate->add_option("--out-perturbations", sim.out_perturbations, "Per-measurement perturbation CSV output");
  simulate->add_option("--report", sim.report, "Run report JSON output")->required();
  simulate->add_flag("--timing", sim.timing, "Record wall-clock duration in the report");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Check conditions and classify a trajectory CSV");
  analyze->add_option("--traj", an.traj, "Trajectory CSV")->required();
  analyze->add_option("--config", an.config, "Config JSON providing the energy")->required();
  analyze->add_option("--mode", an.mode, "Condition mode")->check(CLI::IsMember({"weak", "strict"}));
  analyze->add_option("--report", an.report, "Run report JSON output")->required();
  analyze->add_flag("--timing", an.timing, "Record wall-clock duration in the report");

  ConditionBArgs cb;
  auto* condition_b = app.add_subcommand("condition-b", "Print the condition-(b) certificate at a point");
  condition_b->add_option("--config", cb.config, "Config JSON providing the energy")->required();
  condition_b->add_option("--point", cb.point, "Comma-separated coordinates")->required();
  condition_b->add_option("--rank-tol", cb.rank_tol, "Relative rank tolerance");

  ScenarioArgs sc;
  auto* scenario = app.add_subcommand("scenario", "Write a built-in trajectory with analytic derivatives");
  scenario->add_option("--name", sc.name, "example1, spiral or quad-descent")->required();
  scenario->add_option("--out-traj", sc.out_traj, "Trajectory CSV output")->required();
  scenario->add_option("--t-end", sc.t_end, "Final time");
  scenario->add_option("--dt", sc.dt, "Sample spacing");
  scenario->add_option("--n", sc.n, "quad-descent: dimension");
  scenario->add_option("--r-norm", sc.r_norm, "quad-descent: spectral norm of the random symmetric part");
  scenario->add_option("--gains", sc.gains, "quad-descent: constant or stop_go");
  scenario->add_option("--tau", sc.tau, "quad-descent: stop-go slot length");
  scenario->add_option("--kappa", sc.kappa, "quad-descent: gain (kappa_max for stop_go)");
  scenario->add_option("--seed", sc.seed, "quad-descent: seed");
  scenario->add_option("--y0", sc.y0, "quad-descent: comma-separated initial state (default all ones)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  const char* name = "cwconv";
  try {
    if (*simulate) {
      name = "cwconv simulate";
      return cmd_simulate(sim);
    }
    if (*analyze) {
      name = "cwconv analyze";
      return cmd_analyze(an);
    }
    if (*condition_b) {
      name = "cwconv condition-b";
      return cmd_condition_b(cb);
    }
    name = "cwconv scenario";
    return cmd_scenario(sc);
  } catch (const ConfigError& e) {
    std::cerr << name << ": config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UsageError& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << name << ": error: " << e.what() << '\n';
    return 1;
  }
}

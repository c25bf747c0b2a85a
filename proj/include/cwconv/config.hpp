#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cwconv/analysis.hpp"
#include "cwconv/energy.hpp"
#include "cwconv/multiagent.hpp"
#include "cwconv/scenarios.hpp"

namespace cwconv {

/// Invalid configuration document. The message starts with the JSON path of
/// the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Document model
// ---------------------------------------------------------------------------

struct PairwiseEdgeSpec {
  std::size_t a = 0;  // 0-based
  std::size_t b = 0;
  EdgePotential potential;
  bool operator==(const PairwiseEdgeSpec&) const = default;
};

struct QuadraticEnergySpec {
  std::vector<std::vector<double>> q;
  bool operator==(const QuadraticEnergySpec&) const = default;
};
struct PairwiseEnergySpec {
  std::size_t n = 0;
  std::vector<PairwiseEdgeSpec> edges;
  bool operator==(const PairwiseEnergySpec&) const = default;
};
struct BoxEnergySpec {
  std::vector<double> lower;
  std::vector<double> upper;
  bool operator==(const BoxEnergySpec&) const = default;
};
struct NormEnergySpec {
  std::size_t n = 0;
  bool operator==(const NormEnergySpec&) const = default;
};
struct SumExpEnergySpec {
  std::size_t n = 0;
  bool operator==(const SumExpEnergySpec&) const = default;
};

using EnergySpec = std::variant<QuadraticEnergySpec, PairwiseEnergySpec, BoxEnergySpec, NormEnergySpec, SumExpEnergySpec>;

struct Example1Spec {
  double t_end = 200.0;
  double dt = 0.01;
  bool operator==(const Example1Spec&) const = default;
};
struct SpiralSpec {
  double t_end = 20.0;
  double dt = 0.01;
  bool operator==(const SpiralSpec&) const = default;
};
struct PlatoonSpec {
  MultiAgentConfig system;
  bool operator==(const PlatoonSpec&) const = default;
};
struct QuadraticDescentSpec {
  std::vector<std::vector<double>> q;
  GainSchedule gains;
  std::vector<double> y0;
  double t_end = 10.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  bool require_pd = false;
  bool operator==(const QuadraticDescentSpec&) const = default;
};
struct ExternalTrajectorySpec {
  std::string csv;
  EnergySpec energy;
  bool operator==(const ExternalTrajectorySpec&) const = default;
};

using ScenarioSpec = std::variant<Example1Spec, SpiralSpec, PlatoonSpec, QuadraticDescentSpec, ExternalTrajectorySpec>;

/// Optional overrides of the analysis tolerances.
struct AnalysisOverrides {
  std::optional<double> tol;
  std::optional<double> zero_tol;
  std::optional<double> grad_tol;
  std::optional<double> rank_tol;
  std::optional<double> eps_conv;
  std::optional<double> tail_fraction;
  std::optional<double> cluster_radius;
  std::optional<double> radius_threshold;
  std::optional<double> sp_tol;
  bool operator==(const AnalysisOverrides&) const = default;
};

struct ConfigDocument {
  std::string version = "1";
  ScenarioSpec scenario = Example1Spec{};
  AnalysisOverrides analysis;
  bool operator==(const ConfigDocument&) const = default;
};

/// Full tolerance set used by a run.
struct AnalysisSettings {
  double tol = 1e-9;
  double zero_tol = 1e-12;
  double grad_tol = 1e-8;
  double rank_tol = 1e-8;
  double eps_conv = 1e-4;
  double tail_fraction = 0.25;
  double cluster_radius = 1e-3;
  double radius_threshold = 1e6;
  double sp_tol = 1e-8;

  ConvergenceParams convergence() const
  {
    return {tol, eps_conv, tail_fraction, cluster_radius, radius_threshold, rank_tol};
  }
};

/// Defaults with overrides applied; an unset cluster_radius follows
/// 10 * eps_conv.
inline AnalysisSettings resolve_settings(const AnalysisOverrides& o)
{
  AnalysisSettings s;
  s.tol = o.tol.value_or(s.tol);
  s.zero_tol = o.zero_tol.value_or(s.zero_tol);
  s.grad_tol = o.grad_tol.value_or(s.grad_tol);
  s.rank_tol = o.rank_tol.value_or(s.rank_tol);
  s.eps_conv = o.eps_conv.value_or(s.eps_conv);
  s.tail_fraction = o.tail_fraction.value_or(s.tail_fraction);
  s.cluster_radius = o.cluster_radius.value_or(10.0 * s.eps_conv);
  s.radius_threshold = o.radius_threshold.value_or(s.radius_threshold);
  s.sp_tol = o.sp_tol.value_or(s.sp_tol);
  return s;
}

inline const char* scenario_kind(const ScenarioSpec& spec)
{
  struct {
    const char* operator()(const Example1Spec&) const { return "example1"; }
    const char* operator()(const SpiralSpec&) const { return "spiral"; }
    const char* operator()(const PlatoonSpec&) const { return "platoon"; }
    const char* operator()(const QuadraticDescentSpec&) const { return "quadratic_descent"; }
    const char* operator()(const ExternalTrajectorySpec&) const { return "external_trajectory"; }
  } names;
  return std::visit(names, spec);
}

// ---------------------------------------------------------------------------
// Strict JSON reading
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what)
  {
    throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + what);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key)
  {
    if (!j_.contains(key)) fail(field(key), "required field is missing");
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key)
  {
    const auto& v = raw(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    return v.get<double>();
  }

  std::optional<double> optional_number(const std::string& key)
  {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::uint64_t unsigned_integer(const std::string& key)
  {
    const auto& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(field(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::size_t positive_count(const std::string& key)
  {
    const auto v = unsigned_integer(key);
    if (v == 0) fail(field(key), "must be >= 1");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool fallback)
  {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) fail(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key)
  {
    const auto& v = raw(key);
    if (!v.is_string()) fail(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> vector(const std::string& key)
  {
    const auto& v = raw(key);
    if (!v.is_array()) fail(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(field(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::vector<double>> matrix(const std::string& key)
  {
    const auto& v = raw(key);
    if (!v.is_array() || v.empty()) fail(field(key), "expected a non-empty array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < v.size(); ++r) {
      const auto where = field(key) + "[" + std::to_string(r) + "]";
      if (!v[r].is_array() || v[r].size() != v.size()) fail(where, "expected a row of length " + std::to_string(v.size()));
      std::vector<double> row;
      for (std::size_t c = 0; c < v[r].size(); ++c) {
        if (!v[r][c].is_number()) fail(where + "[" + std::to_string(c) + "]", "expected a number");
        row.push_back(v[r][c].get<double>());
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }

  ObjectReader object(const std::string& key) { return ObjectReader(raw(key), field(key)); }

  const json& array(const std::string& key)
  {
    const auto& v = raw(key);
    if (!v.is_array()) fail(field(key), "expected an array");
    return v;
  }

  const std::string& path() const { return path_; }

  /// Rejects every key that was never read.
  void finish() const
  {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) fail(field(key), "unknown field '" + key + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline std::size_t node_index(ObjectReader& r, const std::string& key, std::size_t n)
{
  const auto v = r.unsigned_integer(key);
  if (v < 1 || v > n) ObjectReader::fail(r.field(key), "node index must lie in 1.." + std::to_string(n));
  return static_cast<std::size_t>(v - 1);
}

inline EdgePotential read_potential(ObjectReader r)
{
  const auto kind = r.string("kind");
  EdgePotential potential;
  try {
    if (kind == "quadratic_spacing") {
      potential = EdgePotential(QuadraticSpacing{r.number("w"), r.number("d")});
    } else if (kind == "quad_quartic") {
      potential = EdgePotential(QuadQuartic{r.number("w"), r.number("d"), r.number("beta")});
    } else if (kind == "cosh") {
      potential = EdgePotential(CoshSpacing{r.number("w"), r.number("d")});
    } else if (kind == "huber") {
      ObjectReader::fail(r.field("kind"), "huber potentials are rejected: f'' is discontinuous, so V is not C^2");
    } else {
      ObjectReader::fail(r.field("kind"), "unknown potential kind '" + kind +
                                              "' (expected quadratic_spacing, quad_quartic or cosh)");
    }
  } catch (const std::invalid_argument& e) {
    ObjectReader::fail(r.path(), e.what());
  }
  r.finish();
  return potential;
}

inline PerturbationModel read_perturbation(ObjectReader r)
{
  const auto kind = r.string("kind");
  PerturbationModel model;
  if (kind == "zero") {
    model = ZeroPerturbation{};
  } else if (kind == "constant") {
    model = ConstantPerturbation{r.number("s")};
  } else if (kind == "sinusoid") {
    model = SinusoidPerturbation{r.number("amplitude_frac"), r.number("omega"), r.number("phase")};
  } else if (kind == "uniform") {
    model = UniformPerturbation{r.unsigned_integer("seed"), r.number("hold_dt")};
  } else if (kind == "adversarial_stall") {
    model = AdversarialStall{};
  } else {
    ObjectReader::fail(r.field("kind"), "unknown perturbation kind '" + kind + "'");
  }
  r.finish();
  return model;
}

inline ActuatorModel read_actuator(ObjectReader r)
{
  const auto kind = r.string("kind");
  ActuatorModel model;
  if (kind == "identity") {
    model = IdentityActuator{};
  } else if (kind == "gain") {
    model = GainActuator{r.number("kappa")};
  } else if (kind == "stop_go") {
    model = StopGoActuator{r.number("period"), r.number("duty"), r.number("kappa")};
  } else if (kind == "saturation") {
    model = SaturationActuator{r.number("kappa"), r.number("cap")};
  } else {
    ObjectReader::fail(r.field("kind"), "unknown actuator kind '" + kind + "'");
  }
  r.finish();
  return model;
}

inline MultiAgentConfig read_system(ObjectReader r)
{
  MultiAgentConfig config;
  config.n = r.positive_count("n");
  const auto& edges = r.array("edges");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    ObjectReader e(edges[k], r.field("edges") + "[" + std::to_string(k) + "]");
    MultiAgentEdge edge;
    edge.a = node_index(e, "i", config.n);
    edge.b = node_index(e, "j", config.n);
    edge.potential = read_potential(e.object("potential"));
    edge.pbar = e.number("pbar");
    if (!(edge.pbar >= 0.0)) ObjectReader::fail(e.field("pbar"), "perturbation bound must be >= 0");
    if (e.has("forward")) edge.forward = read_perturbation(e.object("forward"));
    if (e.has("backward")) edge.backward = read_perturbation(e.object("backward"));
    e.finish();
    config.edges.push_back(std::move(edge));
  }
  const auto& actuators = r.array("actuators");
  for (std::size_t i = 0; i < actuators.size(); ++i)
    config.actuators.push_back(read_actuator(ObjectReader(actuators[i], r.field("actuators") + "[" + std::to_string(i) + "]")));
  config.y0 = r.vector("y0");
  config.dt = r.number("dt");
  config.t_end = r.number("t_end");
  config.seed = r.unsigned_integer("seed");
  r.finish();

  try {
    validate(config);
  } catch (const std::invalid_argument& e) {
    std::string what = e.what();
    if (what.find("not connected") != std::string::npos)
      what += " (the interaction graph must be a connected undirected graph)";
    ObjectReader::fail(r.path() + "." + what.substr(0, what.find(':')), what.substr(what.find(':') + 2));
  }
  return config;
}

inline EnergySpec read_energy(ObjectReader r)
{
  const auto family = r.string("family");
  EnergySpec spec;
  if (family == "quadratic") {
    spec = QuadraticEnergySpec{r.matrix("Q")};
  } else if (family == "pairwise") {
    PairwiseEnergySpec p;
    p.n = r.positive_count("n");
    const auto& edges = r.array("edges");
    for (std::size_t k = 0; k < edges.size(); ++k) {
      ObjectReader e(edges[k], r.field("edges") + "[" + std::to_string(k) + "]");
      PairwiseEdgeSpec edge;
      edge.a = node_index(e, "i", p.n);
      edge.b = node_index(e, "j", p.n);
      edge.potential = read_potential(e.object("potential"));
      e.finish();
      p.edges.push_back(std::move(edge));
    }
    spec = std::move(p);
  } else if (family == "box_quartic") {
    spec = BoxEnergySpec{r.vector("lower"), r.vector("upper")};
  } else if (family == "norm") {
    spec = NormEnergySpec{r.positive_count("n")};
  } else if (family == "sum_exp") {
    spec = SumExpEnergySpec{r.positive_count("n")};
  } else {
    ObjectReader::fail(r.field("family"), "unknown energy family '" + family +
                                              "' (expected quadratic, pairwise, box_quartic, norm or sum_exp)");
  }
  r.finish();
  return spec;
}

inline void require_positive(ObjectReader& r, const std::string& key, double v)
{
  if (!(v > 0.0)) ObjectReader::fail(r.field(key), "must be > 0");
}

inline ScenarioSpec read_scenario(ObjectReader r)
{
  const auto kind = r.string("kind");
  ScenarioSpec spec;
  if (kind == "example1" || kind == "spiral") {
    const double t_end = r.number("t_end");
    const double dt = r.number("dt");
    require_positive(r, "t_end", t_end);
    require_positive(r, "dt", dt);
    if (kind == "example1")
      spec = Example1Spec{t_end, dt};
    else
      spec = SpiralSpec{t_end, dt};
  } else if (kind == "platoon") {
    spec = PlatoonSpec{read_system(r.object("system"))};
  } else if (kind == "quadratic_descent") {
    QuadraticDescentSpec q;
    q.q = r.matrix("Q");
    auto g = r.object("gains");
    const auto gk = g.string("kind");
    if (gk == "constant") {
      q.gains = {GainSchedule::Kind::Constant, g.number("kappa"), 0.5};
    } else if (gk == "stop_go") {
      q.gains = {GainSchedule::Kind::StopGo, g.number("kappa_max"), g.number("tau")};
      require_positive(g, "tau", q.gains.tau);
    } else {
      ObjectReader::fail(g.field("kind"), "unknown gain schedule '" + gk + "' (expected constant or stop_go)");
    }
    if (!(q.gains.kappa >= 0.0)) ObjectReader::fail(g.path(), "gain must be >= 0");
    g.finish();
    q.y0 = r.vector("y0");
    if (q.y0.size() != q.q.size()) ObjectReader::fail(r.field("y0"), "length must match Q");
    q.t_end = r.number("t_end");
    q.dt = r.number("dt");
    require_positive(r, "t_end", q.t_end);
    require_positive(r, "dt", q.dt);
    q.seed = r.unsigned_integer("seed");
    q.require_pd = r.boolean("require_pd", false);
    spec = std::move(q);
  } else if (kind == "external_trajectory") {
    ExternalTrajectorySpec e;
    e.csv = r.string("csv");
    if (!std::filesystem::exists(e.csv)) ObjectReader::fail(r.field("csv"), "file '" + e.csv + "' does not exist");
    e.energy = read_energy(r.object("energy"));
    spec = std::move(e);
  } else {
    ObjectReader::fail(r.field("kind"), "unknown scenario kind '" + kind +
                                            "' (expected example1, spiral, platoon, quadratic_descent or external_trajectory)");
  }
  r.finish();
  return spec;
}

inline AnalysisOverrides read_overrides(ObjectReader r)
{
  AnalysisOverrides o;
  o.tol = r.optional_number("tol");
  o.zero_tol = r.optional_number("zero_tol");
  o.grad_tol = r.optional_number("grad_tol");
  o.rank_tol = r.optional_number("rank_tol");
  o.eps_conv = r.optional_number("eps_conv");
  o.tail_fraction = r.optional_number("tail_fraction");
  o.cluster_radius = r.optional_number("cluster_radius");
  o.radius_threshold = r.optional_number("radius_threshold");
  o.sp_tol = r.optional_number("sp_tol");
  r.finish();
  if (o.tail_fraction && !(*o.tail_fraction > 0.0 && *o.tail_fraction <= 1.0))
    ObjectReader::fail(r.field("tail_fraction"), "must lie in (0, 1]");
  return o;
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

inline json potential_json(const EdgePotential& p)
{
  struct {
    json operator()(const QuadraticSpacing& k) const { return {{"kind", "quadratic_spacing"}, {"w", k.w}, {"d", k.d}}; }
    json operator()(const QuadQuartic& k) const
    {
      return {{"kind", "quad_quartic"}, {"w", k.w}, {"d", k.d}, {"beta", k.beta}};
    }
    json operator()(const CoshSpacing& k) const { return {{"kind", "cosh"}, {"w", k.w}, {"d", k.d}}; }
  } to;
  return std::visit(to, p.kind());
}

inline json perturbation_json(const PerturbationModel& m)
{
  struct {
    json operator()(const ZeroPerturbation&) const { return {{"kind", "zero"}}; }
    json operator()(const ConstantPerturbation& p) const { return {{"kind", "constant"}, {"s", p.s}}; }
    json operator()(const SinusoidPerturbation& p) const
    {
      return {{"kind", "sinusoid"}, {"amplitude_frac", p.amplitude_frac}, {"omega", p.omega}, {"phase", p.phase}};
    }
    json operator()(const UniformPerturbation& p) const
    {
      return {{"kind", "uniform"}, {"seed", p.seed}, {"hold_dt", p.hold_dt}};
    }
    json operator()(const AdversarialStall&) const { return {{"kind", "adversarial_stall"}}; }
  } to;
  return std::visit(to, m);
}

inline json actuator_json(const ActuatorModel& m)
{
  struct {
    json operator()(const IdentityActuator&) const { return {{"kind", "identity"}}; }
    json operator()(const GainActuator& a) const { return {{"kind", "gain"}, {"kappa", a.kappa}}; }
    json operator()(const StopGoActuator& a) const
    {
      return {{"kind", "stop_go"}, {"period", a.period}, {"duty", a.duty}, {"kappa", a.kappa}};
    }
    json operator()(const SaturationActuator& a) const { return {{"kind", "saturation"}, {"kappa", a.kappa}, {"cap", a.cap}}; }
  } to;
  return std::visit(to, m);
}

inline json system_json(const MultiAgentConfig& c)
{
  json edges = json::array();
  for (const auto& e : c.edges)
    edges.push_back({{"i", e.a + 1},
                     {"j", e.b + 1},
                     {"potential", potential_json(e.potential)},
                     {"pbar", e.pbar},
                     {"forward", perturbation_json(e.forward)},
                     {"backward", perturbation_json(e.backward)}});
  json actuators = json::array();
  for (const auto& a : c.actuators) actuators.push_back(actuator_json(a));
  return {{"n", c.n}, {"edges", edges}, {"actuators", actuators}, {"y0", c.y0},
          {"dt", c.dt}, {"t_end", c.t_end}, {"seed", c.seed}};
}

inline json energy_json(const EnergySpec& spec)
{
  struct {
    json operator()(const QuadraticEnergySpec& s) const { return {{"family", "quadratic"}, {"Q", s.q}}; }
    json operator()(const PairwiseEnergySpec& s) const
    {
      json edges = json::array();
      for (const auto& e : s.edges) edges.push_back({{"i", e.a + 1}, {"j", e.b + 1}, {"potential", potential_json(e.potential)}});
      return {{"family", "pairwise"}, {"n", s.n}, {"edges", edges}};
    }
    json operator()(const BoxEnergySpec& s) const { return {{"family", "box_quartic"}, {"lower", s.lower}, {"upper", s.upper}}; }
    json operator()(const NormEnergySpec& s) const { return {{"family", "norm"}, {"n", s.n}}; }
    json operator()(const SumExpEnergySpec& s) const { return {{"family", "sum_exp"}, {"n", s.n}}; }
  } to;
  return std::visit(to, spec);
}

inline json scenario_json(const ScenarioSpec& spec)
{
  struct {
    json operator()(const Example1Spec& s) const { return {{"kind", "example1"}, {"t_end", s.t_end}, {"dt", s.dt}}; }
    json operator()(const SpiralSpec& s) const { return {{"kind", "spiral"}, {"t_end", s.t_end}, {"dt", s.dt}}; }
    json operator()(const PlatoonSpec& s) const { return {{"kind", "platoon"}, {"system", system_json(s.system)}}; }
    json operator()(const QuadraticDescentSpec& s) const
    {
      json gains = s.gains.kind == GainSchedule::Kind::Constant
                       ? json{{"kind", "constant"}, {"kappa", s.gains.kappa}}
                       : json{{"kind", "stop_go"}, {"kappa_max", s.gains.kappa}, {"tau", s.gains.tau}};
      return {{"kind", "quadratic_descent"}, {"Q", s.q},         {"gains", gains},  {"y0", s.y0},
              {"t_end", s.t_end},            {"dt", s.dt},       {"seed", s.seed},  {"require_pd", s.require_pd}};
    }
    json operator()(const ExternalTrajectorySpec& s) const
    {
      return {{"kind", "external_trajectory"}, {"csv", s.csv}, {"energy", energy_json(s.energy)}};
    }
  } to;
  return std::visit(to, spec);
}

inline json overrides_json(const AnalysisOverrides& o)
{
  json j = json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("tol", o.tol);
  put("zero_tol", o.zero_tol);
  put("grad_tol", o.grad_tol);
  put("rank_tol", o.rank_tol);
  put("eps_conv", o.eps_conv);
  put("tail_fraction", o.tail_fraction);
  put("cluster_radius", o.cluster_radius);
  put("radius_threshold", o.radius_threshold);
  put("sp_tol", o.sp_tol);
  return j;
}

}  // namespace detail

inline ConfigDocument parse_config(const nlohmann::json& j)
{
  detail::ObjectReader root(j, "");
  ConfigDocument doc;
  const auto& version = root.raw("version");
  if (!version.is_string() || version.get<std::string>() != "1")
    detail::ObjectReader::fail("version", "unsupported version (expected the string \"1\")");
  doc.version = "1";
  doc.scenario = detail::read_scenario(root.object("scenario"));
  if (root.has("analysis")) doc.analysis = detail::read_overrides(root.object("analysis"));
  root.finish();
  return doc;
}

inline ConfigDocument parse_config_text(const std::string& text)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline std::string read_file_bytes(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ConfigDocument load_config(const std::string& path) { return parse_config_text(read_file_bytes(path)); }

inline nlohmann::json to_json(const ConfigDocument& doc)
{
  nlohmann::json j = {{"version", doc.version}, {"scenario", detail::scenario_json(doc.scenario)}};
  const auto overrides = detail::overrides_json(doc.analysis);
  if (!overrides.empty()) j["analysis"] = overrides;
  return j;
}

inline void save_config(const ConfigDocument& doc, const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << to_json(doc).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Materialization
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows)
{
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

inline Eigen::VectorXd to_vector(const std::vector<double>& v)
{
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline EnergyFunction build_energy(const EnergySpec& spec)
{
  struct {
    EnergyFunction operator()(const QuadraticEnergySpec& s) const { return QuadraticEnergy(to_matrix(s.q)); }
    EnergyFunction operator()(const PairwiseEnergySpec& s) const
    {
      std::vector<Edge> edges;
      std::vector<EdgePotential> potentials;
      for (const auto& e : s.edges) {
        edges.push_back({e.a, e.b});
        potentials.push_back(e.potential);
      }
      return PairwiseEnergy(Graph(s.n, std::move(edges)), std::move(potentials));
    }
    EnergyFunction operator()(const BoxEnergySpec& s) const { return BoxQuarticEnergy(to_vector(s.lower), to_vector(s.upper)); }
    EnergyFunction operator()(const NormEnergySpec& s) const { return NormEnergy(s.n); }
    EnergyFunction operator()(const SumExpEnergySpec& s) const { return SumExpEnergy(s.n); }
  } build;
  try {
    return std::visit(build, spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("energy: ") + e.what());
  }
}

/// The energy a scenario is analyzed against.
inline EnergyFunction scenario_energy(const ScenarioSpec& spec)
{
  struct {
    EnergyFunction operator()(const Example1Spec&) const { return example1_energy(); }
    EnergyFunction operator()(const SpiralSpec&) const { return spiral_energy(); }
    EnergyFunction operator()(const PlatoonSpec& s) const { return pairwise_energy(s.system); }
    EnergyFunction operator()(const QuadraticDescentSpec& s) const { return QuadraticEnergy(to_matrix(s.q)); }
    EnergyFunction operator()(const ExternalTrajectorySpec& s) const { return build_energy(s.energy); }
  } build;
  try {
    return std::visit(build, spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

}  // namespace cwconv

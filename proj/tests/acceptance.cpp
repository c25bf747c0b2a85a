// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cwconv/cwconv.hpp"
#include "oracles.hpp"

using namespace cwconv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string fmt(const char* f, Args... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 -------------------------------------------------------------------------
Outcome example1_reproduction()
{
  constexpr double kTol = 1e-9;
  constexpr double kSegmentDist = 0.05;
  constexpr double kSpan = 0.9;
  constexpr double kRankRatio = 1e-8;
  constexpr double kAngle = 1e-4;
  constexpr double kMaxSeconds = 2.0;

  const auto t0 = std::chrono::steady_clock::now();
  std::stringstream csv;
  write_trajectory_csv(csv, example1_trajectory(200.0, 0.01));
  const auto traj = read_trajectory_csv(csv);
  AnalysisOverrides o;
  o.tol = kTol;
  o.tail_fraction = 0.5;
  o.cluster_radius = 0.1;
  const auto report = analyze_trajectory(traj, example1_energy(), resolve_settings(o));
  const double elapsed = seconds_since(t0);

  const auto* nc = std::get_if<NotConverged>(&report.verdict);
  if (!nc) return {false, fmt("verdict %s", verdict_name(report.verdict))};
  double worst_dist = 0.0;
  double lo = 1e300;
  double hi = -1e300;
  double worst_ratio = 0.0;
  double worst_angle = 0.0;
  bool all_hold = true;
  for (std::size_t k = 0; k < nc->accumulation_points.size(); ++k) {
    const auto& p = nc->accumulation_points[k];
    const double dy = std::max(0.0, std::abs(p[1]) - 1.0);
    worst_dist = std::max(worst_dist, std::hypot(p[0] - 2.0, dy));
    lo = std::min(lo, p[1]);
    hi = std::max(hi, p[1]);
    const auto& cb = nc->condition_b[k];
    all_hold = all_hold && cb.holds;
    worst_ratio = std::max(worst_ratio, cb.sigma_min / cb.sigma_max);
    const double c = std::min(1.0, std::abs(cb.kernel_vector.normalized()[1]));
    worst_angle = std::max(worst_angle, std::acos(c));
  }
  const std::size_t centers = nc->accumulation_points.size();
  const bool pass = report.weak->violations.empty() && centers >= 5 && worst_dist <= kSegmentDist && lo <= -kSpan &&
                    hi >= kSpan && all_hold && worst_ratio < kRankRatio && worst_angle < kAngle && elapsed < kMaxSeconds;
  return {pass, fmt("weak violations %zu, %zu centers, max dist %.2e, y span [%.3f, %.3f], sigma ratio %.1e, "
                    "kernel angle %.1e, %.2f s",
                    report.weak->violations.size(), centers, worst_dist, lo, hi, worst_ratio, worst_angle, elapsed)};
}

// 2 -------------------------------------------------------------------------
Outcome spiral_separation()
{
  constexpr double kMaxIncrease = 1e-12;
  constexpr double kMinFraction = 0.10;

  const auto traj = spiral_trajectory(20.0, 0.01);
  const auto v = spiral_energy();
  const auto profile = energy_profile_monotone(traj, v, kMaxIncrease);
  const auto weak = check_condition_cw(traj, v, 1e-9);
  const bool pass = profile.max_increase <= kMaxIncrease && weak.violation_fraction() >= kMinFraction;
  return {pass, fmt("max energy increase %.1e, weak violation fraction %.3f", profile.max_increase, weak.violation_fraction())};
}

// 3 -------------------------------------------------------------------------
Outcome quadratic_descent()
{
  constexpr double kDiameter = 1e-4;
  constexpr double kGrad = 1e-3;
  constexpr double kMaxSeconds = 5.0;

  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd r = random_symmetric(4, 0.5, 1);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(4, 4) + r;
  const GainSchedule gains{GainSchedule::Kind::StopGo, 1.0, 0.5};
  const auto traj = quadratic_descent_trajectory(q, gains, Eigen::VectorXd::Ones(4), 200.0, 1e-3, 1, true);
  const QuadraticEnergy energy(q);
  const auto report = analyze_trajectory(traj, energy, resolve_settings({}));
  const double elapsed = seconds_since(t0);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
  const double r_norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double grad = energy.gradient(traj.states.back()).norm();
  const auto* c = std::get_if<Converged>(&report.verdict);
  const bool pass = r_norm <= 0.5 + 1e-12 && c && c->tail_diameter < kDiameter && grad < kGrad && elapsed < kMaxSeconds;
  return {pass, fmt("||R|| %.3f, verdict %s, tail diameter %.1e, final grad %.1e, %.2f s", r_norm,
                    verdict_name(report.verdict), c ? c->tail_diameter : NAN, grad, elapsed)};
}

// 4 -------------------------------------------------------------------------
Outcome platoon_convergence()
{
  constexpr double kTol = 1e-9;
  constexpr double kSpTol = 1e-8;
  constexpr double kMaxSeconds = 10.0;

  const auto t0 = std::chrono::steady_clock::now();
  const MultiAgentSystem sys(build_platoon(PlatoonOptions{}));
  const double dt = sys.config().dt;
  const auto sim = sys.simulate();
  const auto& traj = sim.trajectory;
  const auto strict = check_condition_strict(traj, sys.energy(), 1e-12, kTol);
  const auto profile = energy_profile_monotone(traj, sys.energy(), 10 * dt * dt);
  AnalysisOverrides o;
  o.tol = kTol;
  o.sp_tol = kSpTol;
  const auto settings = resolve_settings(o);
  const auto verdict = classify_convergence(traj, sys.energy(), settings.convergence());
  const auto summary = platoon_summary(sys, traj, verdict, settings);
  const double elapsed = seconds_since(t0);

  const bool converged = std::holds_alternative<Converged>(verdict);
  const bool envelope = summary.envelope && summary.envelope->max_upper_increase <= 10 * dt &&
                        summary.envelope->max_lower_decrease <= 10 * dt;
  const bool pass = !sim.diverged && strict.violations.empty() && profile.max_increase <= 10 * dt * dt && envelope &&
                    converged && summary.sp_point == "limit" && summary.sp.member && elapsed < kMaxSeconds;
  return {pass, fmt("strict violations %zu, max energy increase %.1e, envelope %.1e/%.1e, verdict %s, S^p member %s, "
                    "%.2f s",
                    strict.violations.size(), profile.max_increase, summary.envelope ? summary.envelope->max_upper_increase : NAN,
                    summary.envelope ? summary.envelope->max_lower_decrease : NAN, verdict_name(verdict),
                    summary.sp.member ? "yes" : "no", elapsed)};
}

// 5 -------------------------------------------------------------------------
Outcome zero_perturbation_limit()
{
  constexpr double kLimitErr = 1e-3;
  constexpr double kMinimizerGrad = 1e-10;
  constexpr double kOracleErr = 1e-8;

  PlatoonOptions opts;
  opts.pbar = 0.0;
  opts.perturbation = PerturbationKind::Zero;
  opts.actuator = ActuatorKind::Identity;
  const auto config = build_platoon(opts);
  const MultiAgentSystem sys(config);
  const auto sim = sys.simulate();
  Eigen::VectorXd limit = sim.trajectory.states.back();
  limit.array() -= limit.mean();
  const auto minimizer = find_constrained_minimizer(sys.energy(), kMinimizerGrad);

  // Direct solve: grad V = 2 (L x - c) with L the w-weighted Laplacian and
  // c_b += w d, c_a -= w d; zero-mean fixed by a Lagrange row.
  const auto n = static_cast<Eigen::Index>(config.n);
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  std::vector<oracle::WeightedEdge> edges;
  for (const auto& e : config.edges) {
    const auto& q = std::get<QuadraticSpacing>(e.potential.kind());
    edges.push_back({static_cast<int>(e.a), static_cast<int>(e.b), q.w});
    rhs[static_cast<Eigen::Index>(e.b)] += q.w * q.d;
    rhs[static_cast<Eigen::Index>(e.a)] -= q.w * q.d;
  }
  aug.topLeftCorner(n, n) = oracle::laplacian(static_cast<int>(n), edges);
  aug.block(0, n, n, 1).setOnes();
  aug.block(n, 0, 1, n).setOnes();
  const Eigen::VectorXd solved = aug.fullPivLu().solve(rhs).head(n);

  const double limit_err = (limit - minimizer.x).cwiseAbs().maxCoeff();
  const double oracle_err = (minimizer.x - solved).cwiseAbs().maxCoeff();
  const bool pass = !sim.diverged && limit_err <= kLimitErr && minimizer.grad_norm < kMinimizerGrad && oracle_err < kOracleErr;
  return {pass, fmt("limit vs minimizer %.1e, minimizer grad %.1e, minimizer vs linear solve %.1e", limit_err,
                    minimizer.grad_norm, oracle_err)};
}

// 6 -------------------------------------------------------------------------
double second_derivative(const EdgePotential& p, double z)
{
  // f'' written out per family
  if (const auto* q = std::get_if<QuadraticSpacing>(&p.kind())) return q->w;
  if (const auto* q = std::get_if<QuadQuartic>(&p.kind())) return q->w + 12.0 * q->beta * (z - q->d) * (z - q->d);
  const auto& c = std::get<CoshSpacing>(p.kind());
  return c.w * std::cosh(z - c.d);
}

Outcome laplacian_structure()
{
  constexpr int kConfigs = 100;
  constexpr double kHessErr = 1e-9;
  constexpr double kAngle = 1e-8;

  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 8);
  double worst_err = 0.0;
  double worst_fd = 0.0;
  double worst_angle = 0.0;
  int bad_nullity = 0;
  int property_true = 0;
  for (int trial = 0; trial < kConfigs; ++trial) {
    const int n = size(rng);
    const auto pairs = oracle::random_connected_graph(n, 0.4, rng);
    std::vector<Edge> es;
    std::vector<EdgePotential> pots;
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      es.push_back({static_cast<std::size_t>(pairs[e].first), static_cast<std::size_t>(pairs[e].second)});
      const double w = 0.2 + 2.0 * unit(rng);
      const double d = 2.0 * unit(rng) - 1.0;
      switch ((trial + static_cast<int>(e)) % 3) {
        case 0: pots.push_back(EdgePotential(QuadraticSpacing{w, d})); break;
        case 1: pots.push_back(EdgePotential(QuadQuartic{w, d, unit(rng)})); break;
        default: pots.push_back(EdgePotential(CoshSpacing{w, d})); break;
      }
    }
    const PairwiseEnergy v(Graph(static_cast<std::size_t>(n), es), pots);
    const Eigen::VectorXd x = oracle::random_vector(n, 1.5, rng);

    std::vector<oracle::WeightedEdge> weighted;
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      const auto [a, b] = pairs[e];
      weighted.push_back({a, b, 2.0 * second_derivative(pots[e], x[b] - x[a])});
    }
    const Eigen::MatrixXd h = v.hessian(x);
    worst_err = std::max(worst_err, (h - oracle::laplacian(n, weighted)).cwiseAbs().maxCoeff());
    // the Laplacian is also checked against differences of V itself
    worst_fd = std::max(worst_fd, fd_consistency(EnergyFunction(v), x, 1e-5).max_rel_err_hess);

    const Eigen::MatrixXd basis = hessian_kernel_basis(h, 1e-8);
    if (basis.cols() != 1) {
      ++bad_nullity;
      continue;
    }
    worst_angle = std::max(worst_angle, oracle::angle_to_span(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(n)), basis));
    property_true += kernel_zero_component_property(basis);
  }
  const bool pass = worst_err <= kHessErr && worst_fd < 1e-6 && bad_nullity == 0 && worst_angle < kAngle && property_true == 0;
  return {pass, fmt("%d configs, max |H - L(2f'')| %.1e, FD check %.1e, nullity != 1: %d, max angle %.1e, "
                    "zero-component property true: %d",
                    kConfigs, worst_err, worst_fd, bad_nullity, worst_angle, property_true)};
}

// 7 -------------------------------------------------------------------------
Eigen::MatrixXd random_orthonormal(int n, std::mt19937_64& rng, const Eigen::VectorXd* first = nullptr)
{
  Eigen::MatrixXd a(n, n);
  std::normal_distribution<double> g;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  if (first) a.col(0) = *first;
  // Gram-Schmidt keeps the first column's direction
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < j; ++k) a.col(j) -= a.col(k).dot(a.col(j)) * a.col(k);
    a.col(j).normalize();
  }
  return a;
}

Outcome certificate_oracle()
{
  constexpr int kInstances = 500;
  constexpr double kRankTol = 1e-8;
  constexpr double kSeparation = 1e-4;

  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  auto magnitude = [&] { return (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 1.5 * unit(rng)); };

  int accepted = 0;
  int agree = 0;
  int planted_holds = 0;
  int rejected = 0;
  while (accepted < kInstances) {
    const int n = accepted % 2 == 0 ? 3 : 4;
    const int cls = (accepted / 2) % 3;
    Eigen::MatrixXd h;
    Eigen::VectorXd g(n);
    if (cls == 2) {
      h = oracle::random_symmetric_matrix(n, rng);
      for (int i = 0; i < n; ++i) g[i] = normal(rng);
    } else {
      // kernel vector v supported on a random nonempty subset S
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      std::vector<bool> in(n, false);
      while (v.isZero()) {
        for (int i = 0; i < n; ++i) {
          in[i] = unit(rng) < 0.6;
          if (in[i]) v[i] = magnitude();
        }
      }
      v.normalize();
      const Eigen::MatrixXd p = random_orthonormal(n, rng, &v);
      Eigen::VectorXd lambda(n);
      lambda[0] = 0.0;
      for (int i = 1; i < n; ++i) lambda[i] = magnitude();
      h = p * lambda.asDiagonal() * p.transpose();
      h = 0.5 * (h + h.transpose()).eval();
      for (int i = 0; i < n; ++i) g[i] = (cls == 0 && in[i]) ? 0.0 : magnitude();
    }
    Eigen::MatrixXd stacked(2 * n, n);
    stacked.topRows(n) = h;
    stacked.bottomRows(n) = g.asDiagonal();

    // separation from the rank threshold, via eigenvalues of M^T M
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(stacked.transpose() * stacked, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd sv = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const double scale = std::max(1.0, sv.maxCoeff());
    const bool planted = cls == 0;
    const bool separated = planted ? sv[1] >= kSeparation * scale : sv[0] >= kSeparation * scale;
    if (!separated) {
      ++rejected;
      continue;
    }
    ++accepted;
    planted_holds += planted;
    const bool oracle_holds = oracle::row_reduction_rank(stacked) < n;
    const auto cert = condition_b_certificate(h, g, Eigen::VectorXd::Zero(n), kRankTol);
    agree += cert.holds == oracle_holds && oracle_holds == planted;
  }
  return {agree == kInstances, fmt("%d/%d agree (%d planted kernels, %d candidates rejected for separation)", agree,
                                   kInstances, planted_holds, rejected)};
}

// 8 -------------------------------------------------------------------------
struct FdErrors {
  double grad = 0.0;
  double hess = 0.0;
};

// Central differences with plain relative error ||fd - exact||_inf / ||exact||_inf.
FdErrors central_difference_errors(const EnergyFunction& v, const Eigen::VectorXd& x, double h)
{
  const auto n = x.size();
  Eigen::VectorXd fd_g(n);
  Eigen::MatrixXd fd_h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    fd_g[i] = (v.value(xp) - v.value(xm)) / (2 * h);
    fd_h.col(i) = (v.gradient(xp) - v.gradient(xm)) / (2 * h);
  }
  auto rel = [](const auto& fd, const auto& exact) {
    const double err = (fd - exact).cwiseAbs().maxCoeff();
    const double scale = exact.cwiseAbs().maxCoeff();
    return scale > 0.0 ? err / scale : err;
  };
  return {rel(fd_g, v.gradient(x)), rel(fd_h, v.hessian(x))};
}

Outcome fd_suite()
{
  constexpr int kPoints = 200;
  constexpr double kStep = 1e-5;
  constexpr double kRelErr = 1e-6;

  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 6);
  FdErrors worst[3];
  auto track = [&](int family, const FdErrors& e) {
    worst[family].grad = std::max(worst[family].grad, e.grad);
    worst[family].hess = std::max(worst[family].hess, e.hess);
  };
  for (int k = 0; k < kPoints; ++k) {
    const int n = dim(rng);
    const Eigen::MatrixXd q = oracle::random_symmetric_matrix(n, rng);
    track(0, central_difference_errors(QuadraticEnergy(q), oracle::random_vector(n, 2.0, rng), kStep));

    const auto pairs = oracle::random_connected_graph(n, 0.3, rng);
    std::vector<Edge> es;
    std::vector<EdgePotential> pots;
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      es.push_back({static_cast<std::size_t>(pairs[e].first), static_cast<std::size_t>(pairs[e].second)});
      const double w = 0.2 + unit(rng);
      const double d = unit(rng) - 0.5;
      switch (e % 3) {
        case 0: pots.push_back(EdgePotential(QuadraticSpacing{w, d})); break;
        case 1: pots.push_back(EdgePotential(QuadQuartic{w, d, unit(rng)})); break;
        default: pots.push_back(EdgePotential(CoshSpacing{w, d})); break;
      }
    }
    track(1, central_difference_errors(PairwiseEnergy(Graph(n, es), pots), oracle::random_vector(n, 2.0, rng), kStep));

    const Eigen::VectorXd lower = -Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd upper = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd x;
    do {
      x = oracle::random_vector(n, 3.0, rng);
    } while (((x - lower).cwiseAbs().minCoeff() < 10 * kStep) || ((x - upper).cwiseAbs().minCoeff() < 10 * kStep));
    track(2, central_difference_errors(BoxQuarticEnergy(lower, upper), x, kStep));
  }
  bool pass = true;
  for (const auto& w : worst) pass = pass && w.grad < kRelErr && w.hess < kRelErr;
  return {pass, fmt("%d points per family; grad/hess rel err quadratic %.1e/%.1e, pairwise %.1e/%.1e, box %.1e/%.1e", kPoints,
                    worst[0].grad, worst[0].hess, worst[1].grad, worst[1].hess, worst[2].grad, worst[2].hess)};
}

}  // namespace

int main()
{
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"example1 reproduction", example1_reproduction},
      {"spiral separation", spiral_separation},
      {"quadratic descent with stop-go gains", quadratic_descent},
      {"platoon convergence", platoon_convergence},
      {"zero-perturbation limit", zero_perturbation_limit},
      {"pairwise Hessian structure", laplacian_structure},
      {"certificate vs row reduction", certificate_oracle},
      {"finite-difference suite", fd_suite},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

#include <iostream>

#include "cwconv/cwconv.hpp"

int main()
{
  using namespace cwconv;

  PlatoonOptions options;
  const MultiAgentSystem system(build_platoon(options));
  const auto result = system.simulate();
  const auto& traj = result.trajectory;

  const auto strict = check_condition_strict(traj, system.energy(), 1e-12, 1e-9);
  const auto verdict = classify_convergence(traj, system.energy());

  std::cout << "samples: " << traj.size() << '\n';
  std::cout << "strict violations: " << strict.violations.size() << '\n';
  std::cout << "verdict: " << verdict_name(verdict) << '\n';
  std::cout << "final state:";
  for (Eigen::Index i = 0; i < traj.states.back().size(); ++i) std::cout << ' ' << traj.states.back()[i];
  std::cout << '\n';
  std::cout << "in S^p: " << std::boolalpha << system.sp_membership(traj.states.back(), 1e-8).member << '\n';
}

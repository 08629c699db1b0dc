#include <iostream>

#include "mfioc/mfioc.hpp"

int main() {
  using namespace mfioc;

  // Forward problem: an optimal expert for the nominal three-state plant.
  const LtiSystem sys = nominal::system();
  const CostWeights cost = nominal::cost();
  const LqrSolution lqr = solve_care(sys, cost);
  const Trajectory expert = simulate_closed_loop(
      sys, lqr.K, nominal::initial_state(), nominal::kHorizon, nominal::kDt);

  // Inverse problem: only the trajectory is used from here on.
  const RunConfig cfg;
  const PipelineResult res = run_from_trajectory(expert, cfg);

  std::cout << "identified K*\n" << res.gain.K << "\n\n";
  std::cout << "status " << to_string(res.status()) << " after "
            << res.solve.trace.cycles() << " cycles\n";
  if (!res.model) {
    std::cout << "recovery failed: " << res.recovery_error << '\n';
    return 1;
  }
  std::cout << "A_hat\n" << res.model->A_hat << "\n\n";
  std::cout << "B_hat\n" << res.model->B_hat << "\n\n";
  std::cout << "K_hat\n" << res.model->K_hat << "\n\n";
  const Verification& v = *res.verification;
  std::cout << "gain error " << v.gain_error_fro << ", trajectory MSE "
            << v.traj_mse << ", certificate "
            << (v.passed() ? "pass" : "fail") << '\n';
  return v.passed() ? 0 : 1;
}

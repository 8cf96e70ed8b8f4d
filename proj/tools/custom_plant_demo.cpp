// Drives a user-defined nonlinear plant with the library's closed loop.
// Any type with state_dim(), control_dim() and step(x, u) works.

#include <cmath>
#include <cstdio>

#include "edhdp/edhdp.hpp"

namespace {

/// Damped pendulum near the hanging equilibrium, explicit Euler, dt = 0.05.
struct Pendulum {
  std::size_t state_dim() const { return 2; }
  std::size_t control_dim() const { return 1; }
  edhdp::Vector step(const edhdp::Vector& x, const edhdp::Vector& u) const {
    constexpr double dt = 0.05;
    edhdp::Vector next(2);
    next(0) = x(0) + dt * x(1);
    next(1) = x(1) + dt * (-9.81 * std::sin(x(0)) - 0.2 * x(1) + u(0));
    return next;
  }
};

}  // namespace

int main() {
  edhdp::RunConfig cfg;
  cfg.x0 = edhdp::Vector{{0.5, 0.0}};
  cfg.seed = 7;
  for (double beta : {0.0, 0.2, 0.4}) {
    cfg.phases = edhdp::protocols::stabilization(beta, 400);
    try {
      const edhdp::Trace trace = edhdp::run(Pendulum{}, cfg);
      const std::size_t n = trace.size();
      std::printf("beta=%.1f events=%zu mean|x| first100=%.4f last100=%.4f eta=%.3g\n", beta,
                  edhdp::event_count(trace, {0, n}), edhdp::mean_state_norm(trace, {0, 100}),
                  edhdp::mean_state_norm(trace, {n - 100, n}), trace.records.back().eta);
    } catch (const edhdp::DivergenceError& e) {
      std::printf("beta=%.1f diverged at step %zu\n", beta, e.step());
    }
  }
}

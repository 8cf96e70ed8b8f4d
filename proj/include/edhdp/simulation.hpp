#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "edhdp/agent.hpp"
#include "edhdp/approximator.hpp"
#include "edhdp/errors.hpp"
#include "edhdp/plant.hpp"
#include "edhdp/trigger.hpp"

namespace edhdp {

enum class PhaseMode {
  time_driven,   ///< every step is an event
  event_driven,  ///< events decided by the state-error trigger
  frozen,        ///< trigger still refreshes the hold, weights never change
};

inline const char* to_string(PhaseMode mode) {
  switch (mode) {
    case PhaseMode::time_driven: return "time_driven";
    case PhaseMode::event_driven: return "event_driven";
    case PhaseMode::frozen: return "frozen";
  }
  return "?";
}

struct Phase {
  std::size_t length = 0;
  PhaseMode mode = PhaseMode::event_driven;
  /// Trigger parameter for event_driven and frozen phases.
  double beta = 0.0;
  bool noise_active = false;
};

/// One row of a closed-loop run. The columns after dwa_sq are internals kept
/// for audits (trigger re-evaluation, bound measurement) and are not part of
/// the CSV schema.
struct StepRecord {
  std::size_t k = 0;
  Vector x;
  Vector u;
  bool event = false;
  double reward = 0.0;
  double value = 0.0;
  double td_error = std::numeric_limits<double>::quiet_NaN();
  double eta = 0.0;
  double critic_delta_sq = 0.0;
  double action_delta_sq = 0.0;

  PhaseMode mode = PhaseMode::event_driven;
  double beta = 0.0;
  /// x(delta_k) before this step's trigger decision.
  Vector held_x_before;
  /// Raw ||omega_a||_F^2 at the start of the step (before flooring).
  double omega_a_norm_sq = 0.0;
  double threshold = 0.0;
  bool updated = false;
  bool rate_clamped = false;
  double phi_c_norm_sq = 0.0;
  double phi_a_norm_sq = 0.0;
  /// Frobenius norm of C(k) at [x; u].
  double grad_factor_norm = 0.0;
};

struct Trace {
  std::size_t state_dim = 0;
  std::size_t control_dim = 0;
  std::size_t critic_hidden = 0;
  std::size_t action_hidden = 0;
  double lipschitz = 0.0;
  double omega_floor = 0.0;
  std::vector<StepRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, Trace partial)
      : std::runtime_error("state diverged at step " + std::to_string(step)),
        step_(step), partial_(std::move(partial)) {}

  std::size_t step() const noexcept { return step_; }
  const Trace& partial_trace() const noexcept { return partial_; }

 private:
  std::size_t step_;
  Trace partial_;
};

struct AgentSpec {
  std::size_t critic_hidden = 6;
  std::size_t action_hidden = 6;
  /// Initial output weights are uniform in [-init_range, init_range].
  double init_range = 0.4;
  /// Fixed input weights are uniform in [-tau_range, tau_range].
  double tau_range = 0.4;
  AgentConfig learning;
};

struct TriggerSpec {
  /// Overrides the estimated Lipschitz constant of the action features.
  std::optional<double> lipschitz;
  double lipschitz_floor = 1e-6;
  double omega_floor = 1e-8;
};

struct NoiseSpec {
  double mean = 0.1;
  double stddev = 1.0;
  /// Empty means [0, 0.1] for the two-state benchmark, zero elsewhere.
  Vector gain;
  /// Restricts injection further; defaults to the whole run.
  std::optional<StepWindow> window;
};

using PlantSpec = std::variant<BenchmarkPlant, LinearPlant>;

inline std::size_t state_dim(const PlantSpec& p) {
  return std::visit([](const auto& plant) { return plant.state_dim(); }, p);
}
inline std::size_t control_dim(const PlantSpec& p) {
  return std::visit([](const auto& plant) { return plant.control_dim(); }, p);
}

struct RunConfig {
  PlantSpec plant = BenchmarkPlant{};
  AgentSpec agent;
  /// Empty means Q = I, R = 0.1 I sized from the plant.
  std::optional<RewardSpec> cost;
  TriggerSpec trigger;
  NoiseSpec noise;
  std::vector<Phase> phases{{500, PhaseMode::event_driven, 0.0, false}};
  /// Empty means [-1, 1] for the two-state benchmark, zero elsewhere.
  Vector x0;
  std::uint64_t seed = 0;
  double divergence_limit = 1e6;

  std::size_t total_steps() const {
    std::size_t total = 0;
    for (const auto& p : phases) total += p.length;
    return total;
  }
};

inline RewardSpec resolved_cost(const RunConfig& cfg) {
  if (cfg.cost) return *cfg.cost;
  return RewardSpec::standard(state_dim(cfg.plant), control_dim(cfg.plant));
}

/// [-1, 1] for a two-state plant, the origin otherwise.
inline Vector default_x0(std::size_t m) {
  if (m == 2) return Vector{{-1.0, 1.0}};
  return Vector::Zero(static_cast<Eigen::Index>(m));
}

/// [0, 0.1] (the control channel of the benchmark) for a two-state plant,
/// zero otherwise.
inline Vector default_noise_gain(std::size_t m) {
  if (m == 2) return Vector{{0.0, 0.1}};
  return Vector::Zero(static_cast<Eigen::Index>(m));
}

/// Throws ConfigError naming the first violated invariant. Under the strict
/// guard the learning rates must satisfy l < 1 / N_h, the supremum of
/// 1 / ||phi||^2 bound over all inputs.
inline void validate(const RunConfig& cfg) {
  const std::size_t m = state_dim(cfg.plant);
  const std::size_t n = control_dim(cfg.plant);
  const AgentSpec& a = cfg.agent;
  if (a.critic_hidden == 0 || a.action_hidden == 0)
    throw ConfigError("hidden layer sizes must be positive");
  if (!(a.init_range >= 0) || !(a.tau_range >= 0))
    throw ConfigError("weight init ranges must be non-negative");
  try {
    validate(a.learning);
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  if (a.learning.guard == GuardMode::strict) {
    if (a.learning.critic_rate >= 1.0 / static_cast<double>(a.critic_hidden))
      throw ConfigError("strict learning-rate guard: l_c = " +
                        std::to_string(a.learning.critic_rate) + " must be < 1/N_hc = " +
                        std::to_string(1.0 / static_cast<double>(a.critic_hidden)));
    if (a.learning.action_rate >= 1.0 / static_cast<double>(a.action_hidden))
      throw ConfigError("strict learning-rate guard: l_a = " +
                        std::to_string(a.learning.action_rate) + " must be < 1/N_ha = " +
                        std::to_string(1.0 / static_cast<double>(a.action_hidden)));
  }
  if (cfg.phases.empty() || cfg.total_steps() == 0)
    throw ConfigError("run needs at least one phase with a positive length");
  for (const auto& p : cfg.phases)
    if (!(p.beta >= 0.0 && p.beta < 1.0)) throw ConfigError("phase beta must lie in [0, 1)");
  if (cfg.cost && (cfg.cost->state_dim() != m || cfg.cost->control_dim() != n))
    throw ConfigError("Q and R must be sized to the plant's state and control dimensions");
  if (cfg.x0.size() > 0 && static_cast<std::size_t>(cfg.x0.size()) != m)
    throw ConfigError("x0 size does not match the plant state dimension");
  if (cfg.x0.size() > 0 && !cfg.x0.allFinite()) throw ConfigError("x0 must be finite");
  if (cfg.noise.gain.size() > 0 && static_cast<std::size_t>(cfg.noise.gain.size()) != m)
    throw ConfigError("noise gain size does not match the plant state dimension");
  if (!(cfg.noise.stddev >= 0)) throw ConfigError("noise stddev must be non-negative");
  if (cfg.trigger.lipschitz && !(*cfg.trigger.lipschitz > 0))
    throw ConfigError("trigger Lipschitz override must be positive");
  if (!(cfg.trigger.lipschitz_floor > 0)) throw ConfigError("lipschitz_floor must be positive");
  if (!(cfg.trigger.omega_floor >= 0)) throw ConfigError("omega_floor must be non-negative");
  if (!(cfg.divergence_limit > 0)) throw ConfigError("divergence_limit must be positive");
}

/// Independent 64-bit seeds for the weight-init and noise streams of a run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline DhdpAgent make_agent(const RunConfig& cfg, WarningSink warn = stderr_warning_sink()) {
  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  return DhdpAgent::random(state_dim(cfg.plant), control_dim(cfg.plant), cfg.agent.critic_hidden,
                           cfg.agent.action_hidden, cfg.agent.tau_range, cfg.agent.init_range,
                           cfg.agent.learning, rng, std::move(warn));
}

inline double lipschitz_for(const RunConfig& cfg, const DhdpAgent& agent) {
  if (cfg.trigger.lipschitz) return *cfg.trigger.lipschitz;
  return std::max(estimate_lipschitz(agent.action().input_weights()),
                  cfg.trigger.lipschitz_floor);
}

/// Closed-loop run with a caller-supplied plant and agent. Per step:
/// observe x(k), decide the event, on an event hold u = act(x(k)) and update
/// the agent (unless frozen), evaluate r(k) with the held control, then
/// advance the plant and add noise.
template <DiscretePlant P>
Trace run(const P& plant, const RunConfig& cfg, DhdpAgent agent) {
  const std::size_t m = plant.state_dim();
  const std::size_t n = plant.control_dim();
  detail::require(agent.state_dim() == m && agent.control_dim() == n,
                  "run: agent dimensions do not match the plant");
  detail::require(!cfg.phases.empty(), "run: no phases");

  const RewardSpec cost = cfg.cost ? *cfg.cost : RewardSpec::standard(m, n);
  detail::require(cost.state_dim() == m && cost.control_dim() == n,
                  "run: cost matrices do not match the plant");
  const double la = lipschitz_for(cfg, agent);

  std::vector<TriggerConfig> triggers;
  triggers.reserve(cfg.phases.size());
  for (const auto& phase : cfg.phases) {
    const double beta = phase.mode == PhaseMode::time_driven ? 0.0 : phase.beta;
    triggers.push_back(cost.trigger(beta, la, cfg.trigger.omega_floor));
  }

  Vector x = cfg.x0.size() > 0 ? cfg.x0 : default_x0(m);
  detail::require(static_cast<std::size_t>(x.size()) == m, "run: x0 size mismatch");
  const Vector gain = cfg.noise.gain.size() > 0 ? cfg.noise.gain : default_noise_gain(m);
  const StepWindow noise_window =
      cfg.noise.window.value_or(StepWindow{0, std::numeric_limits<std::size_t>::max()});
  NoiseProcess noise(cfg.noise.mean, cfg.noise.stddev, gain, noise_window,
                     derive_seed(cfg.seed, 1));

  Trace trace;
  trace.state_dim = m;
  trace.control_dim = n;
  trace.critic_hidden = agent.critic().hidden_dim();
  trace.action_hidden = agent.action().hidden_dim();
  trace.lipschitz = la;
  trace.omega_floor = cfg.trigger.omega_floor;
  trace.records.reserve(cfg.total_steps());

  TriggerState hold{x, Vector::Zero(static_cast<Eigen::Index>(n)), 0, 0};
  double variation = 0.0;
  const double normalizer = static_cast<double>(trace.critic_hidden + trace.action_hidden);

  std::size_t k = 0;
  for (std::size_t p = 0; p < cfg.phases.size(); ++p) {
    const Phase& phase = cfg.phases[p];
    const TriggerConfig& trig = triggers[p];
    for (std::size_t i = 0; i < phase.length; ++i, ++k) {
      StepRecord rec;
      rec.k = k;
      rec.x = x;
      rec.mode = phase.mode;
      rec.beta = trig.beta();
      rec.held_x_before = hold.held_x;
      rec.omega_a_norm_sq = agent.action().output_weights().squaredNorm();
      const double omega_sq = trig.floored_norm_sq(rec.omega_a_norm_sq);
      rec.threshold = threshold(trig, x, omega_sq);

      bool event = k == 0 || phase.mode == PhaseMode::time_driven;
      if (!event) event = check_event(trig, hold, x, omega_sq);
      if (event) hold = fire(std::move(hold), k, x, agent.act(x));
      rec.event = event;
      rec.u = hold.held_u;

      rec.reward = reward(cost, x, rec.u);
      const bool learn = event && phase.mode != PhaseMode::frozen;

      const Vector phi_c = agent.critic().hidden(agent.critic_input(x, rec.u));
      rec.phi_c_norm_sq = phi_c.squaredNorm();
      rec.phi_a_norm_sq = agent.action().hidden(x).squaredNorm();
      rec.grad_factor_norm = critic_input_grad_factor(agent.critic(), phi_c, m, n).norm();

      const AgentStepReport rep = agent.step(x, rec.u, rec.reward, learn);
      rec.value = rep.value;
      rec.td_error = rep.td_error;
      rec.updated = rep.updated;
      rec.rate_clamped = rep.rate_clamped;
      rec.critic_delta_sq = rep.critic_delta_sq;
      rec.action_delta_sq = rep.action_delta_sq;
      variation += rep.critic_delta_sq + rep.action_delta_sq;
      rec.eta = variation / normalizer;
      trace.records.push_back(std::move(rec));

      Vector next = plant.step(x, hold.held_u);
      if (phase.noise_active) next += noise.sample(k);
      if (!next.allFinite() || next.norm() > cfg.divergence_limit)
        throw DivergenceError(k + 1, std::move(trace));
      x = std::move(next);
    }
  }
  return trace;
}

template <DiscretePlant P>
Trace run(const P& plant, const RunConfig& cfg) {
  return run(plant, cfg, make_agent(cfg));
}

/// Validates the configuration, then runs it against its configured plant.
inline Trace run(const RunConfig& cfg, WarningSink warn = stderr_warning_sink()) {
  validate(cfg);
  return std::visit(
      [&](const auto& plant) { return run(plant, cfg, make_agent(cfg, std::move(warn))); },
      cfg.plant);
}

/// Accumulated squared weight change of both networks over steps 0..k,
/// divided by N_hc + N_ha.
inline double eta(const Trace& trace, std::size_t k) {
  detail::require(k < trace.size(), "eta: step index out of range");
  double total = 0.0;
  for (std::size_t j = 0; j <= k; ++j)
    total += trace.records[j].critic_delta_sq + trace.records[j].action_delta_sq;
  return total / static_cast<double>(trace.critic_hidden + trace.action_hidden);
}

inline void check_window(const Trace& trace, const StepWindow& w, const char* op) {
  detail::require(w.begin <= w.end && w.end <= trace.size(),
                  std::string(op) + ": window [" + std::to_string(w.begin) + ", " +
                      std::to_string(w.end) + ") outside trace of " +
                      std::to_string(trace.size()) + " steps");
}

inline std::size_t event_count(const Trace& trace, const StepWindow& w) {
  check_window(trace, w, "event_count");
  std::size_t count = 0;
  for (std::size_t k = w.begin; k < w.end; ++k) count += trace.records[k].event ? 1 : 0;
  return count;
}

struct ResidualStats {
  double mean_abs = 0.0;
  double max_abs = 0.0;
};

/// Statistics of |td_error| over a window that must start at k >= 1.
inline ResidualStats bellman_residual_stats(const Trace& trace, const StepWindow& w) {
  check_window(trace, w, "bellman_residual_stats");
  detail::require(w.size() > 0, "bellman_residual_stats: empty window");
  detail::require(w.begin >= 1, "bellman_residual_stats: window must exclude step 0");
  ResidualStats s;
  for (std::size_t k = w.begin; k < w.end; ++k) {
    const double r = std::abs(trace.records[k].td_error);
    s.mean_abs += r;
    s.max_abs = std::max(s.max_abs, r);
  }
  s.mean_abs /= static_cast<double>(w.size());
  return s;
}

/// Mean of ||x(k)|| over a window.
inline double mean_state_norm(const Trace& trace, const StepWindow& w) {
  check_window(trace, w, "mean_state_norm");
  detail::require(w.size() > 0, "mean_state_norm: empty window");
  double total = 0.0;
  for (std::size_t k = w.begin; k < w.end; ++k) total += trace.records[k].x.norm();
  return total / static_cast<double>(w.size());
}

/// Phase schedules used by the experiments.
namespace protocols {

/// A single event-driven phase without noise.
inline std::vector<Phase> stabilization(double beta, std::size_t steps = 500) {
  return {{steps, PhaseMode::event_driven, beta, false}};
}

/// Time-driven clean training, event-driven with noise, event-driven clean.
inline std::vector<Phase> drift(double beta, std::size_t train = 100, std::size_t noisy = 200,
                                std::size_t clean = 200) {
  return {{train, PhaseMode::time_driven, 0.0, false},
          {noisy, PhaseMode::event_driven, beta, true},
          {clean, PhaseMode::event_driven, beta, false}};
}

}  // namespace protocols
}  // namespace edhdp

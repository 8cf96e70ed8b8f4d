#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "edhdp/approximator.hpp"
#include "edhdp/errors.hpp"

namespace edhdp {

/// How a learning rate that breaks l < 1 / ||phi||^2 is handled.
enum class GuardMode {
  strict,      ///< throw LearningRateError
  permissive,  ///< warn and clamp the rate for that update
};

struct AgentConfig {
  double critic_rate = 0.1;
  double action_rate = 0.1;
  GuardMode guard = GuardMode::strict;
  /// Permissive mode clamps a violating rate to guard_margin / ||phi||^2.
  double guard_margin = 0.99;
  /// Gradient cycles per event step. One cycle is a single application of
  /// the critic or action rule.
  int critic_cycles = 1;
  int action_cycles = 1;
  /// true: the action step reads the critic weights after this step's critic
  /// update. false: it reads the weights from the start of the step.
  bool action_uses_updated_critic = true;
};

inline void validate(const AgentConfig& cfg) {
  if (!(cfg.critic_rate > 0) || !std::isfinite(cfg.critic_rate))
    throw ContractViolation("critic learning rate must be positive and finite");
  if (!(cfg.action_rate > 0) || !std::isfinite(cfg.action_rate))
    throw ContractViolation("action learning rate must be positive and finite");
  if (!(cfg.guard_margin > 0 && cfg.guard_margin < 1))
    throw ContractViolation("guard_margin must lie in (0, 1)");
  if (cfg.critic_cycles < 1 || cfg.action_cycles < 1)
    throw ContractViolation("gradient cycle counts must be at least 1");
}

struct AgentStepReport {
  Vector u;
  /// Critic output at [x; u] before any update in this step.
  double value = 0.0;
  /// NaN when no memory exists yet.
  double td_error = std::numeric_limits<double>::quiet_NaN();
  bool updated = false;
  double critic_delta_sq = 0.0;
  double action_delta_sq = 0.0;
  bool rate_clamped = false;
};

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink stderr_warning_sink() {
  return [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
}

/// Online actor-critic learner. The critic maps [x; u] to a scalar
/// cost-to-go estimate, the action network maps x to u. Both nets train only
/// their output weights.
///
/// The agent keeps a one-step memory of (critic features, critic value,
/// reward) from the previous call to step(); it is refreshed on every step,
/// event or not.
class DhdpAgent {
 public:
  struct Memory {
    Vector phi_c;
    double value;
    double reward;
  };

  DhdpAgent(TwoLayerNet critic, TwoLayerNet action, AgentConfig cfg = {},
            WarningSink warn = stderr_warning_sink())
      : critic_(std::move(critic)),
        action_(std::move(action)),
        cfg_(cfg),
        warn_(std::move(warn)) {
    validate(cfg_);
    detail::require(critic_.output_dim() == 1, "DhdpAgent: critic must have one output");
    detail::require(critic_.input_dim() > action_.input_dim(),
                    "DhdpAgent: critic input must be [x; u]");
    detail::require(critic_.input_dim() == action_.input_dim() + action_.output_dim(),
                    "DhdpAgent: critic input_dim must equal state_dim + control_dim");
  }

  template <class Rng>
  static DhdpAgent random(std::size_t state_dim, std::size_t control_dim,
                          std::size_t critic_hidden, std::size_t action_hidden,
                          double tau_range, double omega_range, const AgentConfig& cfg,
                          Rng& rng, WarningSink warn = stderr_warning_sink()) {
    auto critic = TwoLayerNet::random(state_dim + control_dim, critic_hidden, 1, tau_range,
                                      omega_range, rng);
    auto action =
        TwoLayerNet::random(state_dim, action_hidden, control_dim, tau_range, omega_range, rng);
    return DhdpAgent(std::move(critic), std::move(action), cfg, std::move(warn));
  }

  std::size_t state_dim() const { return action_.input_dim(); }
  std::size_t control_dim() const { return action_.output_dim(); }
  const TwoLayerNet& critic() const { return critic_; }
  const TwoLayerNet& action() const { return action_; }
  const AgentConfig& config() const { return cfg_; }
  const std::optional<Memory>& memory() const { return memory_; }
  bool has_memory() const { return memory_.has_value(); }

  void set_warning_sink(WarningSink warn) { warn_ = std::move(warn); }

  Vector act(const Vector& x) const { return action_.forward(x); }

  Vector critic_input(const Vector& x, const Vector& u) const {
    detail::require(static_cast<std::size_t>(x.size()) == state_dim(),
                    "critic_input: state size mismatch");
    detail::require(static_cast<std::size_t>(u.size()) == control_dim(),
                    "critic_input: control size mismatch");
    Vector z(x.size() + u.size());
    z << x, u;
    return z;
  }

  /// e_c = V_now - (V_prev - r_prev).
  double td_error(double value_now) const {
    const Memory& mem = require_memory("td_error");
    return value_now - (mem.value - mem.reward);
  }

  /// One critic gradient step on the TD residual
  ///   omega_c^T phi_c_now + r_prev - V_prev
  /// where V_prev is the stored value (previous weights on previous features).
  Matrix update_critic(const Vector& phi_c_now, double r_prev) {
    const Memory& mem = require_memory("update_critic");
    detail::require(static_cast<std::size_t>(phi_c_now.size()) == critic_.hidden_dim(),
                    "update_critic: phi_c size mismatch");
    const double rate = guarded_rate(cfg_.critic_rate, phi_c_now, "critic");
    const double residual =
        critic_.output_weights().col(0).dot(phi_c_now) + r_prev - mem.value;
    Matrix delta = -rate * residual * phi_c_now;
    critic_.apply_delta(delta);
    return delta;
  }

  /// One action gradient step: -l_a * phi_a * (omega_c^T C) * (omega_c^T phi_c),
  /// using the current critic weights.
  Matrix update_action(const Vector& phi_a_now, const Vector& phi_c_now, const Matrix& c_now) {
    Matrix delta = action_delta(phi_a_now, phi_c_now, c_now, critic_.output_weights());
    action_.apply_delta(delta);
    return delta;
  }

  /// Same rule as update_action, evaluated against the given critic output
  /// weights, without touching either network.
  Matrix action_delta(const Vector& phi_a_now, const Vector& phi_c_now, const Matrix& c_now,
                      const Matrix& critic_omega) {
    detail::require(static_cast<std::size_t>(phi_a_now.size()) == action_.hidden_dim(),
                    "update_action: phi_a size mismatch");
    detail::require(static_cast<std::size_t>(phi_c_now.size()) == critic_.hidden_dim(),
                    "update_action: phi_c size mismatch");
    detail::require(static_cast<std::size_t>(c_now.rows()) == critic_.hidden_dim() &&
                        static_cast<std::size_t>(c_now.cols()) == control_dim(),
                    "update_action: C shape mismatch");
    detail::require(critic_omega.rows() == critic_.output_weights().rows() &&
                        critic_omega.cols() == 1,
                    "update_action: critic weight shape mismatch");
    const double rate = guarded_rate(cfg_.action_rate, phi_a_now, "action");
    const Eigen::RowVectorXd value_grad_u = critic_omega.col(0).transpose() * c_now;
    const double value = critic_omega.col(0).dot(phi_c_now);
    return -rate * value * (phi_a_now * value_grad_u);
  }

  /// Processes one time step. u_applied is the control actually applied
  /// (fresh at an event, held otherwise). When do_update is set and memory
  /// exists, runs the critic update(s) then the action update(s). Memory is
  /// always refreshed to the pre-update features and value at [x; u_applied]
  /// together with r_now.
  AgentStepReport step(const Vector& x, const Vector& u_applied, double r_now, bool do_update) {
    const Vector z = critic_input(x, u_applied);
    const Vector phi_c = critic_.hidden(z);
    const double value = critic_.output_weights().col(0).dot(phi_c);

    AgentStepReport report;
    report.u = u_applied;
    report.value = value;
    clamped_ = false;

    if (memory_) {
      report.td_error = td_error(value);
      if (do_update) {
        const Matrix critic_before = critic_.output_weights();
        const Matrix action_before = action_.output_weights();

        for (int i = 0; i < cfg_.critic_cycles; ++i) update_critic(phi_c, memory_->reward);

        const Vector phi_a = action_.hidden(x);
        const Matrix& critic_for_action =
            cfg_.action_uses_updated_critic ? critic_.output_weights() : critic_before;
        Vector phi_c_action = phi_c;
        for (int i = 0; i < cfg_.action_cycles; ++i) {
          if (i > 0) phi_c_action = critic_.hidden(critic_input(x, act(x)));
          const Matrix c = critic_input_grad_factor(critic_, phi_c_action, state_dim(),
                                                    control_dim());
          action_.apply_delta(action_delta(phi_a, phi_c_action, c, critic_for_action));
        }

        report.updated = true;
        report.critic_delta_sq = (critic_.output_weights() - critic_before).squaredNorm();
        report.action_delta_sq = (action_.output_weights() - action_before).squaredNorm();
      }
    }

    report.rate_clamped = clamped_;
    memory_ = Memory{phi_c, value, r_now};
    return report;
  }

  void reset_memory() { memory_.reset(); }

 private:
  const Memory& require_memory(const char* op) const {
    if (!memory_)
      throw NotInitialized(std::string(op) + ": no previous step stored in agent memory");
    return *memory_;
  }

  double guarded_rate(double rate, const Vector& phi, const char* net) {
    const double norm_sq = phi.squaredNorm();
    if (rate * norm_sq < 1.0) return rate;
    std::ostringstream msg;
    msg << net << " learning rate " << rate << " violates l < 1/||phi||^2 = "
        << (norm_sq > 0 ? 1.0 / norm_sq : std::numeric_limits<double>::infinity());
    if (cfg_.guard == GuardMode::strict) throw LearningRateError(msg.str());
    const double clamped = cfg_.guard_margin / norm_sq;
    msg << "; clamped to " << clamped;
    if (warn_) warn_(msg.str());
    clamped_ = true;
    return clamped;
  }

  TwoLayerNet critic_;
  TwoLayerNet action_;
  AgentConfig cfg_;
  WarningSink warn_;
  std::optional<Memory> memory_;
  bool clamped_ = false;
};

}  // namespace edhdp

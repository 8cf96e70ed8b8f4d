#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "edhdp/approximator.hpp"
#include "edhdp/errors.hpp"

namespace edhdp {

namespace detail {

/// Smallest and largest eigenvalue of a symmetric matrix; throws unless it is
/// symmetric positive definite.
inline std::pair<double, double> spd_eigen_range(const Matrix& m, const char* name) {
  require(m.rows() > 0 && m.rows() == m.cols(), std::string(name) + " must be square");
  require(m.allFinite(), std::string(name) + " has non-finite entries");
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()),
          std::string(name) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  require(ev.minCoeff() > 0, std::string(name) + " must be positive definite");
  return {ev.minCoeff(), ev.maxCoeff()};
}

}  // namespace detail

/// Parameters of the state-error trigger
///
///   ||e||^2 <= lambda_min(Q) beta / (2 lambda_max(R) ||omega_a||^2 L_a^2) * ||x||^2
///
/// The eigenvalues are computed once here.
class TriggerConfig {
 public:
  TriggerConfig(double beta, Matrix q, Matrix r, double lipschitz,
                double omega_floor = 1e-8)
      : beta_(beta), q_(std::move(q)), r_(std::move(r)), lipschitz_(lipschitz),
        omega_floor_(omega_floor) {
    detail::require(beta_ >= 0.0 && beta_ < 1.0, "trigger beta must lie in [0, 1)");
    detail::require(lipschitz_ > 0 && std::isfinite(lipschitz_),
                    "trigger Lipschitz constant must be positive");
    detail::require(omega_floor_ >= 0, "omega_floor must be non-negative");
    lambda_min_q_ = detail::spd_eigen_range(q_, "Q").first;
    lambda_max_r_ = detail::spd_eigen_range(r_, "R").second;
  }

  double beta() const { return beta_; }
  const Matrix& q() const { return q_; }
  const Matrix& r() const { return r_; }
  double lipschitz() const { return lipschitz_; }
  double omega_floor() const { return omega_floor_; }
  double lambda_min_q() const { return lambda_min_q_; }
  double lambda_max_r() const { return lambda_max_r_; }

  /// max(||omega_a||_F^2, omega_floor): keeps an all-zero action layer from
  /// making the threshold infinite.
  double floored_norm_sq(double omega_a_norm_sq) const {
    return std::max(omega_a_norm_sq, omega_floor_);
  }

 private:
  double beta_;
  Matrix q_;
  Matrix r_;
  double lipschitz_;
  double omega_floor_;
  double lambda_min_q_ = 0.0;
  double lambda_max_r_ = 0.0;
};

/// Right-hand side of the trigger inequality. beta = 0 gives 0; a zero
/// weight norm gives +infinity (pass a floored norm to avoid that).
inline double threshold(const TriggerConfig& cfg, const Vector& x, double omega_a_norm_sq) {
  detail::require(omega_a_norm_sq >= 0, "threshold: negative weight norm");
  if (cfg.beta() == 0.0) return 0.0;
  const double x_sq = x.squaredNorm();
  if (x_sq == 0.0) return 0.0;
  if (omega_a_norm_sq == 0.0) return std::numeric_limits<double>::infinity();
  const double la = cfg.lipschitz();
  return cfg.lambda_min_q() * cfg.beta() /
         (2.0 * cfg.lambda_max_r() * omega_a_norm_sq * la * la) * x_sq;
}

/// Zero-order-hold bookkeeping: the state and control captured at the last
/// event instant.
struct TriggerState {
  Vector held_x;
  Vector held_u;
  std::size_t last_event_step = 0;
  std::size_t event_count = 0;
};

/// True when ||held_x - x||^2 strictly exceeds the threshold.
inline bool check_event(const TriggerConfig& cfg, const TriggerState& st, const Vector& x,
                        double omega_a_norm_sq) {
  detail::require(st.held_x.size() == x.size(), "check_event: state size mismatch");
  return (st.held_x - x).squaredNorm() > threshold(cfg, x, omega_a_norm_sq);
}

inline TriggerState fire(TriggerState st, std::size_t k, const Vector& x, const Vector& u_new) {
  st.held_x = x;
  st.held_u = u_new;
  st.last_event_step = k;
  ++st.event_count;
  return st;
}

/// Lipschitz constant of x -> phi(tau_a x): half the spectral norm of tau_a,
/// since the bipolar sigmoid has slope at most 1/2.
inline double estimate_lipschitz(const Matrix& action_tau) {
  if (action_tau.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(action_tau);
  return 0.5 * svd.singularValues()(0);
}

}  // namespace edhdp

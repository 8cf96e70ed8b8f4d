#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>

#include <Eigen/Dense>

#include "edhdp/approximator.hpp"
#include "edhdp/errors.hpp"
#include "edhdp/trigger.hpp"

namespace edhdp {

/// Half-open range of time indices [begin, end).
struct StepWindow {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool contains(std::size_t k) const { return k >= begin && k < end; }
  std::size_t size() const { return end > begin ? end - begin : 0; }
  friend bool operator==(const StepWindow&, const StepWindow&) = default;
};

/// A discrete-time plant x(k+1) = f(x(k), u(k)).
template <class P>
concept DiscretePlant = requires(const P& p, const Vector& x, const Vector& u) {
  { p.state_dim() } -> std::convertible_to<std::size_t>;
  { p.control_dim() } -> std::convertible_to<std::size_t>;
  { p.step(x, u) } -> std::convertible_to<Vector>;
};

namespace detail {

inline void check_plant_inputs(const Vector& x, const Vector& u, std::size_t m, std::size_t n) {
  require(static_cast<std::size_t>(x.size()) == m, "plant step: state size mismatch");
  require(static_cast<std::size_t>(u.size()) == n, "plant step: control size mismatch");
  require(x.allFinite() && u.allFinite(), "plant step: non-finite input");
}

}  // namespace detail

/// x(k+1) = A x(k) + B u(k).
class LinearPlant {
 public:
  LinearPlant(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)) {
    detail::require(a_.rows() > 0 && a_.rows() == a_.cols(), "LinearPlant: A must be square");
    detail::require(b_.rows() == a_.rows() && b_.cols() > 0,
                    "LinearPlant: B must have as many rows as A");
    detail::require(a_.allFinite() && b_.allFinite(), "LinearPlant: non-finite coefficients");
  }

  std::size_t state_dim() const { return static_cast<std::size_t>(a_.rows()); }
  std::size_t control_dim() const { return static_cast<std::size_t>(b_.cols()); }
  const Matrix& state_matrix() const { return a_; }
  const Matrix& input_matrix() const { return b_; }

  Vector step(const Vector& x, const Vector& u) const {
    detail::check_plant_inputs(x, u, state_dim(), control_dim());
    return a_ * x + b_ * u;
  }

 private:
  Matrix a_;
  Matrix b_;
};

/// Two-state, one-input linear benchmark:
///   x1' = 0.9996 x1 + 0.0099 x2
///   x2' = -0.0887 x1 + 0.99 x2 + 0.1 u
class BenchmarkPlant {
 public:
  static constexpr std::size_t kStateDim = 2;
  static constexpr std::size_t kControlDim = 1;

  std::size_t state_dim() const { return kStateDim; }
  std::size_t control_dim() const { return kControlDim; }

  static Matrix state_matrix() {
    Matrix a(2, 2);
    a << 0.9996, 0.0099, -0.0887, 0.99;
    return a;
  }
  static Matrix input_matrix() {
    Matrix b(2, 1);
    b << 0.0, 0.1;
    return b;
  }

  Vector step(const Vector& x, const Vector& u) const {
    detail::check_plant_inputs(x, u, kStateDim, kControlDim);
    Vector next(2);
    next(0) = 0.9996 * x(0) + 0.0099 * x(1);
    next(1) = -0.0887 * x(0) + 0.99 * x(1) + 0.1 * u(0);
    return next;
  }
};

/// Stage cost r = x^T Q x + u^T R u. The same Q and R feed the trigger.
class RewardSpec {
 public:
  RewardSpec(Matrix q, Matrix r) : q_(std::move(q)), r_(std::move(r)) {
    detail::spd_eigen_range(q_, "Q");
    detail::spd_eigen_range(r_, "R");
  }

  /// Q = I_m, R = 0.1 I_n.
  static RewardSpec standard(std::size_t m, std::size_t n) {
    return RewardSpec(Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)),
                      0.1 * Matrix::Identity(static_cast<Eigen::Index>(n),
                                             static_cast<Eigen::Index>(n)));
  }

  const Matrix& q() const { return q_; }
  const Matrix& r() const { return r_; }
  std::size_t state_dim() const { return static_cast<std::size_t>(q_.rows()); }
  std::size_t control_dim() const { return static_cast<std::size_t>(r_.rows()); }

  TriggerConfig trigger(double beta, double lipschitz, double omega_floor = 1e-8) const {
    return TriggerConfig(beta, q_, r_, lipschitz, omega_floor);
  }

 private:
  Matrix q_;
  Matrix r_;
};

/// Evaluated with the held control u(delta_k), not a fresh one.
inline double reward(const RewardSpec& spec, const Vector& x, const Vector& u_held) {
  detail::require(static_cast<std::size_t>(x.size()) == spec.state_dim(),
                  "reward: state size mismatch");
  detail::require(static_cast<std::size_t>(u_held.size()) == spec.control_dim(),
                  "reward: control size mismatch");
  return x.dot(spec.q() * x) + u_held.dot(spec.r() * u_held);
}

/// Additive disturbance gain * (mean + stddev * z), z ~ N(0, 1), one scalar
/// draw per in-window step. Outside the window the sample is exactly zero and
/// the stream is not advanced.
class NoiseProcess {
 public:
  NoiseProcess(double mean, double stddev, Vector gain, StepWindow window, std::uint64_t seed)
      : mean_(mean), stddev_(stddev), gain_(std::move(gain)), window_(window), rng_(seed) {
    detail::require(stddev_ >= 0 && std::isfinite(stddev_) && std::isfinite(mean_),
                    "NoiseProcess: mean must be finite and stddev non-negative");
    detail::require(gain_.allFinite(), "NoiseProcess: non-finite gain");
  }

  double mean() const { return mean_; }
  double stddev() const { return stddev_; }
  const Vector& gain() const { return gain_; }
  const StepWindow& window() const { return window_; }

  Vector sample(std::size_t k) {
    if (!window_.contains(k)) return Vector::Zero(gain_.size());
    const double z = normal_(rng_);
    return gain_ * (mean_ + stddev_ * z);
  }

 private:
  double mean_;
  double stddev_;
  Vector gain_;
  StepWindow window_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace edhdp

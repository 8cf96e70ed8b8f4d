#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "edhdp/errors.hpp"

namespace edhdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// phi(s) = (1 - exp(-s)) / (1 + exp(-s)), evaluated as tanh(s / 2) so large
/// |s| saturates cleanly instead of producing inf / inf. The result is kept
/// strictly inside (-1, 1) even where tanh rounds to +-1.
inline double bipolar_sigmoid(double s) {
  constexpr double kLimit = 1.0 - 0x1p-53;
  return std::clamp(std::tanh(0.5 * s), -kLimit, kLimit);
}

/// d phi / ds expressed through the activation value: (1 - phi^2) / 2.
inline double bipolar_sigmoid_slope(double phi) { return 0.5 * (1.0 - phi * phi); }

/// Single hidden layer network with fixed input weights and a trainable
/// linear output layer, no bias terms:
///
///   hidden(z)  = phi(tau * z)
///   forward(z) = omega^T * hidden(z)
///
/// tau is hidden_dim x input_dim and is never modified after construction.
/// omega is hidden_dim x output_dim (one column per output).
class TwoLayerNet {
 public:
  TwoLayerNet(Matrix input_weights, Matrix output_weights)
      : tau_(std::move(input_weights)), omega_(std::move(output_weights)) {
    detail::require(tau_.rows() > 0 && tau_.cols() > 0 && omega_.cols() > 0,
                    "TwoLayerNet: empty weight matrix");
    detail::require(tau_.rows() == omega_.rows(),
                    "TwoLayerNet: input and output weights disagree on hidden_dim");
    detail::require(tau_.allFinite() && omega_.allFinite(),
                    "TwoLayerNet: non-finite weights");
  }

  /// Draws tau uniform in [-tau_range, tau_range] and omega uniform in
  /// [-omega_range, omega_range]. Entries are drawn row by row, tau first.
  template <class Rng>
  static TwoLayerNet random(std::size_t input_dim, std::size_t hidden_dim,
                            std::size_t output_dim, double tau_range,
                            double omega_range, Rng& rng) {
    const auto h = static_cast<Eigen::Index>(hidden_dim);
    Matrix tau(h, static_cast<Eigen::Index>(input_dim));
    Matrix omega(h, static_cast<Eigen::Index>(output_dim));
    fill_uniform(tau, tau_range, rng);
    fill_uniform(omega, omega_range, rng);
    return TwoLayerNet(std::move(tau), std::move(omega));
  }

  std::size_t input_dim() const { return static_cast<std::size_t>(tau_.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(tau_.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(omega_.cols()); }

  const Matrix& input_weights() const { return tau_; }
  const Matrix& output_weights() const { return omega_; }

  Vector hidden(const Vector& z) const {
    detail::require(z.size() == tau_.cols(),
                    "hidden: input has " + std::to_string(z.size()) +
                        " entries, network expects " + std::to_string(tau_.cols()));
    return (tau_ * z).unaryExpr([](double s) { return bipolar_sigmoid(s); });
  }

  Vector forward(const Vector& z) const { return forward_from_hidden(hidden(z)); }

  Vector forward_from_hidden(const Vector& phi) const {
    detail::require(phi.size() == omega_.rows(), "forward: hidden vector size mismatch");
    return omega_.transpose() * phi;
  }

  /// omega += delta. Returns the squared Frobenius norm of delta, the
  /// per-step contribution to the accumulated weight variation.
  double apply_delta(const Matrix& delta) {
    detail::require(delta.rows() == omega_.rows() && delta.cols() == omega_.cols(),
                    "apply_delta: shape mismatch");
    omega_ += delta;
    return delta.squaredNorm();
  }

 private:
  template <class Rng>
  static void fill_uniform(Matrix& m, double range, Rng& rng) {
    std::uniform_real_distribution<double> dist(-range, range);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = range > 0 ? dist(rng) : 0.0;
  }

  Matrix tau_;
  Matrix omega_;
};

/// C(k) with C(l, i) = (1 - phi_c(l)^2) / 2 * tau_c(l, m + i), zero-based, so
/// that omega_c^T * C is the gradient of the critic output with respect to
/// the control inputs (critic input layout is [x; u], x occupying the first m
/// slots).
inline Matrix critic_input_grad_factor(const TwoLayerNet& critic, const Vector& phi_c,
                                       std::size_t m, std::size_t n) {
  detail::require(m + n == critic.input_dim(),
                  "critic_input_grad_factor: m + n does not match critic input_dim");
  detail::require(static_cast<std::size_t>(phi_c.size()) == critic.hidden_dim(),
                  "critic_input_grad_factor: phi_c size mismatch");
  const Matrix& tau = critic.input_weights();
  Matrix c(phi_c.size(), static_cast<Eigen::Index>(n));
  for (Eigen::Index l = 0; l < phi_c.size(); ++l) {
    const double slope = bipolar_sigmoid_slope(phi_c(l));
    for (Eigen::Index i = 0; i < c.cols(); ++i)
      c(l, i) = slope * tau(l, static_cast<Eigen::Index>(m) + i);
  }
  return c;
}

}  // namespace edhdp

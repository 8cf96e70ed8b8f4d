#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

#include "edhdp/approximator.hpp"
#include "edhdp/errors.hpp"
#include "edhdp/simulation.hpp"
#include "edhdp/trigger.hpp"

namespace edhdp {

/// Bounds assumed on the optimal weights, activations, reconstruction errors,
/// C(k) and r(k). The optimal-weight and reconstruction bounds cannot be
/// measured and are always user supplied; the activation, C and reward bounds
/// can be filled from a run with measure_assumption_bounds().
struct BoundAssumptions {
  double omega_cm = 1.0;
  double omega_am = 1.0;
  double phi_cm = std::sqrt(6.0);
  double phi_am = std::sqrt(6.0);
  double eps_cm = 0.1;
  double eps_am = 0.1;
  double c_m = 1.0;
  double r_m = 1.0;
  double gamma = 10.0;
  double beta = 0.0;
  Matrix q = Matrix::Identity(2, 2);
  Matrix r = 0.1 * Matrix::Identity(1, 1);
  /// Hidden sizes for the phi_cm <= sqrt(N_hc) check; 0 skips it.
  std::size_t critic_hidden = 0;
  std::size_t action_hidden = 0;
};

inline void validate(const BoundAssumptions& a) {
  for (double v : {a.omega_cm, a.omega_am, a.phi_cm, a.phi_am, a.eps_cm, a.eps_am, a.c_m, a.r_m})
    detail::require(v >= 0 && std::isfinite(v), "bound assumptions must be finite and >= 0");
  detail::require(a.gamma > 8.0, "gamma must exceed 8");
  detail::require(a.beta >= 0.0 && a.beta < 1.0, "beta must lie in [0, 1)");
  if (a.critic_hidden > 0)
    detail::require(a.phi_cm <= std::sqrt(static_cast<double>(a.critic_hidden)),
                    "phi_cm cannot exceed sqrt(N_hc)");
  if (a.action_hidden > 0)
    detail::require(a.phi_am <= std::sqrt(static_cast<double>(a.action_hidden)),
                    "phi_am cannot exceed sqrt(N_ha)");
  detail::spd_eigen_range(a.q, "Q");
  detail::spd_eigen_range(a.r, "R");
}

/// 6 lambda_max(R) (omega_am^2 phi_am^2 + eps_am^2) + 2 omega_cm^2 phi_cm^2
inline double d1m_squared(const BoundAssumptions& a) {
  validate(a);
  const double lmax_r = detail::spd_eigen_range(a.r, "R").second;
  const double wa = a.omega_am * a.phi_am;
  const double wc = a.omega_cm * a.phi_cm;
  return 6.0 * lmax_r * (wa * wa + a.eps_am * a.eps_am) + 2.0 * wc * wc;
}

/// (12 + 4/gamma) omega_cm^2 phi_cm^2
///   + (4/gamma) omega_cm^2 C_m^2 omega_am^2 phi_am^2 + 8 r_m^2
inline double d2m_squared(const BoundAssumptions& a) {
  validate(a);
  const double wc = a.omega_cm * a.phi_cm;
  const double wa = a.omega_am * a.phi_am;
  return (12.0 + 4.0 / a.gamma) * wc * wc +
         (4.0 / a.gamma) * a.omega_cm * a.omega_cm * a.c_m * a.c_m * wa * wa +
         8.0 * a.r_m * a.r_m;
}

/// Radii of the balls outside which the Lyapunov difference is non-positive.
struct UubRadii {
  /// D1m / sqrt((1 - beta) lambda_min(Q)), no learning event.
  double no_event_radius = 0.0;
  /// D2m / sqrt(lambda_min(Q)), learning event, state.
  double event_state_radius = 0.0;
  /// D2m / sqrt(1/2 - 4/gamma), learning event, critic residual xi_c.
  double event_xi_radius = 0.0;
};

inline UubRadii uub_radii(const BoundAssumptions& a) {
  validate(a);
  const double lmin_q = detail::spd_eigen_range(a.q, "Q").first;
  const double d1 = std::sqrt(d1m_squared(a));
  const double d2 = std::sqrt(d2m_squared(a));
  return {d1 / std::sqrt((1.0 - a.beta) * lmin_q), d2 / std::sqrt(lmin_q),
          d2 / std::sqrt(0.5 - 4.0 / a.gamma)};
}

struct ApproxErrorBounds {
  /// ||V_hat - V*|| <= ||omega_tilde_c|| phi_cm + eps_cm
  double value_error = 0.0;
  /// ||u_hat - u*|| <= ||omega_tilde_a|| phi_am + eps_am
  double control_error = 0.0;
};

inline ApproxErrorBounds approx_error_bounds(const BoundAssumptions& a,
                                             double omega_tilde_c_norm,
                                             double omega_tilde_a_norm) {
  detail::require(omega_tilde_c_norm >= 0 && omega_tilde_a_norm >= 0,
                  "approx_error_bounds: weight-error norms must be non-negative");
  validate(a);
  return {omega_tilde_c_norm * a.phi_cm + a.eps_cm, omega_tilde_a_norm * a.phi_am + a.eps_am};
}

/// Replaces phi_cm, phi_am, C_m and r_m with the maxima observed along the
/// trace. The remaining fields are passed through unchanged, and the hidden
/// sizes are taken from the trace.
inline BoundAssumptions measure_assumption_bounds(const Trace& trace, BoundAssumptions user) {
  detail::require(!trace.empty(), "measure_assumption_bounds: empty trace");
  double phi_c = 0.0, phi_a = 0.0, c = 0.0, r = 0.0;
  for (const auto& rec : trace.records) {
    phi_c = std::max(phi_c, rec.phi_c_norm_sq);
    phi_a = std::max(phi_a, rec.phi_a_norm_sq);
    c = std::max(c, rec.grad_factor_norm);
    r = std::max(r, rec.reward);
  }
  user.phi_cm = std::sqrt(phi_c);
  user.phi_am = std::sqrt(phi_a);
  user.c_m = c;
  user.r_m = r;
  user.critic_hidden = trace.critic_hidden;
  user.action_hidden = trace.action_hidden;
  return user;
}

/// Fraction of steps in the window whose ||x(k)|| exceeds radius.
inline double excursion_fraction(const Trace& trace, const StepWindow& w, double radius) {
  check_window(trace, w, "excursion_fraction");
  if (w.size() == 0) return 0.0;
  std::size_t outside = 0;
  for (std::size_t k = w.begin; k < w.end; ++k) outside += trace.records[k].x.norm() > radius;
  return static_cast<double>(outside) / static_cast<double>(w.size());
}

}  // namespace edhdp

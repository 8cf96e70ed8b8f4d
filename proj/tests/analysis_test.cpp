#include <cmath>

#include <gtest/gtest.h>

#include "edhdp/analysis.hpp"

using namespace edhdp;

namespace {

BoundAssumptions zeros() {
  BoundAssumptions a;
  a.omega_cm = a.omega_am = a.phi_cm = a.phi_am = a.eps_cm = a.eps_am = a.c_m = a.r_m = 0.0;
  return a;
}

}  // namespace

TEST(Bounds, AllZeroGivesZero) {
  const auto a = zeros();
  EXPECT_EQ(d1m_squared(a), 0.0);
  EXPECT_EQ(d2m_squared(a), 0.0);
  const auto u = uub_radii(a);
  EXPECT_EQ(u.no_event_radius, 0.0);
  EXPECT_EQ(u.event_state_radius, 0.0);
  EXPECT_EQ(u.event_xi_radius, 0.0);
}

TEST(Bounds, D1WorkedExample) {
  BoundAssumptions a;
  a.phi_cm = a.phi_am = std::sqrt(6.0);
  a.omega_cm = a.omega_am = 1.0;
  a.eps_am = 0.1;
  EXPECT_NEAR(d1m_squared(a), 15.606, 1e-12);
}

TEST(Bounds, D2WorkedExampleAndTermIsolation) {
  auto a = zeros();
  a.omega_cm = a.phi_cm = 1.0;
  a.r_m = 1.0;
  EXPECT_NEAR(d2m_squared(a), 20.4, 1e-12);
  a.r_m = 0.0;
  a.omega_cm = 1.3;
  a.phi_cm = 0.7;
  a.gamma = 16.0;
  EXPECT_NEAR(d2m_squared(a), (12.0 + 0.25) * 1.69 * 0.49, 1e-13);
}

TEST(Bounds, D2CrossTermOmitsCriticActivation) {
  auto a = zeros();
  a.omega_cm = 2.0;
  a.phi_cm = 3.0;
  a.c_m = 0.5;
  a.omega_am = 1.0;
  a.phi_am = 2.0;
  // 12.4 * 4 * 9 + 0.4 * 4 * 0.25 * 1 * 4
  EXPECT_NEAR(d2m_squared(a), 446.4 + 1.6, 1e-12);
}

TEST(Bounds, RadiiFollowEigenvalues) {
  auto a = zeros();
  a.omega_cm = a.phi_cm = 1.0;
  a.r_m = 1.0;
  a.q = 4.0 * Matrix::Identity(2, 2);
  a.beta = 0.5;
  const auto u = uub_radii(a);
  EXPECT_NEAR(u.no_event_radius, std::sqrt(2.0) / std::sqrt(0.5 * 4.0), 1e-15);
  EXPECT_NEAR(u.event_state_radius, std::sqrt(20.4) / 2.0, 1e-14);
  EXPECT_NEAR(u.event_xi_radius, std::sqrt(20.4) / std::sqrt(0.1), 1e-13);
}

TEST(Bounds, RejectInvalidAssumptions) {
  BoundAssumptions a;
  a.gamma = 8.0;
  EXPECT_THROW(d2m_squared(a), ContractViolation);
  a = BoundAssumptions{};
  a.omega_cm = -1.0;
  EXPECT_THROW(d1m_squared(a), ContractViolation);
  a = BoundAssumptions{};
  a.critic_hidden = 4;  // phi_cm = sqrt(6) > sqrt(4)
  EXPECT_THROW(d1m_squared(a), ContractViolation);
  a = BoundAssumptions{};
  a.beta = 1.0;
  EXPECT_THROW(uub_radii(a), ContractViolation);
}

TEST(Bounds, ApproxErrorBounds) {
  BoundAssumptions a;
  a.phi_cm = 2.0;
  a.phi_am = 1.5;
  a.eps_cm = 0.1;
  a.eps_am = 0.2;
  const auto e = approx_error_bounds(a, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(e.value_error, 1.1);
  EXPECT_DOUBLE_EQ(e.control_error, 3.2);
  EXPECT_THROW(approx_error_bounds(a, -1.0, 0.0), ContractViolation);
}

TEST(Measure, TakesTraceMaxima) {
  Trace t;
  t.critic_hidden = 6;
  t.action_hidden = 5;
  t.records.resize(3);
  t.records[0].phi_c_norm_sq = 2.0;
  t.records[1].phi_c_norm_sq = 4.0;
  t.records[2].phi_a_norm_sq = 1.0;
  t.records[1].grad_factor_norm = 0.3;
  t.records[0].reward = 2.5;
  t.records[2].reward = 0.1;
  for (auto& r : t.records) r.x = Vector::Zero(2);
  const auto m = measure_assumption_bounds(t, BoundAssumptions{});
  EXPECT_DOUBLE_EQ(m.phi_cm, 2.0);
  EXPECT_DOUBLE_EQ(m.phi_am, 1.0);
  EXPECT_DOUBLE_EQ(m.c_m, 0.3);
  EXPECT_DOUBLE_EQ(m.r_m, 2.5);
  EXPECT_EQ(m.critic_hidden, 6u);
  EXPECT_EQ(m.action_hidden, 5u);
  EXPECT_EQ(m.omega_cm, 1.0);
  EXPECT_THROW(measure_assumption_bounds(Trace{}, BoundAssumptions{}), ContractViolation);
}

TEST(Measure, ActivationBoundsRespectHiddenWidth) {
  RunConfig cfg;
  cfg.phases = protocols::drift(0.2, 50, 50, 50);
  const Trace t = run(cfg);
  const auto m = measure_assumption_bounds(t, BoundAssumptions{});
  EXPECT_LE(m.phi_cm, std::sqrt(6.0));
  EXPECT_LE(m.phi_am, std::sqrt(6.0));
  EXPECT_NO_THROW(uub_radii(m));
}

TEST(Excursion, CountsStepsOutsideRadius) {
  Trace t;
  for (double v : {0.5, 2.0, 3.0, 0.1}) {
    StepRecord r;
    r.x = Vector{{v, 0.0}};
    t.records.push_back(r);
  }
  EXPECT_DOUBLE_EQ(excursion_fraction(t, {0, 4}, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(excursion_fraction(t, {2, 2}, 1.0), 0.0);
  EXPECT_THROW(excursion_fraction(t, {0, 5}, 1.0), ContractViolation);
}

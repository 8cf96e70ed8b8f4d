#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "edhdp/edhdp.hpp"

using namespace edhdp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(EDHDP_TEST_TMPDIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentSpec small_spec() {
  return parse_spec(R"({
    "name": "t",
    "protocol": "drift",
    "drift": {"train": 10, "noisy": 20, "clean": 20},
    "sweep": {"betas": [0, 0.4], "seeds": [3, 1]}
  })");
}

}  // namespace

TEST(ParseSpec, EmptyDocumentGivesDefaults) {
  const auto spec = parse_spec("  \n");
  EXPECT_EQ(spec.name, "edhdp");
  EXPECT_EQ(spec.betas, (std::vector<double>{0.0, 0.2, 0.4, 0.6}));
  EXPECT_EQ(spec.seeds.size(), 20u);
  ASSERT_EQ(spec.phases.size(), 1u);
  EXPECT_EQ(spec.phases[0].length, 500u);
  EXPECT_EQ(spec.base.agent.critic_hidden, 6u);
  EXPECT_EQ(spec.base.agent.learning.critic_rate, 0.1);
  EXPECT_EQ(spec.base.agent.learning.guard, GuardMode::strict);
}

TEST(ParseSpec, FullDocumentWithComments) {
  const auto spec = parse_spec(R"({
    // a comment
    "name": "full",
    "plant": {"type": "linear", "A": [[1.0, 0.1], [0.0, 0.9]], "B": [[0.0], [0.2]]},
    "x0": [0.5, -0.5],
    "cost": {"Q": 2.0, "R": [[0.3]]},
    "agent": {"critic_hidden": 8, "action_hidden": 5, "critic_rate": 0.05,
              "action_rate": 0.07, "tau_range": 0.3, "init_range": 0.2,
              "action_uses_updated_critic": false},
    "trigger": {"lipschitz": 0.25},
    "noise": {"mean": 0.0, "stddev": 0.5, "gain": [0.0, 1.0], "window": [10, 20]},
    /* explicit phases */
    "phases": [{"length": 30, "mode": "time_driven"},
               {"length": 40, "mode": "event_driven", "noise": true},
               {"length": 10, "mode": "frozen", "beta": 0.1}],
    "sweep": {"betas": [0.3], "seeds": [7], "jobs": 2},
    "output": {"dir": "somewhere", "plots": false},
    "bounds": {"omega_cm": 2.0, "gamma": 12}
  })");
  EXPECT_EQ(spec.name, "full");
  EXPECT_TRUE(std::holds_alternative<LinearPlant>(spec.base.plant));
  EXPECT_EQ(spec.base.x0, (Vector{{0.5, -0.5}}));
  EXPECT_EQ(spec.base.cost->q(), 2.0 * Matrix::Identity(2, 2));
  EXPECT_EQ(spec.base.agent.critic_hidden, 8u);
  EXPECT_FALSE(spec.base.agent.learning.action_uses_updated_critic);
  EXPECT_EQ(*spec.base.trigger.lipschitz, 0.25);
  EXPECT_EQ(spec.base.noise.window, (StepWindow{10, 20}));
  EXPECT_EQ(spec.jobs, 2u);
  EXPECT_EQ(spec.output_dir, fs::path("somewhere"));
  EXPECT_FALSE(spec.emit_plots);
  EXPECT_EQ(spec.bounds.omega_cm, 2.0);
  EXPECT_EQ(spec.bounds.gamma, 12.0);

  const RunConfig cfg = spec.config_for(0.3, 7);
  ASSERT_EQ(cfg.phases.size(), 3u);
  EXPECT_EQ(cfg.phases[0].beta, 0.0);
  EXPECT_EQ(cfg.phases[1].beta, 0.3);
  EXPECT_TRUE(cfg.phases[1].noise_active);
  EXPECT_EQ(cfg.phases[2].beta, 0.1);
  EXPECT_EQ(cfg.seed, 7u);
}

TEST(ParseSpec, DriftProtocolPhases) {
  const auto spec = small_spec();
  ASSERT_EQ(spec.phases.size(), 3u);
  EXPECT_EQ(spec.phases[0].mode, PhaseMode::time_driven);
  EXPECT_TRUE(spec.phases[1].noise_active);
  EXPECT_FALSE(spec.phases[2].noise_active);
  EXPECT_EQ(spec.config_for(0.4, 1).total_steps(), 50u);
}

TEST(ParseSpec, SyntaxErrorReportsPosition) {
  try {
    parse_spec("{\n  \"name\": \"x\",\n  oops\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3, column"), std::string::npos);
  }
}

TEST(ParseSpec, RejectsInvalidContent) {
  EXPECT_THROW(parse_spec(R"({"nmae": "x"})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"agent": {"critic_rate": 0.2}})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"agent": {"critic_hidden": -3}})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"sweep": {"betas": [1.0]}})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"sweep": {"seeds": []}})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"protocol": "other"})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"cost": {"Q": [[1, 0], [0, -1]]}})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"x0": [1, 2, 3]})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"phases": [{"mode": "frozen"}]})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"bounds": {"gamma": 8}})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"steps": 10, "protocol": "drift"})"), ConfigError);
  EXPECT_THROW(load_spec("/nonexistent/config.json"), ConfigError);
}

TEST(ParseSpec, Overrides) {
  SpecOverrides ov;
  ov.output_dir = "elsewhere";
  ov.seed_offset = 100;
  ov.strict_guard = false;
  const auto spec = parse_spec(R"({"agent": {"critic_rate": 0.2}, "sweep": {"seeds": [1, 2]}})", ov);
  EXPECT_EQ(spec.output_dir, fs::path("elsewhere"));
  EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{101, 102}));
  EXPECT_EQ(spec.base.agent.learning.guard, GuardMode::permissive);
}

TEST(Sweep, NamesAndWindows) {
  EXPECT_EQ(run_file_name("x", 0.2, 5), "x_beta0.2_seed5.csv");
  EXPECT_EQ(run_file_name("x", 0.0, 0), "x_beta0_seed0.csv");
  EXPECT_EQ(final_window(500), (StepWindow{400, 500}));
  EXPECT_EQ(final_window(50), (StepWindow{1, 50}));
  EXPECT_EQ(final_window(1).size(), 0u);
}

TEST(Sweep, SummaryExcludesDivergedRuns) {
  std::vector<RunOutcome> runs(3);
  runs[0].beta = runs[1].beta = runs[2].beta = 0.2;
  runs[0].events = 10;
  runs[0].final_state_norm = 1.0;
  runs[1].events = 20;
  runs[1].final_state_norm = 3.0;
  runs[2].diverged = true;
  runs[2].events = 1000;
  const auto s = summarize({0.2, 0.4}, runs);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].runs, 2u);
  EXPECT_EQ(s[0].diverged, 1u);
  EXPECT_DOUBLE_EQ(s[0].mean_events, 15.0);
  EXPECT_DOUBLE_EQ(s[0].mean_final_state_norm, 2.0);
  EXPECT_EQ(s[1].runs, 0u);
}

TEST(Sweep, OrderedAndIndependentOfJobs) {
  auto one = small_spec();
  auto four = small_spec();
  four.jobs = 4;
  const auto a = run_sweep(one, false);
  const auto b = run_sweep(four, false);
  ASSERT_EQ(a.runs.size(), 4u);
  const std::vector<std::pair<double, std::uint64_t>> order{{0, 3}, {0, 1}, {0.4, 3}, {0.4, 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.runs[i].beta, order[i].first);
    EXPECT_EQ(a.runs[i].seed, order[i].second);
    EXPECT_EQ(a.runs[i].events, b.runs[i].events);
    EXPECT_EQ(a.runs[i].eta_final, b.runs[i].eta_final);
  }
}

TEST(Sweep, WritesOutputFiles) {
  auto spec = small_spec();
  spec.output_dir = scratch("sweep");
  const auto res = run_sweep(spec);
  EXPECT_FALSE(res.all_diverged());
  for (const char* f : {"t_summary.csv", "t_runs.csv", "plot_t.py"})
    EXPECT_TRUE(fs::exists(spec.output_dir / f)) << f;
  for (const auto& r : res.runs) {
    if (r.diverged) continue;
    const auto csv = read_trace_csv(spec.output_dir / r.csv_file);
    EXPECT_EQ(csv.rows.size(), 50u);
    std::size_t events = 0;
    for (const auto& row : csv.rows) events += row.event;
    EXPECT_EQ(events, r.events);
  }
  const std::string summary = slurp(spec.output_dir / "t_summary.csv");
  EXPECT_EQ(summary.rfind("beta,runs,diverged,", 0), 0u);
}

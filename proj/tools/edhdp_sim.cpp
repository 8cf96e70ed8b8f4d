// Batch experiment runner: loads an experiment config, sweeps beta x seed,
// writes per-run trace CSVs, summary tables and an optional plot script.
//
// Exit codes: 0 success, 1 config error, 2 every run diverged, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "edhdp/edhdp.hpp"

namespace {

void print_summary(const edhdp::ExperimentSpec& spec, const edhdp::SweepResult& result) {
  std::printf("%s: %zu betas x %zu seeds, %zu steps per run\n", spec.name.c_str(),
              spec.betas.size(), spec.seeds.size(),
              spec.config_for(spec.betas.front(), spec.seeds.front()).total_steps());
  std::printf("%8s %5s %8s %14s %12s %14s %14s\n", "beta", "runs", "diverged", "final |x|",
              "events", "eta(final)", "mean |TD|");
  for (const auto& s : result.summary)
    std::printf("%8g %5zu %8zu %14.6g %12.2f %14.6g %14.6g\n", s.beta, s.runs, s.diverged,
                s.mean_final_state_norm, s.mean_events, s.mean_eta_final, s.mean_abs_td_final);
  for (const auto& r : result.runs) {
    if (r.diverged)
      std::fprintf(stderr, "warning: beta=%g seed=%llu diverged at step %zu\n", r.beta,
                   static_cast<unsigned long long>(r.seed), r.diverged_at);
    else if (r.clamped_steps > 0)
      std::fprintf(stderr, "warning: beta=%g seed=%llu clamped the learning rate on %zu steps\n",
                   r.beta, static_cast<unsigned long long>(r.seed), r.clamped_steps);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-driven dHDP experiment runner"};
  std::string config_path;
  std::string out_dir;
  long long seed_offset = 0;
  bool strict_guard = true;
  app.add_option("--config", config_path, "Experiment config file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides output.dir)");
  app.add_option("--seed-offset", seed_offset, "Added to every seed in the sweep");
  auto* guard_opt = app.add_option("--strict-guard", strict_guard,
                                   "true: learning-rate violations are errors; "
                                   "false: warn and clamp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  edhdp::SpecOverrides overrides;
  if (*out_opt) overrides.output_dir = out_dir;
  overrides.seed_offset = seed_offset;
  if (*guard_opt) overrides.strict_guard = strict_guard;

  edhdp::ExperimentSpec spec;
  try {
    spec = edhdp::load_spec(config_path, overrides);
  } catch (const edhdp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const edhdp::ContractViolation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  try {
    const edhdp::SweepResult result = edhdp::run_sweep(spec);
    print_summary(spec, result);
    std::printf("wrote %s\n", spec.output_dir.string().c_str());
    return result.all_diverged() ? 2 : 0;
  } catch (const edhdp::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const edhdp::LearningRateError& e) {
    std::cerr << "learning-rate guard: " << e.what() << '\n';
    return 1;
  }
}

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "edhdp/analysis.hpp"
#include "edhdp/experiment.hpp"
#include "edhdp/simulation.hpp"
#include "edhdp/trace_csv.hpp"

namespace edhdp {

/// Shortest decimal text that round-trips, e.g. 0.2 -> "0.2", 0 -> "0".
inline std::string shortest_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string run_file_name(const std::string& name, double beta, std::uint64_t seed) {
  return name + "_beta" + shortest_real(beta) + "_seed" + std::to_string(seed) + ".csv";
}

/// Last min(100, steps - 1) steps, never including k = 0.
inline StepWindow final_window(std::size_t steps) {
  const std::size_t len = std::min<std::size_t>(100, steps > 0 ? steps - 1 : 0);
  return {steps - len, steps};
}

struct RunOutcome {
  double beta = 0.0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::size_t diverged_at = 0;
  std::string csv_file;
  std::size_t steps = 0;
  std::size_t events = 0;
  std::size_t clamped_steps = 0;
  double final_state_norm = 0.0;
  double eta_final = 0.0;
  /// Mean |td_error| over final_window(steps); NaN for a one-step run.
  double mean_abs_td_final = 0.0;
  BoundAssumptions measured;
  UubRadii radii;
  /// Fraction of steps outside event_state_radius in the first and second
  /// half of the run.
  double excursion_first_half = 0.0;
  double excursion_second_half = 0.0;
};

struct BetaSummary {
  double beta = 0.0;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  double mean_final_state_norm = 0.0;
  double mean_events = 0.0;
  double mean_eta_final = 0.0;
  double mean_abs_td_final = 0.0;
};

struct SweepResult {
  std::vector<RunOutcome> runs;
  std::vector<BetaSummary> summary;

  bool all_diverged() const {
    return std::all_of(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.diverged; });
  }
};

inline RunOutcome summarize_run(const Trace& trace, double beta, std::uint64_t seed,
                                const BoundAssumptions& user) {
  RunOutcome out;
  out.beta = beta;
  out.seed = seed;
  out.steps = trace.size();
  out.events = event_count(trace, {0, trace.size()});
  for (const auto& rec : trace.records) out.clamped_steps += rec.rate_clamped ? 1 : 0;
  out.final_state_norm = trace.records.back().x.norm();
  out.eta_final = trace.records.back().eta;
  const StepWindow fw = final_window(trace.size());
  out.mean_abs_td_final = fw.size() > 0 ? bellman_residual_stats(trace, fw).mean_abs
                                        : std::numeric_limits<double>::quiet_NaN();
  BoundAssumptions assumed = user;
  assumed.beta = beta;
  out.measured = measure_assumption_bounds(trace, assumed);
  out.radii = uub_radii(out.measured);
  const std::size_t half = trace.size() / 2;
  out.excursion_first_half = excursion_fraction(trace, {0, half}, out.radii.event_state_radius);
  out.excursion_second_half =
      excursion_fraction(trace, {half, trace.size()}, out.radii.event_state_radius);
  return out;
}

/// Per-beta means over the non-diverged runs, in the order the runs are given.
inline std::vector<BetaSummary> summarize(const std::vector<double>& betas,
                                          const std::vector<RunOutcome>& runs) {
  std::vector<BetaSummary> out;
  for (double beta : betas) {
    BetaSummary s;
    s.beta = beta;
    for (const auto& r : runs) {
      if (r.beta != beta) continue;
      if (r.diverged) {
        ++s.diverged;
        continue;
      }
      ++s.runs;
      s.mean_final_state_norm += r.final_state_norm;
      s.mean_events += static_cast<double>(r.events);
      s.mean_eta_final += r.eta_final;
      s.mean_abs_td_final += r.mean_abs_td_final;
    }
    if (s.runs > 0) {
      const double c = static_cast<double>(s.runs);
      s.mean_final_state_norm /= c;
      s.mean_events /= c;
      s.mean_eta_final /= c;
      s.mean_abs_td_final /= c;
    }
    out.push_back(s);
  }
  return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<BetaSummary>& summary) {
  out << "beta,runs,diverged,mean_final_state_norm,mean_events,mean_eta_final,"
         "mean_abs_td_final\n";
  for (const auto& s : summary)
    out << format_real(s.beta) << ',' << s.runs << ',' << s.diverged << ','
        << format_real(s.mean_final_state_norm) << ',' << format_real(s.mean_events) << ','
        << format_real(s.mean_eta_final) << ',' << format_real(s.mean_abs_td_final) << '\n';
}

inline void write_runs_csv(std::ostream& out, const std::vector<RunOutcome>& runs) {
  out << "beta,seed,status,diverged_at,file,steps,events,clamped_steps,final_state_norm,"
         "eta_final,mean_abs_td_final,phi_cm,phi_am,C_m,r_m,d1m_sq,d2m_sq,no_event_radius,"
         "event_state_radius,event_xi_radius,excursion_first_half,excursion_second_half\n";
  for (const auto& r : runs) {
    out << format_real(r.beta) << ',' << r.seed << ',' << (r.diverged ? "diverged" : "ok") << ','
        << r.diverged_at << ',' << r.csv_file << ',';
    if (r.diverged) {
      out << ",,,,,,,,,,,,,,,,\n";
      continue;
    }
    out << r.steps << ',' << r.events << ',' << r.clamped_steps << ','
        << format_real(r.final_state_norm) << ',' << format_real(r.eta_final) << ','
        << format_real(r.mean_abs_td_final) << ',' << format_real(r.measured.phi_cm) << ','
        << format_real(r.measured.phi_am) << ',' << format_real(r.measured.c_m) << ','
        << format_real(r.measured.r_m) << ',' << format_real(d1m_squared(r.measured)) << ','
        << format_real(d2m_squared(r.measured)) << ',' << format_real(r.radii.no_event_radius)
        << ',' << format_real(r.radii.event_state_radius) << ','
        << format_real(r.radii.event_xi_radius) << ',' << format_real(r.excursion_first_half)
        << ',' << format_real(r.excursion_second_half) << '\n';
  }
}

/// Matplotlib script drawing state trajectories, cumulative event counts and
/// eta(k), averaged over seeds per beta, from the files of one sweep.
inline std::string plot_script(const std::string& name) {
  std::string s = R"PY(#!/usr/bin/env python3
# Generated by edhdp_sim. Run from the output directory: python3 plot_NAME.py
import csv
import collections
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

runs = collections.defaultdict(list)
with open("NAME_runs.csv") as f:
    for row in csv.DictReader(f):
        if row["status"] == "ok":
            runs[float(row["beta"])].append(row["file"])

def load(path):
    with open(path) as f:
        return list(csv.DictReader(f))

def mean_series(files, fn):
    series = [fn(load(p)) for p in files]
    n = min(len(s) for s in series)
    return [sum(s[i] for s in series) / len(series) for i in range(n)]

def cumulative(rows):
    out, total = [], 0
    for r in rows:
        total += int(r["event"])
        out.append(total)
    return out

fig, axes = plt.subplots(3, 1, figsize=(8, 11))
for beta in sorted(runs):
    files = runs[beta]
    first = load(files[0])
    k = [int(r["k"]) for r in first]
    axes[0].plot(k, [float(r["x1"]) for r in first], label=f"x1, beta={beta:g}")
    axes[0].plot(k, [float(r["x2"]) for r in first], "--", label=f"x2, beta={beta:g}")
    ev = mean_series(files, cumulative)
    axes[1].plot(range(len(ev)), ev, label=f"beta={beta:g}")
    eta = mean_series(files, lambda rows: [float(r["eta"]) for r in rows])
    axes[2].plot(range(len(eta)), eta, label=f"beta={beta:g}")
axes[0].set_title("state trajectories (first seed)")
axes[1].set_title("cumulative learning events (mean over seeds)")
axes[2].set_title("accumulated weight variation eta(k) (mean over seeds)")
for ax in axes:
    ax.set_xlabel("k")
    ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig("NAME_plots.png", dpi=120)
)PY";
  for (std::size_t pos = s.find("NAME"); pos != std::string::npos; pos = s.find("NAME", pos))
    s.replace(pos, 4, name);
  return s;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace detail

/// Runs every (beta, seed) pair, writing one trace CSV per finished run plus
/// <name>_summary.csv, <name>_runs.csv and optionally plot_<name>.py. A
/// diverged run is recorded and skipped; it does not stop the sweep. Results
/// are ordered by beta, then seed, independent of how many jobs run.
inline SweepResult run_sweep(const ExperimentSpec& spec, bool write_files = true) {
  validate(spec);
  namespace fs = std::filesystem;
  if (write_files) {
    std::error_code ec;
    fs::create_directories(spec.output_dir, ec);
    if (ec) throw IoError("cannot create " + spec.output_dir.string() + ": " + ec.message());
  }

  struct Job {
    double beta;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double b : spec.betas)
    for (auto s : spec.seeds) jobs.push_back({b, s});

  SweepResult result;
  result.runs.resize(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        const RunConfig cfg = spec.config_for(job.beta, job.seed);
        RunOutcome out;
        try {
          const Trace trace = run(cfg, WarningSink{});
          out = summarize_run(trace, job.beta, job.seed, spec.bounds);
          out.csv_file = run_file_name(spec.name, job.beta, job.seed);
          if (write_files) emit_trace_csv(trace, spec.output_dir / out.csv_file);
        } catch (const DivergenceError& e) {
          out = RunOutcome{};
          out.beta = job.beta;
          out.seed = job.seed;
          out.diverged = true;
          out.diverged_at = e.step();
        }
        result.runs[i] = std::move(out);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(spec.jobs, jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  result.summary = summarize(spec.betas, result.runs);

  if (write_files) {
    std::ostringstream summary, runs;
    write_summary_csv(summary, result.summary);
    write_runs_csv(runs, result.runs);
    detail::write_file(spec.output_dir / (spec.name + "_summary.csv"), summary.str());
    detail::write_file(spec.output_dir / (spec.name + "_runs.csv"), runs.str());
    if (spec.emit_plots)
      detail::write_file(spec.output_dir / ("plot_" + spec.name + ".py"), plot_script(spec.name));
  }
  return result;
}

}  // namespace edhdp

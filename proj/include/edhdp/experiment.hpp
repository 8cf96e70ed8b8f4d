#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edhdp/analysis.hpp"
#include "edhdp/errors.hpp"
#include "edhdp/simulation.hpp"

namespace edhdp {

/// A phase as written in a config file. An event_driven or frozen phase
/// without an explicit beta takes the sweep's beta.
struct PhaseTemplate {
  std::size_t length = 0;
  PhaseMode mode = PhaseMode::event_driven;
  std::optional<double> beta;
  bool noise_active = false;
};

struct ExperimentSpec {
  std::string name = "edhdp";
  /// Everything except phases and seed; those come from the sweep.
  RunConfig base;
  std::vector<PhaseTemplate> phases{{500, PhaseMode::event_driven, std::nullopt, false}};
  std::vector<double> betas{0.0, 0.2, 0.4, 0.6};
  std::vector<std::uint64_t> seeds = default_seeds();
  std::filesystem::path output_dir = "results";
  bool emit_plots = true;
  unsigned jobs = 1;
  /// User-side assumptions for the bound diagnostics; the measurable fields
  /// are overwritten per run.
  BoundAssumptions bounds;

  static std::vector<std::uint64_t> default_seeds() {
    std::vector<std::uint64_t> s(20);
    for (std::uint64_t i = 0; i < s.size(); ++i) s[i] = i;
    return s;
  }

  RunConfig config_for(double beta, std::uint64_t seed) const {
    RunConfig cfg = base;
    cfg.seed = seed;
    cfg.phases.clear();
    for (const auto& p : phases)
      cfg.phases.push_back({p.length, p.mode,
                            p.mode == PhaseMode::time_driven ? 0.0 : p.beta.value_or(beta),
                            p.noise_active});
    return cfg;
  }
};

/// Command-line adjustments applied before validation.
struct SpecOverrides {
  std::optional<std::filesystem::path> output_dir;
  std::int64_t seed_offset = 0;
  std::optional<bool> strict_guard;
};

inline void validate(const ExperimentSpec& spec) {
  if (spec.name.empty()) throw ConfigError("name must not be empty");
  if (spec.name.find_first_of("/\\") != std::string::npos)
    throw ConfigError("name must not contain path separators");
  if (spec.betas.empty()) throw ConfigError("sweep.betas must not be empty");
  for (double b : spec.betas)
    if (!(b >= 0.0 && b < 1.0)) throw ConfigError("every sweep beta must lie in [0, 1)");
  if (spec.seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
  if (spec.phases.empty()) throw ConfigError("at least one phase is required");
  if (spec.jobs == 0) throw ConfigError("sweep.jobs must be at least 1");
  for (double b : spec.betas) validate(spec.config_for(b, spec.seeds.front()));
  try {
    BoundAssumptions probe = spec.bounds;
    probe.q = resolved_cost(spec.base).q();
    probe.r = resolved_cost(spec.base).r();
    validate(probe);
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("bounds: ") + e.what());
  }
}

inline void apply_overrides(ExperimentSpec& spec, const SpecOverrides& ov) {
  if (ov.output_dir) spec.output_dir = *ov.output_dir;
  if (ov.strict_guard)
    spec.base.agent.learning.guard = *ov.strict_guard ? GuardMode::strict : GuardMode::permissive;
  if (ov.seed_offset != 0)
    for (auto& s : spec.seeds) s += static_cast<std::uint64_t>(ov.seed_offset);
}

namespace detail {

using nlohmann::json;

/// 1-based line and column of a 1-based byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text,
                                                       std::size_t byte) {
  std::size_t line = 1, col = 1;
  const std::size_t stop = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < stop; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

class SectionReader {
 public:
  SectionReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const json& at(const std::string& key) { return seen_.insert(key), obj_.at(key); }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(child(key) + " must be a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError(child(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool flag(const std::string& key) {
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(child(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(child(key) + " must be a string");
    return v.get<std::string>();
  }

  Vector vector(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(child(key) + " must be a non-empty array");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(child(key) + " must contain numbers");
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
  }

  /// A nested array of rows, or a scalar s meaning s * I of the given size.
  Matrix matrix(const std::string& key, std::size_t identity_size) {
    const json& v = at(key);
    if (v.is_number()) {
      const auto d = static_cast<Eigen::Index>(identity_size);
      return v.get<double>() * Matrix::Identity(d, d);
    }
    if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty())
      throw ConfigError(child(key) + " must be a number or an array of rows");
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v[0].size()));
    for (std::size_t r = 0; r < v.size(); ++r) {
      if (!v[r].is_array() || v[r].size() != v[0].size())
        throw ConfigError(child(key) + " rows must have equal length");
      for (std::size_t c = 0; c < v[r].size(); ++c) {
        if (!v[r][c].is_number()) throw ConfigError(child(key) + " must contain numbers");
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
      }
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& item : obj_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key " + child(item.key()));
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline PhaseMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "time_driven") return PhaseMode::time_driven;
  if (s == "event_driven") return PhaseMode::event_driven;
  if (s == "frozen") return PhaseMode::frozen;
  throw ConfigError(where + " must be time_driven, event_driven or frozen");
}

inline void read_agent(SectionReader in, AgentSpec& a) {
  if (in.has("critic_hidden")) a.critic_hidden = in.count("critic_hidden");
  if (in.has("action_hidden")) a.action_hidden = in.count("action_hidden");
  if (in.has("critic_rate")) a.learning.critic_rate = in.number("critic_rate");
  if (in.has("action_rate")) a.learning.action_rate = in.number("action_rate");
  if (in.has("init_range")) a.init_range = in.number("init_range");
  if (in.has("tau_range")) a.tau_range = in.number("tau_range");
  if (in.has("strict_guard"))
    a.learning.guard = in.flag("strict_guard") ? GuardMode::strict : GuardMode::permissive;
  if (in.has("guard_margin")) a.learning.guard_margin = in.number("guard_margin");
  if (in.has("critic_cycles")) a.learning.critic_cycles = static_cast<int>(in.count("critic_cycles"));
  if (in.has("action_cycles")) a.learning.action_cycles = static_cast<int>(in.count("action_cycles"));
  if (in.has("action_uses_updated_critic"))
    a.learning.action_uses_updated_critic = in.flag("action_uses_updated_critic");
  in.reject_unknown();
}

inline void read_bounds(SectionReader in, BoundAssumptions& b) {
  if (in.has("omega_cm")) b.omega_cm = in.number("omega_cm");
  if (in.has("omega_am")) b.omega_am = in.number("omega_am");
  if (in.has("eps_cm")) b.eps_cm = in.number("eps_cm");
  if (in.has("eps_am")) b.eps_am = in.number("eps_am");
  if (in.has("gamma")) b.gamma = in.number("gamma");
  in.reject_unknown();
}

inline ExperimentSpec read_spec(const json& root) {
  ExperimentSpec spec;
  SectionReader in(root, "");
  if (in.has("name")) spec.name = in.text("name");

  if (in.has("plant")) {
    SectionReader p(in.at("plant"), "plant");
    const std::string type = p.has("type") ? p.text("type") : "benchmark";
    if (type == "benchmark") {
      spec.base.plant = BenchmarkPlant{};
    } else if (type == "linear") {
      if (!p.has("A") || !p.has("B")) throw ConfigError("plant.A and plant.B are required");
      try {
        spec.base.plant = LinearPlant(p.matrix("A", 0), p.matrix("B", 0));
      } catch (const ContractViolation& e) {
        throw ConfigError(std::string("plant: ") + e.what());
      }
    } else {
      throw ConfigError("plant.type must be benchmark or linear");
    }
    p.reject_unknown();
  }
  const std::size_t m = state_dim(spec.base.plant);
  const std::size_t n = control_dim(spec.base.plant);

  if (in.has("x0")) spec.base.x0 = in.vector("x0");
  if (in.has("divergence_limit")) spec.base.divergence_limit = in.number("divergence_limit");

  if (in.has("cost")) {
    SectionReader c(in.at("cost"), "cost");
    Matrix q = c.has("Q") ? c.matrix("Q", m) : Matrix(Matrix::Identity(m, m));
    Matrix r = c.has("R") ? c.matrix("R", n) : Matrix(0.1 * Matrix::Identity(n, n));
    c.reject_unknown();
    try {
      spec.base.cost = RewardSpec(std::move(q), std::move(r));
    } catch (const ContractViolation& e) {
      throw ConfigError(std::string("cost: ") + e.what());
    }
  }

  if (in.has("agent")) read_agent(SectionReader(in.at("agent"), "agent"), spec.base.agent);

  if (in.has("trigger")) {
    SectionReader t(in.at("trigger"), "trigger");
    if (t.has("lipschitz")) spec.base.trigger.lipschitz = t.number("lipschitz");
    if (t.has("lipschitz_floor")) spec.base.trigger.lipschitz_floor = t.number("lipschitz_floor");
    if (t.has("omega_floor")) spec.base.trigger.omega_floor = t.number("omega_floor");
    t.reject_unknown();
  }

  if (in.has("noise")) {
    SectionReader z(in.at("noise"), "noise");
    if (z.has("mean")) spec.base.noise.mean = z.number("mean");
    if (z.has("stddev")) spec.base.noise.stddev = z.number("stddev");
    if (z.has("gain")) spec.base.noise.gain = z.vector("gain");
    if (z.has("window")) {
      const Vector w = z.vector("window");
      if (w.size() != 2 || w(0) < 0 || w(1) < w(0))
        throw ConfigError("noise.window must be [begin, end] with 0 <= begin <= end");
      spec.base.noise.window =
          StepWindow{static_cast<std::size_t>(w(0)), static_cast<std::size_t>(w(1))};
    }
    z.reject_unknown();
  }

  const std::string protocol = in.has("protocol") ? in.text("protocol") : "stabilization";
  if (in.has("phases")) {
    const json& arr = in.at("phases");
    if (!arr.is_array() || arr.empty()) throw ConfigError("phases must be a non-empty array");
    spec.phases.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "phases[" + std::to_string(i) + "]";
      SectionReader ph(arr[i], where);
      PhaseTemplate t;
      if (!ph.has("length")) throw ConfigError(where + ".length is required");
      t.length = ph.count("length");
      if (ph.has("mode")) t.mode = parse_mode(ph.text("mode"), where + ".mode");
      if (ph.has("beta")) t.beta = ph.number("beta");
      if (ph.has("noise")) t.noise_active = ph.flag("noise");
      ph.reject_unknown();
      spec.phases.push_back(t);
    }
  } else if (protocol == "stabilization") {
    const std::size_t steps = in.has("steps") ? in.count("steps") : 500;
    spec.phases = {{steps, PhaseMode::event_driven, std::nullopt, false}};
  } else if (protocol == "drift") {
    std::size_t train = 100, noisy = 200, clean = 200;
    if (in.has("drift")) {
      SectionReader d(in.at("drift"), "drift");
      if (d.has("train")) train = d.count("train");
      if (d.has("noisy")) noisy = d.count("noisy");
      if (d.has("clean")) clean = d.count("clean");
      d.reject_unknown();
    }
    spec.phases = {{train, PhaseMode::time_driven, std::nullopt, false},
                   {noisy, PhaseMode::event_driven, std::nullopt, true},
                   {clean, PhaseMode::event_driven, std::nullopt, false}};
  } else {
    throw ConfigError("protocol must be stabilization or drift");
  }
  if (protocol != "stabilization" && in.has("steps"))
    throw ConfigError("steps only applies to the stabilization protocol");
  if (protocol != "drift" && in.has("drift"))
    throw ConfigError("drift only applies to the drift protocol");

  if (in.has("sweep")) {
    SectionReader s(in.at("sweep"), "sweep");
    if (s.has("betas")) {
      const Vector b = s.vector("betas");
      spec.betas.assign(b.data(), b.data() + b.size());
    }
    if (s.has("seeds")) {
      const json& arr = s.at("seeds");
      if (!arr.is_array() || arr.empty())
        throw ConfigError("sweep.seeds must be a non-empty array of integers");
      spec.seeds.clear();
      for (const auto& v : arr) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
          throw ConfigError("sweep.seeds must contain non-negative integers");
        spec.seeds.push_back(v.get<std::uint64_t>());
      }
    }
    if (s.has("jobs")) spec.jobs = static_cast<unsigned>(s.count("jobs"));
    s.reject_unknown();
  }

  if (in.has("output")) {
    SectionReader o(in.at("output"), "output");
    if (o.has("dir")) spec.output_dir = o.text("dir");
    if (o.has("plots")) spec.emit_plots = o.flag("plots");
    o.reject_unknown();
  }

  if (in.has("bounds")) read_bounds(SectionReader(in.at("bounds"), "bounds"), spec.bounds);

  in.reject_unknown();
  return spec;
}

}  // namespace detail

/// Parses a config document (JSON, // and /* */ comments allowed). An empty
/// or whitespace-only document yields the defaults. Overrides are applied
/// before validation.
inline ExperimentSpec parse_spec(const std::string& text, const SpecOverrides& ov = {}) {
  nlohmann::json root = nlohmann::json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      root = nlohmann::json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
      const auto [line, col] = detail::line_column(text, e.byte);
      throw ConfigError("parse error at line " + std::to_string(line) + ", column " +
                            std::to_string(col) + ": " + e.what(),
                        line, col);
    }
  }
  ExperimentSpec spec = detail::read_spec(root);
  apply_overrides(spec, ov);
  validate(spec);
  return spec;
}

inline ExperimentSpec load_spec(const std::filesystem::path& path, const SpecOverrides& ov = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str(), ov);
}

}  // namespace edhdp

#include "osc_echo/config.hpp"

#include "osc_echo/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>

namespace osc_echo {

using json = nlohmann::ordered_json;
using std::numbers::pi;

namespace {

constexpr const char* kStepNames[] = {"i", "ii", "iii"};

// Strict view of one JSON object: rejects keys outside `allowed` and reports
// errors with the full field path.
class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    for (const auto& [key, _] : j_.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw ConfigError(field(key), "unknown key");
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const {
    if (!has(key)) throw ConfigError(field(key), "missing required field");
    return j_.at(key);
  }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
    return x;
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::uint64_t count(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(field(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  Section child(const char* key, std::initializer_list<const char*> allowed) const {
    return Section(at(key), field(key), allowed);
  }

  const json& raw() const { return j_; }

 private:
  const json& j_;
  std::string path_;
};

std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

std::array<double, 3> triple(const Section& s, const char* key, std::size_t n) {
  const json& v = s.at(key);
  if (!v.is_array() || v.size() != n) {
    throw ConfigError(s.field(key), "expected an array of " + std::to_string(n) + " numbers");
  }
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
      throw ConfigError(s.field(key) + "[" + std::to_string(i) + "]", "expected a finite number");
    }
    out[i] = v[i].get<double>();
  }
  return out;
}

RunConfig from_json(const json& root) {
  RunConfig cfg;
  const Section top(root, "",
                    {"oscillator", "force", "protocol", "monte_carlo", "sweep", "sample_marks", "initial_state"});

  const Section osc = top.child("oscillator", {"omega_hz", "gamma_hz", "n0"});
  cfg.oscillator = {osc.number("omega_hz"), osc.number("gamma_hz"), osc.number("n0")};

  const Section force = top.child("force", {"f0_mean", "f0_sigma", "units"});
  cfg.force.f0_mean = force.number("f0_mean");
  cfg.force.f0_sigma = force.number("f0_sigma");
  if (force.has("units")) {
    const json& u = force.at("units");
    if (u.is_string()) {
      if (u.get<std::string>() != "normalized") {
        throw ConfigError(force.field("units"), "expected \"normalized\" or {\"si\": {\"mass_kg\": ...}}");
      }
    } else {
      const Section units = force.child("units", {"si"});
      const Section si = units.child("si", {"mass_kg"});
      cfg.force.si_mass_kg = si.number("mass_kg");
    }
  }

  const Section proto = top.child("protocol", {"r", "r_prime", "theta2"});
  cfg.protocol.r = proto.number("r");
  cfg.protocol.theta2 = proto.number("theta2");
  if (proto.has("r_prime")) {
    const json& rp = proto.at("r_prime");
    if (rp.is_string()) {
      if (rp.get<std::string>() != "optimal") throw ConfigError(proto.field("r_prime"), "expected \"optimal\" or a number");
    } else {
      cfg.protocol.r_prime = proto.number("r_prime");
    }
  }

  if (top.has("monte_carlo")) {
    const Section mc = top.child("monte_carlo", {"shots", "steps_per_period", "master_seed"});
    cfg.monte_carlo.shots = mc.count("shots", cfg.monte_carlo.shots);
    cfg.monte_carlo.steps_per_period = mc.count("steps_per_period", cfg.monte_carlo.steps_per_period);
    cfg.monte_carlo.master_seed = mc.count("master_seed", cfg.monte_carlo.master_seed);
  }

  if (top.has("sweep")) {
    const Section sw = top.child("sweep", {"rprime_min", "rprime_max", "points", "r", "backend"});
    cfg.sweep.rprime_min = sw.number("rprime_min", cfg.sweep.rprime_min);
    cfg.sweep.rprime_max = sw.number("rprime_max", cfg.sweep.rprime_max);
    cfg.sweep.points = sw.count("points", cfg.sweep.points);
    if (sw.has("r")) cfg.sweep.r = sw.number("r");
    if (sw.has("backend")) {
      const json& b = sw.at("backend");
      const std::string name = b.is_string() ? b.get<std::string>() : "";
      if (name == "analytic") {
        cfg.sweep.backend = Backend::Analytic;
      } else if (name == "mc") {
        cfg.sweep.backend = Backend::MonteCarlo;
      } else {
        throw ConfigError(sw.field("backend"), "expected \"analytic\" or \"mc\"");
      }
    }
  }

  if (top.has("sample_marks")) {
    const json& marks = top.at("sample_marks");
    if (!marks.is_array()) throw ConfigError("sample_marks", "expected an array");
    for (std::size_t i = 0; i < marks.size(); ++i) {
      const Section m(marks[i], "sample_marks[" + std::to_string(i) + "]", {"step", "phase"});
      const json& step = m.at("step");
      int idx = -1;
      for (int k = 0; k < 3; ++k) {
        if (step.is_string() && step.get<std::string>() == kStepNames[k]) idx = k;
      }
      if (idx < 0) throw ConfigError(m.field("step"), "expected \"i\", \"ii\" or \"iii\"");
      cfg.sample_marks.push_back({idx, m.number("phase")});
    }
  }

  if (top.has("initial_state")) {
    const Section init = top.child("initial_state", {"mean", "cov"});
    GaussianState s;
    if (init.has("mean")) {
      const auto m = triple(init, "mean", 2);
      s.mean = {m[0], m[1]};
    }
    const auto c = triple(init, "cov", 3);
    s.cov = {c[0], c[1], c[2]};
    cfg.initial_state = s;
  }

  cfg.validate();
  return cfg;
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](const char* field, double v) {
    if (!std::isfinite(v) || v <= 0.0) throw ConfigError(field, "must be > 0");
  };
  auto non_negative = [](const char* field, double v) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError(field, "must be >= 0");
  };
  positive("oscillator.omega_hz", oscillator.omega_hz);
  non_negative("oscillator.gamma_hz", oscillator.gamma_hz);
  non_negative("oscillator.n0", oscillator.n0);
  if (!std::isfinite(force.f0_mean)) throw ConfigError("force.f0_mean", "must be finite");
  non_negative("force.f0_sigma", force.f0_sigma);
  if (force.si_mass_kg) positive("force.units.si.mass_kg", *force.si_mass_kg);
  if (!std::isfinite(protocol.r) || protocol.r < 1.0) throw ConfigError("protocol.r", "must be >= 1");
  if (protocol.r_prime && (!std::isfinite(*protocol.r_prime) || *protocol.r_prime < 1.0)) {
    throw ConfigError("protocol.r_prime", "must be >= 1 or \"optimal\"");
  }
  non_negative("protocol.theta2", protocol.theta2);
  if (monte_carlo.shots < 1) throw ConfigError("monte_carlo.shots", "must be >= 1");
  if (monte_carlo.steps_per_period < 100) throw ConfigError("monte_carlo.steps_per_period", "must be >= 100");
  if (sweep.points < 3) throw ConfigError("sweep.points", "must be >= 3");
  if (!std::isfinite(sweep.rprime_min) || sweep.rprime_min < 1.0) throw ConfigError("sweep.rprime_min", "must be >= 1");
  if (!std::isfinite(sweep.rprime_max) || !(sweep.rprime_max > sweep.rprime_min)) {
    throw ConfigError("sweep.rprime_max", "must be > sweep.rprime_min");
  }
  if (sweep.r && (!std::isfinite(*sweep.r) || *sweep.r < 1.0)) throw ConfigError("sweep.r", "must be >= 1");

  const double step_phase[3] = {pi, protocol.theta2, pi};
  for (std::size_t i = 0; i < sample_marks.size(); ++i) {
    const std::string field = "sample_marks[" + std::to_string(i) + "]";
    const Mark& m = sample_marks[i];
    if (m.step < 0 || m.step > 2) throw ConfigError(field + ".step", "expected \"i\", \"ii\" or \"iii\"");
    if (!std::isfinite(m.phase) || m.phase < 0.0 || m.phase > step_phase[m.step] * (1.0 + 1e-12)) {
      throw ConfigError(field + ".phase", "must lie within its step");
    }
    if (i > 0) {
      const Mark& prev = sample_marks[i - 1];
      if (m.step < prev.step || (m.step == prev.step && m.phase < prev.phase)) {
        throw ConfigError(field, "sample marks must be in protocol order");
      }
    }
  }
  if (initial_state) {
    const auto& s = *initial_state;
    if (!std::isfinite(s.mean.q) || !std::isfinite(s.mean.p)) throw ConfigError("initial_state.mean", "must be finite");
    if (!s.cov.is_psd()) throw ConfigError("initial_state.cov", "must be positive semidefinite");
  }
}

OscillatorConfig RunConfig::oscillator_config() const {
  return {2.0 * pi * oscillator.omega_hz, 2.0 * pi * oscillator.gamma_hz, oscillator.n0};
}

ForceModel RunConfig::force_model() const {
  if (!force.si_mass_kg) return {force.f0_mean, force.f0_sigma};
  const double omega = oscillator_config().omega;
  return {normalized_force(force.f0_mean, *force.si_mass_kg, omega),
          normalized_force(force.f0_sigma, *force.si_mass_kg, omega)};
}

EchoSpec RunConfig::echo_spec() const {
  return {protocol.r, protocol.r_prime.value_or(optimal_ratio(protocol.r)), protocol.theta2};
}

JumpSequence RunConfig::sequence() const {
  JumpSequence seq = echo_sequence(echo_spec(), oscillator_config().omega);
  for (std::size_t i = 0; i < sample_marks.size(); ++i) {
    const Mark& m = sample_marks[i];
    const double limit = seq.segments[static_cast<std::size_t>(m.step)].phase;
    seq.sample_marks.push_back(
        {static_cast<std::size_t>(m.step), std::min(m.phase, limit), "t" + std::to_string(i + 1)});
  }
  return seq;
}

GaussianState RunConfig::initial() const {
  return initial_state.value_or(GaussianState::thermal(oscillator.n0));
}

McConfig RunConfig::mc_config() const {
  McConfig mc;
  mc.shots = monte_carlo.shots;
  mc.steps_per_period = monte_carlo.steps_per_period;
  mc.master_seed = monte_carlo.master_seed;
  return mc;
}

SweepSetup RunConfig::sweep_setup(Backend backend) const {
  SweepSetup s;
  s.r = sweep_r();
  s.theta2 = protocol.theta2;
  s.rprime_grid = linear_grid(sweep.rprime_min, sweep.rprime_max, sweep.points);
  s.force = force_model();
  s.cfg = oscillator_config();
  s.state0 = initial();
  s.backend = backend;
  s.mc = mc_config();
  return s;
}

RunConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<json>", "parse error at line " + std::to_string(line_of(json_text, e.byte)) + ": " +
                                    e.what());
  }
  return from_json(root);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const RunConfig& cfg) {
  json j;
  j["oscillator"] = {{"omega_hz", cfg.oscillator.omega_hz},
                     {"gamma_hz", cfg.oscillator.gamma_hz},
                     {"n0", cfg.oscillator.n0}};
  j["force"] = {{"f0_mean", cfg.force.f0_mean}, {"f0_sigma", cfg.force.f0_sigma}};
  if (cfg.force.si_mass_kg) {
    j["force"]["units"] = {{"si", {{"mass_kg", *cfg.force.si_mass_kg}}}};
  } else {
    j["force"]["units"] = "normalized";
  }
  j["protocol"] = {{"r", cfg.protocol.r}};
  if (cfg.protocol.r_prime) {
    j["protocol"]["r_prime"] = *cfg.protocol.r_prime;
  } else {
    j["protocol"]["r_prime"] = "optimal";
  }
  j["protocol"]["theta2"] = cfg.protocol.theta2;
  j["monte_carlo"] = {{"shots", cfg.monte_carlo.shots},
                      {"steps_per_period", cfg.monte_carlo.steps_per_period},
                      {"master_seed", cfg.monte_carlo.master_seed}};
  j["sweep"] = {{"rprime_min", cfg.sweep.rprime_min},
                {"rprime_max", cfg.sweep.rprime_max},
                {"points", cfg.sweep.points}};
  if (cfg.sweep.r) j["sweep"]["r"] = *cfg.sweep.r;
  j["sweep"]["backend"] = cfg.sweep.backend == Backend::Analytic ? "analytic" : "mc";
  j["sample_marks"] = json::array();
  for (const auto& m : cfg.sample_marks) {
    j["sample_marks"].push_back({{"step", kStepNames[m.step]}, {"phase", m.phase}});
  }
  if (cfg.initial_state) {
    const auto& s = *cfg.initial_state;
    j["initial_state"] = {{"mean", {s.mean.q, s.mean.p}}, {"cov", {s.cov.qq, s.cov.qp, s.cov.pp}}};
  }
  return j.dump(2) + "\n";
}

RunConfig preset(std::string_view name) {
  RunConfig cfg;
  cfg.oscillator = {52e3, 3.4e3, 1.2};
  cfg.force.si_mass_kg = 1.2e-18;
  cfg.force.f0_mean = 144e-18;
  cfg.protocol = {2.0, std::nullopt, pi};
  cfg.monte_carlo = {100, 200, kDefaultSeed};
  cfg.sweep = {1.5, 3.2, 18, std::sqrt(10.0), Backend::MonteCarlo};
  for (const auto& m : echo_probe_marks(cfg.echo_spec())) {
    cfg.sample_marks.push_back({static_cast<int>(m.segment), m.phase});
  }
  // probe clouds start from the reported initial state size of 4
  cfg.initial_state = GaussianState{{}, CovMat::diag(4.0, 4.0)};

  if (name == "fig4") {
    cfg.force.f0_sigma = 22.7e-18;
  } else if (name == "fig4h") {
    cfg.force.f0_sigma = 6.95e-18;
  } else {
    throw ConfigError("<preset>", "unknown preset '" + std::string(name) + "'");
  }
  cfg.validate();
  return cfg;
}

std::vector<std::string> preset_names() { return {"fig4", "fig4h"}; }

}  // namespace osc_echo

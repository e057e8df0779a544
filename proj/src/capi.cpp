#include "osc_echo/osc_echo.h"

#include "osc_echo/commands.hpp"
#include "osc_echo/config.hpp"
#include "osc_echo/errors.hpp"
#include "osc_echo/estimation.hpp"
#include "osc_echo/monte_carlo.hpp"
#include "osc_echo/protocol.hpp"

#include <cstring>
#include <new>
#include <string>
#include <string_view>

struct oe_sequence {
  osc_echo::JumpSequence seq;
};

struct oe_ensemble {
  std::vector<osc_echo::ShotRecord> records;
};

struct oe_config {
  osc_echo::RunConfig cfg;
};

namespace {

using namespace osc_echo;

thread_local std::string g_last_error;

oe_status fail(oe_status status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

// Runs `fn` translating exceptions into status codes.
template <class Fn>
oe_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return OE_OK;
  } catch (const ConfigError& e) {
    return fail(OE_ERR_CONFIG, e.what());
  } catch (const DomainError& e) {
    return fail(OE_ERR_DOMAIN, e.what());
  } catch (const InvariantError& e) {
    return fail(OE_ERR_INVARIANT, e.what());
  } catch (const InsufficientDataError& e) {
    return fail(OE_ERR_INSUFFICIENT_DATA, e.what());
  } catch (const UnidentifiableError& e) {
    return fail(OE_ERR_UNIDENTIFIABLE, e.what());
  } catch (const FitFailureError& e) {
    return fail(OE_ERR_FIT_FAILURE, e.what());
  } catch (const IoError& e) {
    return fail(OE_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(OE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(OE_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(OE_ERR_INTERNAL, "unknown error");
  }
}

template <class... Ptr>
bool any_null(const Ptr*... p) {
  return ((p == nullptr) || ...);
}

#define OE_REQUIRE_NONNULL(...) \
  if (any_null(__VA_ARGS__)) return fail(OE_ERR_NULL_ARGUMENT, "null argument")

oe_phase_vec to_c(PhaseVec v) { return {v.q, v.p}; }
oe_cov to_c(const CovMat& c) { return {c.qq, c.qp, c.pp}; }
oe_state to_c(const GaussianState& s) { return {to_c(s.mean), to_c(s.cov)}; }
PhaseVec from_c(oe_phase_vec v) { return {v.q, v.p}; }
CovMat from_c(const oe_cov& c) { return {c.qq, c.qp, c.pp}; }
GaussianState from_c(const oe_state& s) { return {from_c(s.mean), from_c(s.cov)}; }
OscillatorConfig from_c(const oe_oscillator& o) { return {o.omega, o.gamma, o.n0}; }
EchoSpec from_c(const oe_echo_spec& s) { return {s.r, s.r_prime, s.theta2}; }

oe_status write_states(const std::vector<GaussianState>& states, oe_state* out, size_t cap) {
  if (states.size() > cap) {
    return fail(OE_ERR_BUFFER_TOO_SMALL,
                "output needs " + std::to_string(states.size()) + " states, capacity " + std::to_string(cap));
  }
  for (std::size_t i = 0; i < states.size(); ++i) out[i] = to_c(states[i]);
  return OE_OK;
}

}  // namespace

extern "C" {

const char* oe_version(void) { return "1.0.0"; }

const char* oe_status_string(oe_status status) {
  switch (status) {
    case OE_OK: return "ok";
    case OE_ERR_NULL_ARGUMENT: return "null argument";
    case OE_ERR_DOMAIN: return "domain error";
    case OE_ERR_INVARIANT: return "invariant violation";
    case OE_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case OE_ERR_UNIDENTIFIABLE: return "unidentifiable";
    case OE_ERR_FIT_FAILURE: return "fit failure";
    case OE_ERR_CONFIG: return "configuration error";
    case OE_ERR_IO: return "i/o error";
    case OE_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case OE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* oe_last_error(void) { return g_last_error.c_str(); }

oe_status oe_transition_matrix(double r, double theta, double out[4]) {
  OE_REQUIRE_NONNULL(out);
  return guarded([&] {
    const Mat2 m = transition_matrix(r, theta);
    out[0] = m(0, 0);
    out[1] = m(0, 1);
    out[2] = m(1, 0);
    out[3] = m(1, 1);
  });
}

oe_status oe_displacement(double f0, double r, double theta, double omega, oe_phase_vec* out) {
  OE_REQUIRE_NONNULL(out);
  return guarded([&] { *out = to_c(displacement(f0, r, theta, omega)); });
}

oe_status oe_rotation_center(double f0, double r, double omega, oe_phase_vec* out) {
  OE_REQUIRE_NONNULL(out);
  return guarded([&] { *out = to_c(rotation_center(f0, r, omega)); });
}

oe_status oe_heating_cov(double r, double theta, double gamma, double omega, oe_cov* out) {
  OE_REQUIRE_NONNULL(out);
  return guarded([&] { *out = to_c(heating_cov(r, theta, gamma, omega)); });
}

oe_status oe_shot_cov(double sigma_f0, double r, double theta, double omega, oe_cov* out) {
  OE_REQUIRE_NONNULL(out);
  return guarded([&] { *out = to_c(shot_cov(sigma_f0, r, theta, omega)); });
}

oe_status oe_propagate_segment(const oe_state* state, double r, double theta, double f0, const oe_oscillator* osc,
                               oe_state* out) {
  OE_REQUIRE_NONNULL(state, osc, out);
  return guarded([&] { *out = to_c(propagate_segment(from_c(*state), {r, theta}, f0, from_c(*osc))); });
}

oe_status oe_normalized_force(double force_si, double mass_kg, double omega, double* out) {
  OE_REQUIRE_NONNULL(out);
  return guarded([&] { *out = normalized_force(force_si, mass_kg, omega); });
}

oe_status oe_optimal_ratio(double r, double* out) {
  OE_REQUIRE_NONNULL(out);
  return guarded([&] { *out = optimal_ratio(r); });
}

oe_status oe_echo_mean(oe_phase_vec d0, double f0, const oe_echo_spec* spec, double omega, oe_phase_vec* out) {
  OE_REQUIRE_NONNULL(spec, out);
  return guarded([&] { *out = to_c(echo_mean(from_c(d0), f0, from_c(*spec), omega)); });
}

oe_status oe_echo_cov(const oe_cov* cov0, const oe_echo_spec* spec, const oe_oscillator* osc, double sigma_f0,
                      oe_cov* out) {
  OE_REQUIRE_NONNULL(cov0, spec, osc, out);
  return guarded([&] { *out = to_c(echo_cov(from_c(*cov0), from_c(*spec), from_c(*osc), sigma_f0)); });
}

oe_status oe_state_size(const oe_cov* cov, double* out) {
  OE_REQUIRE_NONNULL(cov, out);
  return guarded([&] { *out = state_size(from_c(*cov)); });
}

oe_status oe_sequence_create(oe_sequence** out) {
  OE_REQUIRE_NONNULL(out);
  return guarded([&] { *out = new oe_sequence{}; });
}

oe_status oe_sequence_create_echo(const oe_echo_spec* spec, double omega, oe_sequence** out) {
  OE_REQUIRE_NONNULL(spec, out);
  return guarded([&] { *out = new oe_sequence{echo_sequence(from_c(*spec), omega)}; });
}

void oe_sequence_free(oe_sequence* seq) { delete seq; }

oe_status oe_sequence_add_segment(oe_sequence* seq, double ratio, double phase) {
  OE_REQUIRE_NONNULL(seq);
  return guarded([&] {
    const Segment s{ratio, phase};
    s.validate();
    seq->seq.segments.push_back(s);
  });
}

oe_status oe_sequence_add_mark(oe_sequence* seq, size_t segment, double phase, const char* label) {
  OE_REQUIRE_NONNULL(seq);
  return guarded([&] {
    JumpSequence candidate = seq->seq;
    const std::string name = label ? label : "t" + std::to_string(candidate.sample_marks.size() + 1);
    candidate.sample_marks.push_back({segment, phase, name});
    candidate.validate();
    seq->seq = std::move(candidate);
  });
}

oe_status oe_sequence_segment_count(const oe_sequence* seq, size_t* out) {
  OE_REQUIRE_NONNULL(seq, out);
  *out = seq->seq.segments.size();
  return OE_OK;
}

oe_status oe_sequence_mark_count(const oe_sequence* seq, size_t* out) {
  OE_REQUIRE_NONNULL(seq, out);
  *out = seq->seq.sample_marks.size();
  return OE_OK;
}

oe_status oe_sequence_run(const oe_sequence* seq, const oe_state* state0, double f0, const oe_oscillator* osc,
                          oe_state* out, size_t cap) {
  OE_REQUIRE_NONNULL(seq, state0, osc, out);
  oe_status st = OE_OK;
  const oe_status g = guarded([&] { st = write_states(run_sequence(from_c(*state0), seq->seq, f0, from_c(*osc)), out, cap); });
  return g != OE_OK ? g : st;
}

oe_status oe_sequence_run_ensemble(const oe_sequence* seq, const oe_state* state0, double f0_mean, double f0_sigma,
                                   const oe_oscillator* osc, oe_state* out, size_t cap) {
  OE_REQUIRE_NONNULL(seq, state0, osc, out);
  oe_status st = OE_OK;
  const oe_status g = guarded([&] {
    st = write_states(run_sequence_ensemble(from_c(*state0), seq->seq, {f0_mean, f0_sigma}, from_c(*osc)), out, cap);
  });
  return g != OE_OK ? g : st;
}

oe_status oe_ensemble_run(const oe_sequence* seq, const oe_state* state0, double f0_mean, double f0_sigma,
                          const oe_oscillator* osc, const oe_mc_options* options, oe_ensemble** out) {
  OE_REQUIRE_NONNULL(seq, state0, osc, options, out);
  return guarded([&] {
    McConfig mc;
    mc.shots = options->shots;
    mc.steps_per_period = options->steps_per_period;
    mc.master_seed = options->master_seed;
    mc.threads = options->threads;
    mc.scheme = options->euler_maruyama ? Scheme::EulerMaruyama : Scheme::ExactRotation;
    auto records = run_ensemble(from_c(*state0), seq->seq, {f0_mean, f0_sigma}, from_c(*osc), mc);
    *out = new oe_ensemble{std::move(records)};
  });
}

void oe_ensemble_free(oe_ensemble* ens) { delete ens; }

oe_status oe_ensemble_shot_count(const oe_ensemble* ens, size_t* out) {
  OE_REQUIRE_NONNULL(ens, out);
  *out = ens->records.size();
  return OE_OK;
}

oe_status oe_ensemble_sample_count(const oe_ensemble* ens, size_t* out) {
  OE_REQUIRE_NONNULL(ens, out);
  *out = ens->records.empty() ? 0 : ens->records.front().samples.size();
  return OE_OK;
}

oe_status oe_ensemble_sample(const oe_ensemble* ens, size_t shot, size_t sample, oe_phase_vec* out) {
  OE_REQUIRE_NONNULL(ens, out);
  if (shot >= ens->records.size() || sample >= ens->records[shot].samples.size()) {
    return fail(OE_ERR_DOMAIN, "shot or sample index out of range");
  }
  *out = to_c(ens->records[shot].samples[sample]);
  return OE_OK;
}

oe_status oe_ensemble_force(const oe_ensemble* ens, size_t shot, double* out) {
  OE_REQUIRE_NONNULL(ens, out);
  if (shot >= ens->records.size()) return fail(OE_ERR_DOMAIN, "shot index out of range");
  *out = ens->records[shot].f0_draw;
  return OE_OK;
}

oe_status oe_ensemble_stats(const oe_ensemble* ens, size_t sample, oe_state* out) {
  OE_REQUIRE_NONNULL(ens, out);
  return guarded([&] {
    const EnsembleStats s = ensemble_stats(sample_column(ens->records, sample));
    *out = {to_c(s.mean), to_c(s.cov)};
  });
}

oe_status oe_config_load_file(const char* path, oe_config** out) {
  OE_REQUIRE_NONNULL(path, out);
  return guarded([&] { *out = new oe_config{load_config(path)}; });
}

oe_status oe_config_load_string(const char* json, oe_config** out) {
  OE_REQUIRE_NONNULL(json, out);
  return guarded([&] { *out = new oe_config{parse_config(json)}; });
}

oe_status oe_config_preset(const char* name, oe_config** out) {
  OE_REQUIRE_NONNULL(name, out);
  return guarded([&] { *out = new oe_config{preset(name)}; });
}

void oe_config_free(oe_config* cfg) { delete cfg; }

oe_status oe_config_set_seed(oe_config* cfg, uint64_t seed) {
  OE_REQUIRE_NONNULL(cfg);
  cfg->cfg.monte_carlo.master_seed = seed;
  return OE_OK;
}

oe_status oe_config_to_json(const oe_config* cfg, char* buf, size_t cap, size_t* needed) {
  OE_REQUIRE_NONNULL(cfg);
  std::string text;
  const oe_status g = guarded([&] { text = dump_config(cfg->cfg); });
  if (g != OE_OK) return g;
  if (needed) *needed = text.size() + 1;
  if (buf == nullptr || cap < text.size() + 1) {
    return fail(OE_ERR_BUFFER_TOO_SMALL, "config JSON needs " + std::to_string(text.size() + 1) + " bytes");
  }
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return OE_OK;
}

oe_status oe_run_command(const oe_config* cfg, const char* command, const char* out_dir, oe_backend backend) {
  OE_REQUIRE_NONNULL(cfg, command, out_dir);
  std::optional<Backend> b;
  if (backend == OE_BACKEND_ANALYTIC) b = Backend::Analytic;
  if (backend == OE_BACKEND_MC) b = Backend::MonteCarlo;
  const std::string_view cmd = command;
  return guarded([&] {
    if (cmd == "propagate") {
      cmd_propagate(cfg->cfg, out_dir);
    } else if (cmd == "mc") {
      cmd_mc(cfg->cfg, out_dir);
    } else if (cmd == "sweep") {
      cmd_sweep(cfg->cfg, out_dir, b);
    } else if (cmd == "fig4") {
      cmd_fig4(cfg->cfg, out_dir, b);
    } else {
      throw ConfigError("<command>", "unknown command '" + std::string(cmd) + "'");
    }
  });
}

}  // extern "C"

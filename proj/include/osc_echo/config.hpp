#pragma once

// Run configuration: a JSON document with a strict schema.
//
//   {
//     "oscillator":  {"omega_hz": 52000, "gamma_hz": 3400, "n0": 1.2},
//     "force":       {"f0_mean": 1.44e-16, "f0_sigma": 2.27e-17,
//                     "units": "normalized" | {"si": {"mass_kg": 1.2e-18}}},
//     "protocol":    {"r": 2, "r_prime": "optimal" | 1.58, "theta2": 3.14159...},
//     "monte_carlo": {"shots": 100, "steps_per_period": 200, "master_seed": 2024},
//     "sweep":       {"rprime_min": 1.5, "rprime_max": 3.2, "points": 18,
//                     "r": 3.16..., "backend": "analytic" | "mc"},
//     "sample_marks": [{"step": "i" | "ii" | "iii", "phase": 0.785...}, ...],
//     "initial_state": {"mean": [0, 0], "cov": [qq, qp, pp]}
//   }
//
// Frequencies are ordinary Hz (Omega / 2 pi, Gamma / 2 pi). Forces are in
// units of 1/s (force / p_zp) unless "units" names a particle mass, in which
// case they are newtons. "oscillator", "force" and "protocol" are required;
// "sweep.r" defaults to "protocol.r"; "initial_state" defaults to the
// thermal state with occupancy n0. Unknown keys are rejected.

#include "osc_echo/estimation.hpp"
#include "osc_echo/gaussian_core.hpp"
#include "osc_echo/monte_carlo.hpp"
#include "osc_echo/protocol.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace osc_echo {

inline constexpr std::uint64_t kDefaultSeed = 2024;

struct RunConfig {
  struct Oscillator {
    double omega_hz = 52e3;
    double gamma_hz = 3.4e3;
    double n0 = 1.2;
  } oscillator;

  struct Force {
    double f0_mean = 0.0;
    double f0_sigma = 0.0;
    std::optional<double> si_mass_kg;  ///< set: values are newtons
  } force;

  struct Protocol {
    double r = 2.0;
    std::optional<double> r_prime;  ///< unset: optimal_ratio(r)
    double theta2 = 0.0;
  } protocol;

  struct MonteCarlo {
    std::size_t shots = 100;
    std::size_t steps_per_period = 200;
    std::uint64_t master_seed = kDefaultSeed;
  } monte_carlo;

  struct Sweep {
    double rprime_min = 1.5;
    double rprime_max = 3.2;
    std::size_t points = 18;
    std::optional<double> r;  ///< unset: protocol.r
    Backend backend = Backend::Analytic;
  } sweep;

  struct Mark {
    int step = 0;  ///< 0, 1, 2 for steps i, ii, iii
    double phase = 0.0;
  };
  std::vector<Mark> sample_marks;

  std::optional<GaussianState> initial_state;

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  OscillatorConfig oscillator_config() const;
  ForceModel force_model() const;  ///< normalized units
  EchoSpec echo_spec() const;
  double sweep_r() const { return sweep.r.value_or(protocol.r); }
  /// Echo sequence with the sample marks labelled t1, t2, ...
  JumpSequence sequence() const;
  GaussianState initial() const;
  McConfig mc_config() const;
  SweepSetup sweep_setup(Backend backend) const;
};

RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string dump_config(const RunConfig& cfg);

/// Named presets: "fig4" (probe protocol at r = 2, 22.7 aN force spread) and
/// "fig4h" (same oscillator, 6.95 aN force spread). Both sweep r' at
/// r = sqrt(10).
RunConfig preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace osc_echo

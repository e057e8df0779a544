#pragma once

// Stochastic reference model: integrates the Langevin equation of the
// oscillator shot by shot, with a force that is constant within a shot and
// drawn anew for every shot. Used to check the closed-form propagation.
//
// Random streams
// --------------
// Every shot owns two independent std::mt19937_64 streams whose seeds are
//
//   seed(master, shot, stream) = splitmix64(splitmix64(master ^ splitmix64(shot)) + stream)
//
// with stream 0 for the initial-state and force draws and stream 1 for the
// white-noise kicks. A shot's record therefore depends only on
// (master_seed, shot_index) and not on which thread ran it or in what order.
//
// Noise calibration
// -----------------
// White force noise enters the momentum only. Its diffusion constant is
// dVar(P)/dt = 4 Gamma / r^2 while the trap is softened by r, which integrates
// exactly to heating_cov().

#include "osc_echo/gaussian_core.hpp"
#include "osc_echo/protocol.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace osc_echo {

using Rng = std::mt19937_64;

enum class Scheme {
  /// Per substep: half rotation about the rotation centre, momentum kick,
  /// half rotation. Exact for the deterministic motion; second order in the
  /// substep for the noise covariance.
  ExactRotation,
  /// Explicit Euler-Maruyama on the full drift. First order. Kept as an
  /// independent cross-check only.
  EulerMaruyama,
};

struct McConfig {
  std::size_t shots = 1;
  std::size_t steps_per_period = 100;  ///< substeps per 2 pi of phase, >= 100
  std::uint64_t master_seed = 0;
  Scheme scheme = Scheme::ExactRotation;
  /// Worker threads; 0 defers to OSC_ECHO_THREADS, then to the hardware.
  unsigned threads = 0;

  /// Throws ConfigError on shots == 0 or steps_per_period < 100.
  void validate() const;
};

struct ShotRecord {
  std::size_t shot_index = 0;
  double f0_draw = 0.0;
  /// One point per sample mark of the sequence, then the final point.
  std::vector<PhaseVec> samples;

  friend bool operator==(const ShotRecord&, const ShotRecord&) = default;
};

/// Draws the per-shot force. Gaussian by default.
using ForceSampler = std::function<double(const ForceModel&, Rng&)>;

double gaussian_force(const ForceModel& force, Rng& rng);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t shot_stream_seed(std::uint64_t master_seed, std::uint64_t shot_index, std::uint64_t stream);

/// Returns L with L L^T = cov. Cholesky when positive definite, otherwise a
/// symmetric square root with eigenvalues in [-1e-12, 0) clipped to zero.
Mat2 sampling_factor(const CovMat& cov);

ShotRecord integrate_shot(PhaseVec state0_draw, const JumpSequence& seq, double f0_draw,
                          const OscillatorConfig& cfg, const McConfig& mc, std::size_t shot_index);

std::vector<ShotRecord> run_ensemble(const GaussianState& state0, const JumpSequence& seq,
                                     const ForceModel& force, const OscillatorConfig& cfg, const McConfig& mc,
                                     const ForceSampler& sampler = gaussian_force);

/// The k-th sample of every shot, in shot order.
std::vector<PhaseVec> sample_column(const std::vector<ShotRecord>& records, std::size_t k);

/// Covariance produced by the discretized noise of a single segment, computed
/// exactly from the linear recursion of `scheme` (no sampling). Converges to
/// heating_cov() as steps_per_period grows.
CovMat discrete_noise_cov(double r, double theta, const OscillatorConfig& cfg, std::size_t steps_per_period,
                          Scheme scheme);

/// Resolves McConfig::threads / OSC_ECHO_THREADS to a worker count >= 1.
unsigned resolve_thread_count(unsigned requested);

}  // namespace osc_echo

#pragma once

// Multi-segment frequency-jump sequences and the three-step oscillator echo.
//
// The echo is (r', pi) -> (r, theta2) -> (r', pi). Because every transition
// matrix satisfies Phi_r(pi) = -1, the outer legs act as the identity on the
// covariance, and the choice r' = sqrt((r^2 + 1) / 2) puts the rotation
// centre of the middle leg exactly where the first leg left the mean, for
// every value of the constant force. The final mean is then independent of
// the force and shot-to-shot force noise adds no covariance.

#include "osc_echo/gaussian_core.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace osc_echo {

/// A point inside a sequence at which the state is reported.
struct SampleMark {
  std::size_t segment = 0;  ///< index into JumpSequence::segments
  double phase = 0.0;       ///< phase accumulated within that segment
  std::string label;
};

struct JumpSequence {
  std::vector<Segment> segments;
  std::vector<SampleMark> sample_marks;

  /// Checks segment invariants, that marks lie inside their segment and that
  /// marks are sorted in protocol order.
  void validate() const;

  double total_phase() const;
  double total_duration(double omega) const;
  /// Phase accumulated from the start of the sequence up to `mark`.
  double cumulative_phase(const SampleMark& mark) const;
};

struct EchoSpec {
  double r = 1.0;        ///< ratio of the middle (squeezing) leg
  double r_prime = 1.0;  ///< ratio of the two decoupling legs
  double theta2 = 0.0;   ///< phase of the middle leg

  void validate() const;
};

/// State at one reporting point of a sequence, for the mean force.
///
/// `state.cov` is the per-shot covariance. The mean is affine in the force,
/// d = d(f0_mean) + (f0 - f0_mean) * force_gain, so a force ensemble with
/// standard deviation sigma adds sigma^2 * force_gain force_gain^T.
struct SequencePoint {
  std::string label;
  double theta_cum = 0.0;
  GaussianState state;
  PhaseVec force_gain;

  CovMat ensemble_cov(double sigma_f0) const {
    return state.cov + (sigma_f0 * sigma_f0) * CovMat::outer(force_gain);
  }
};

/// sqrt((r^2 + 1) / 2).
double optimal_ratio(double r);

JumpSequence echo_sequence(const EchoSpec& spec, double omega);

/// Eleven marks t1..t11: five across the first leg (0, pi/4, ..., pi), the
/// middle and end of the squeezing leg, four across the last leg.
std::vector<SampleMark> echo_probe_marks(const EchoSpec& spec);

/// One state per sample mark followed by the final state. Chains
/// propagate_segment; an empty sequence yields {state0}.
std::vector<GaussianState> run_sequence(const GaussianState& state0, const JumpSequence& seq, double f0,
                                        const OscillatorConfig& cfg);

/// Same reporting points as run_sequence, labelled ("final" for the last),
/// with the force gain tracked alongside.
std::vector<SequencePoint> trace_sequence(const GaussianState& state0, const JumpSequence& seq, double f0,
                                          const OscillatorConfig& cfg);

/// Ensemble view of run_sequence: mean at force.f0_mean, covariance including
/// the shot-to-shot term.
std::vector<GaussianState> run_sequence_ensemble(const GaussianState& state0, const JumpSequence& seq,
                                                 const ForceModel& force, const OscillatorConfig& cfg);

/// Final mean of the echo.
PhaseVec echo_mean(PhaseVec d0, double f0, const EchoSpec& spec, double omega);

/// Derivative of echo_mean with respect to the force. Zero at r' = optimal_ratio(r).
PhaseVec echo_force_gain(const EchoSpec& spec, double omega);

/// Final covariance of the echo: coherent evolution of cov0 by the middle
/// leg, heating of all three legs and the shot-to-shot term.
CovMat echo_cov(const CovMat& cov0, const EchoSpec& spec, const OscillatorConfig& cfg, double sigma_f0);

/// sqrt(det cov); the geometric mean of the principal variances. Throws
/// InvariantError when det < -1e-12; tiny negative determinants map to 0.
double state_size(const CovMat& cov);

}  // namespace osc_echo

#include "osc_echo/protocol.hpp"

#include "osc_echo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace osc_echo {

using std::numbers::pi;

void JumpSequence::validate() const {
  for (const auto& seg : segments) seg.validate();
  for (std::size_t i = 0; i < sample_marks.size(); ++i) {
    const auto& m = sample_marks[i];
    if (m.segment >= segments.size()) {
      throw DomainError("sample mark " + std::to_string(i) + " refers to missing segment " +
                        std::to_string(m.segment));
    }
    if (!std::isfinite(m.phase) || m.phase < 0.0 || m.phase > segments[m.segment].phase) {
      throw DomainError("sample mark " + std::to_string(i) + " phase outside its segment");
    }
    if (i > 0) {
      const auto& prev = sample_marks[i - 1];
      if (m.segment < prev.segment || (m.segment == prev.segment && m.phase < prev.phase)) {
        throw DomainError("sample marks are not in protocol order at index " + std::to_string(i));
      }
    }
  }
}

double JumpSequence::total_phase() const {
  double sum = 0.0;
  for (const auto& s : segments) sum += s.phase;
  return sum;
}

double JumpSequence::total_duration(double omega) const {
  double sum = 0.0;
  for (const auto& s : segments) sum += s.duration(omega);
  return sum;
}

double JumpSequence::cumulative_phase(const SampleMark& mark) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < mark.segment && i < segments.size(); ++i) sum += segments[i].phase;
  return sum + mark.phase;
}

void EchoSpec::validate() const {
  if (!std::isfinite(r) || r < 1.0) throw DomainError("echo ratio r must be >= 1");
  if (!std::isfinite(r_prime) || r_prime < 1.0) throw DomainError("echo ratio r_prime must be >= 1");
  if (!std::isfinite(theta2) || theta2 < 0.0) throw DomainError("echo phase theta2 must be >= 0");
}

double optimal_ratio(double r) {
  if (!std::isfinite(r) || r <= 0.0) throw DomainError("frequency ratio must be finite and > 0");
  return std::sqrt((r * r + 1.0) / 2.0);
}

JumpSequence echo_sequence(const EchoSpec& spec, double omega) {
  spec.validate();
  if (!std::isfinite(omega) || omega <= 0.0) throw DomainError("omega must be finite and > 0");
  JumpSequence seq;
  seq.segments = {{spec.r_prime, pi}, {spec.r, spec.theta2}, {spec.r_prime, pi}};
  return seq;
}

std::vector<SampleMark> echo_probe_marks(const EchoSpec& spec) {
  spec.validate();
  std::vector<SampleMark> marks;
  int t = 1;
  auto add = [&](std::size_t seg, double phase) {
    marks.push_back({seg, phase, "t" + std::to_string(t++)});
  };
  for (int k = 0; k <= 4; ++k) add(0, k * pi / 4.0);
  add(1, spec.theta2 / 2.0);
  add(1, spec.theta2);
  for (int k = 1; k <= 4; ++k) add(2, k * pi / 4.0);
  return marks;
}

namespace {

struct Tracked {
  GaussianState state;
  PhaseVec gain;
};

Tracked advance(const Tracked& in, const Segment& seg, double f0, const OscillatorConfig& cfg) {
  Tracked out;
  out.state = propagate_segment(in.state, seg, f0, cfg);
  out.gain = PhaseVec::from(transition_matrix(seg.ratio, seg.phase) * in.gain.vec()) +
             displacement(1.0, seg.ratio, seg.phase, cfg.omega);
  return out;
}

}  // namespace

std::vector<SequencePoint> trace_sequence(const GaussianState& state0, const JumpSequence& seq, double f0,
                                          const OscillatorConfig& cfg) {
  seq.validate();
  cfg.validate();
  if (!std::isfinite(f0)) throw DomainError("f0 must be finite");

  std::vector<SequencePoint> out;
  out.reserve(seq.sample_marks.size() + 1);
  Tracked at_start{state0, {}};
  double phase_before = 0.0;
  std::size_t next_mark = 0;
  for (std::size_t i = 0; i < seq.segments.size(); ++i) {
    const Segment& seg = seq.segments[i];
    // Each mark is evaluated from the start of its segment in one step.
    for (; next_mark < seq.sample_marks.size() && seq.sample_marks[next_mark].segment == i; ++next_mark) {
      const auto& mark = seq.sample_marks[next_mark];
      const Tracked t = advance(at_start, {seg.ratio, mark.phase}, f0, cfg);
      out.push_back({mark.label, phase_before + mark.phase, t.state, t.gain});
    }
    at_start = advance(at_start, seg, f0, cfg);
    phase_before += seg.phase;
  }
  out.push_back({"final", phase_before, at_start.state, at_start.gain});
  return out;
}

std::vector<GaussianState> run_sequence(const GaussianState& state0, const JumpSequence& seq, double f0,
                                        const OscillatorConfig& cfg) {
  std::vector<GaussianState> out;
  for (auto& pt : trace_sequence(state0, seq, f0, cfg)) out.push_back(pt.state);
  return out;
}

std::vector<GaussianState> run_sequence_ensemble(const GaussianState& state0, const JumpSequence& seq,
                                                 const ForceModel& force, const OscillatorConfig& cfg) {
  force.validate();
  std::vector<GaussianState> out;
  for (auto& pt : trace_sequence(state0, seq, force.f0_mean, cfg)) {
    out.push_back({pt.state.mean, pt.ensemble_cov(force.f0_sigma)});
  }
  return out;
}

PhaseVec echo_force_gain(const EchoSpec& spec, double omega) {
  spec.validate();
  const Mat2 phi = transition_matrix(spec.r, spec.theta2);
  const PhaseVec outer = displacement(1.0, spec.r_prime, pi, omega);
  const PhaseVec middle = displacement(1.0, spec.r, spec.theta2, omega);
  return outer - PhaseVec::from(phi * outer.vec()) - middle;
}

PhaseVec echo_mean(PhaseVec d0, double f0, const EchoSpec& spec, double omega) {
  if (!std::isfinite(f0)) throw DomainError("f0 must be finite");
  const PhaseVec gain = echo_force_gain(spec, omega);
  const Mat2 phi = transition_matrix(spec.r, spec.theta2);
  return PhaseVec::from(phi * d0.vec()) + f0 * gain;
}

CovMat echo_cov(const CovMat& cov0, const EchoSpec& spec, const OscillatorConfig& cfg, double sigma_f0) {
  spec.validate();
  cfg.validate();
  if (!std::isfinite(sigma_f0) || sigma_f0 < 0.0) throw DomainError("sigma_f0 must be finite and >= 0");
  const Mat2 phi = transition_matrix(spec.r, spec.theta2);
  const CovMat outer_heat = heating_cov(spec.r_prime, pi, cfg.gamma, cfg.omega);
  const CovMat middle_heat = heating_cov(spec.r, spec.theta2, cfg.gamma, cfg.omega);
  const CovMat coherent = CovMat::from(phi * cov0.mat() * phi.transpose());
  const CovMat first_leg_heat = CovMat::from(phi * outer_heat.mat() * phi.transpose());
  const PhaseVec gain = echo_force_gain(spec, cfg.omega);
  return coherent + first_leg_heat + middle_heat + outer_heat +
         (sigma_f0 * sigma_f0) * CovMat::outer(gain);
}

double state_size(const CovMat& cov) {
  const double det = cov.det();
  if (!std::isfinite(det) || det < -1e-12) {
    throw InvariantError("covariance is not positive semidefinite (det = " + std::to_string(det) + ")");
  }
  return std::sqrt(std::max(det, 0.0));
}

}  // namespace osc_echo

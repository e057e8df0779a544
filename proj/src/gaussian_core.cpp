#include "osc_echo/gaussian_core.hpp"

#include "osc_echo/errors.hpp"

#include <cmath>
#include <string>

namespace osc_echo {

namespace {

void require_ratio(double r) {
  if (!std::isfinite(r) || r <= 0.0) {
    throw DomainError("frequency ratio must be finite and > 0, got " + std::to_string(r));
  }
}

void require_omega(double omega) {
  if (!std::isfinite(omega) || omega <= 0.0) {
    throw DomainError("omega must be finite and > 0, got " + std::to_string(omega));
  }
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

}  // namespace

double PhaseVec::norm() const { return std::hypot(q, p); }

CovMat CovMat::from(const Mat2& m) { return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1)}; }

Mat2 CovMat::mat() const {
  Mat2 m;
  m << qq, qp, qp, pp;
  return m;
}

bool CovMat::is_psd(double eps) const {
  if (!std::isfinite(qq) || !std::isfinite(qp) || !std::isfinite(pp)) return false;
  return qq >= -eps && pp >= -eps && det() >= -eps;
}

void OscillatorConfig::validate() const {
  require_omega(omega);
  if (!std::isfinite(gamma) || gamma < 0.0) throw DomainError("gamma must be finite and >= 0");
  if (!std::isfinite(n0) || n0 < 0.0) throw DomainError("n0 must be finite and >= 0");
}

void Segment::validate() const {
  require_ratio(ratio);
  if (!std::isfinite(phase) || phase < 0.0) throw DomainError("segment phase must be finite and >= 0");
}

void ForceModel::validate() const {
  require_finite(f0_mean, "f0_mean");
  if (!std::isfinite(f0_sigma) || f0_sigma < 0.0) throw DomainError("f0_sigma must be finite and >= 0");
}

Mat2 transition_matrix(double r, double theta) {
  require_ratio(r);
  require_finite(theta, "phase");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat2 m;
  m << c, r * s, -s / r, c;
  return m;
}

SqueezeDecomposition squeeze_decomposition(double r, double theta) {
  require_ratio(r);
  require_finite(theta, "phase");
  const double k = std::sqrt(r);
  SqueezeDecomposition out;
  out.squeeze << k, 0.0, 0.0, 1.0 / k;
  out.unsqueeze << 1.0 / k, 0.0, 0.0, k;
  out.rotation = transition_matrix(1.0, theta);
  return out;
}

PhaseVec displacement(double f0, double r, double theta, double omega) {
  require_ratio(r);
  require_omega(omega);
  require_finite(f0, "f0");
  require_finite(theta, "phase");
  const double scale = (f0 / omega) * (r * r - 1.0) / r;
  return {scale * r * (1.0 - std::cos(theta)), scale * std::sin(theta)};
}

PhaseVec rotation_center(double f0, double r, double omega) {
  require_ratio(r);
  require_omega(omega);
  require_finite(f0, "f0");
  return {(f0 / omega) * (r * r - 1.0), 0.0};
}

CovMat heating_cov(double r, double theta, double gamma, double omega) {
  require_ratio(r);
  require_omega(omega);
  if (!std::isfinite(gamma) || gamma < 0.0) throw DomainError("gamma must be finite and >= 0");
  require_finite(theta, "phase");
  const double g = gamma / omega;
  const double half_s2 = 0.5 * std::sin(2.0 * theta);
  return {2.0 * r * g * (theta - half_s2), g * (1.0 - std::cos(2.0 * theta)),
          2.0 * g / r * (theta + half_s2)};
}

CovMat shot_cov(double sigma_f0, double r, double theta, double omega) {
  if (!std::isfinite(sigma_f0) || sigma_f0 < 0.0) throw DomainError("sigma_f0 must be finite and >= 0");
  // sigma^2 u u^T with u the unit-force displacement
  const PhaseVec u = displacement(1.0, r, theta, omega);
  return (sigma_f0 * sigma_f0) * CovMat::outer(u);
}

GaussianState propagate_segment(const GaussianState& state, const Segment& seg, double f0,
                                const OscillatorConfig& cfg) {
  seg.validate();
  cfg.validate();
  const Mat2 phi = transition_matrix(seg.ratio, seg.phase);
  GaussianState out;
  out.mean = PhaseVec::from(phi * state.mean.vec()) + displacement(f0, seg.ratio, seg.phase, cfg.omega);
  out.cov = CovMat::from(phi * state.cov.mat() * phi.transpose()) +
            heating_cov(seg.ratio, seg.phase, cfg.gamma, cfg.omega);
  return out;
}

double momentum_zero_point(double mass_kg, double omega) {
  if (!std::isfinite(mass_kg) || mass_kg <= 0.0) throw DomainError("mass must be finite and > 0");
  require_omega(omega);
  return std::sqrt(kHbar * mass_kg * omega / 2.0);
}

double normalized_force(double force_si, double mass_kg, double omega) {
  require_finite(force_si, "force");
  return force_si / momentum_zero_point(mass_kg, omega);
}

}  // namespace osc_echo

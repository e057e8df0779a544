#pragma once

// Closed-form propagation of Gaussian states of a harmonic oscillator through
// a single frequency-jump segment.
//
// Units: phase-space coordinates are normalized by the zero-point values
//   z_zp = sqrt(hbar / (2 m Omega)),   p_zp = sqrt(hbar m Omega / 2),
// so the vacuum covariance is the identity and a thermal state with mean
// occupancy n has covariance (2n + 1) * 1. Forces are divided by p_zp and
// therefore carry units of 1/s. Omega is always the unsoftened trap
// frequency; a segment with ratio r evolves at Omega / r.
//
// Positions are measured from the minimum of the unsoftened potential in the
// presence of the mean force, so a constant force only acts through the
// (r^2 - 1) shift of the potential minimum when the trap is softened.

#include <Eigen/Core>

#include <array>

namespace osc_echo {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

struct PhaseVec {
  double q = 0.0;
  double p = 0.0;

  Vec2 vec() const { return {q, p}; }
  static PhaseVec from(const Vec2& v) { return {v(0), v(1)}; }
  double norm() const;

  friend PhaseVec operator+(PhaseVec a, PhaseVec b) { return {a.q + b.q, a.p + b.p}; }
  friend PhaseVec operator-(PhaseVec a, PhaseVec b) { return {a.q - b.q, a.p - b.p}; }
  friend PhaseVec operator*(double s, PhaseVec a) { return {s * a.q, s * a.p}; }
  friend bool operator==(const PhaseVec&, const PhaseVec&) = default;
};

/// Symmetric 2x2 covariance stored as its three independent entries.
struct CovMat {
  double qq = 0.0;
  double qp = 0.0;
  double pp = 0.0;

  static CovMat identity() { return {1.0, 0.0, 1.0}; }
  static CovMat diag(double qq, double pp) { return {qq, 0.0, pp}; }
  static CovMat thermal(double n) { return diag(2.0 * n + 1.0, 2.0 * n + 1.0); }
  /// Symmetrizes `m` before storing.
  static CovMat from(const Mat2& m);
  static CovMat outer(PhaseVec u) { return {u.q * u.q, u.q * u.p, u.p * u.p}; }

  Mat2 mat() const;
  double det() const { return qq * pp - qp * qp; }
  double trace() const { return qq + pp; }

  /// qq >= 0, pp >= 0, det >= -eps, all finite.
  bool is_psd(double eps = 1e-12) const;

  friend CovMat operator+(CovMat a, CovMat b) { return {a.qq + b.qq, a.qp + b.qp, a.pp + b.pp}; }
  friend CovMat operator-(CovMat a, CovMat b) { return {a.qq - b.qq, a.qp - b.qp, a.pp - b.pp}; }
  friend CovMat operator*(double s, CovMat a) { return {s * a.qq, s * a.qp, s * a.pp}; }
  friend bool operator==(const CovMat&, const CovMat&) = default;
};

struct GaussianState {
  PhaseVec mean;
  CovMat cov = CovMat::identity();

  static GaussianState thermal(double n) { return {{}, CovMat::thermal(n)}; }
};

struct OscillatorConfig {
  double omega = 1.0;  ///< unsoftened angular frequency, rad/s
  double gamma = 0.0;  ///< phonon heating rate at the unsoftened frequency, 1/s
  double n0 = 0.0;     ///< initial mean occupancy

  /// Throws DomainError unless omega > 0, gamma >= 0, n0 >= 0 (all finite).
  void validate() const;
};

/// One leg of a frequency-jump sequence: evolve at Omega / ratio until the
/// oscillator has accumulated `phase` radians.
struct Segment {
  double ratio = 1.0;
  double phase = 0.0;

  double duration(double omega) const { return ratio * phase / omega; }
  void validate() const;
};

/// Per-shot constant force statistics, normalized by p_zp (units 1/s).
struct ForceModel {
  double f0_mean = 0.0;
  double f0_sigma = 0.0;

  void validate() const;
};

struct SqueezeDecomposition {
  Mat2 squeeze;      ///< S(sqrt r) = diag(sqrt r, 1/sqrt r)
  Mat2 rotation;     ///< circular rotation by theta
  Mat2 unsqueeze;    ///< S^-1(sqrt r)

  Mat2 product() const { return squeeze * rotation * unsqueeze; }
};

/// State-transition matrix of a segment with ratio r after phase theta:
/// [[cos, r sin], [-sin / r, cos]]. Symplectic (unit determinant).
Mat2 transition_matrix(double r, double theta);

SqueezeDecomposition squeeze_decomposition(double r, double theta);

/// Mean displacement accumulated from the origin by a constant force f0
/// after phase theta at ratio r.
PhaseVec displacement(double f0, double r, double theta, double omega);

/// Point about which the mean orbits while the trap is softened by r.
/// displacement(...) == (1 - transition_matrix(r, theta)) * rotation_center(...).
PhaseVec rotation_center(double f0, double r, double omega);

/// Covariance added by white force noise at heating rate gamma over phase
/// theta. Not periodic in theta: callers pass the total accumulated phase.
CovMat heating_cov(double r, double theta, double gamma, double omega);

/// Ensemble covariance added by a shot-to-shot constant force with standard
/// deviation sigma_f0. Rank one; vanishes at every full period.
CovMat shot_cov(double sigma_f0, double r, double theta, double omega);

GaussianState propagate_segment(const GaussianState& state, const Segment& seg, double f0,
                                const OscillatorConfig& cfg);

/// hbar in J s (CODATA 2018, exact).
inline constexpr double kHbar = 1.054571817e-34;

/// Force in newtons divided by p_zp = sqrt(hbar m Omega / 2).
double normalized_force(double force_si, double mass_kg, double omega);

/// p_zp in kg m / s.
double momentum_zero_point(double mass_kg, double omega);

}  // namespace osc_echo

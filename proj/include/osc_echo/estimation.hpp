#pragma once

// Point-cloud statistics, r' sweeps of the echo and the least-squares fits
// that recover the force statistics from them.

#include "osc_echo/gaussian_core.hpp"
#include "osc_echo/monte_carlo.hpp"
#include "osc_echo/protocol.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace osc_echo {

struct EnsembleStats {
  std::size_t n = 0;
  PhaseVec mean;
  CovMat cov;  ///< unbiased, divisor n - 1
};

/// Standard errors of the entries of an EnsembleStats.
struct StatErrors {
  PhaseVec mean;
  CovMat cov;
};

/// A fitted scalar with its standard error.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// Throws InsufficientDataError for fewer than two points.
EnsembleStats ensemble_stats(std::span<const PhaseVec> points);

/// Large-sample standard errors from the fourth central moments:
/// Var(s_ij) ~ (E[dx_i^2 dx_j^2] - s_ij^2) / n.
StatErrors moment_standard_errors(std::span<const PhaseVec> points);

/// Nonparametric bootstrap standard errors over `resamples` resamples.
StatErrors bootstrap_standard_errors(std::span<const PhaseVec> points, std::size_t resamples,
                                     std::uint64_t seed);

struct PhaseStats {
  double theta = 0.0;  ///< phase accumulated in the segment at ratio r
  EnsembleStats stats;
};

/// Fits the shot-to-shot force deviation from how the cloud covariance grows
/// along one segment at ratio r. One entry must sit at theta = 0 and serves
/// as the reference covariance; every other entry is modelled as the
/// reference propagated by the segment plus heating plus sigma^2 times the
/// unit shot covariance. Linear in sigma^2, solved by weighted least squares
/// with Wishart weights (n - 1) / (S_ij^2 + S_ii S_jj). The error adds the
/// scatter of the sample force variance, 2 sigma^4 / (n - 1), to the fit error.
Estimate fit_sigma_from_growth(std::span<const PhaseStats> stats_by_phase, double r,
                               const OscillatorConfig& cfg);

struct SweepRow {
  double r_prime = 0.0;
  double d_norm = 0.0;  ///< |final mean| in zero-point units
  double v_tot = 0.0;   ///< state_size of the final covariance
};

enum class Backend { Analytic, MonteCarlo };

struct SweepSetup {
  double r = 1.0;
  double theta2 = 0.0;
  std::vector<double> rprime_grid;
  ForceModel force;
  OscillatorConfig cfg;
  GaussianState state0;
  Backend backend = Backend::Analytic;
  /// Monte Carlo backend only. Grid point i runs with master seed
  /// shot_stream_seed(mc.master_seed, i, kSweepStream).
  McConfig mc;
};

inline constexpr std::uint64_t kSweepStream = 0x5eed;

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<Estimate> fit_f0;
  std::optional<Estimate> fit_sigma_f0;
};

/// `points` evenly spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

/// Echo with decoupling ratio swept over the grid (>= 3 strictly increasing
/// points, each >= 1); one row per grid point at the end of the protocol.
SweepResult sweep_rprime(const SweepSetup& setup);

/// |final mean| of an echo started at the origin: |f0| * |echo_force_gain|.
double displacement_model(double r_prime, double f0, double r, double theta2, double omega);

/// state_size(echo_cov(...)) at decoupling ratio r_prime.
double vtot_model(double r_prime, double sigma_f0, double r, double theta2, const OscillatorConfig& cfg,
                  const CovMat& cov0);

/// Least-squares |f0| from |d|(r'). The sign of f0 is not identifiable from
/// |d|, so the magnitude is returned.
Estimate fit_f0_from_displacement(std::span<const SweepRow> rows, double r, double theta2,
                                  const OscillatorConfig& cfg);

struct VtotFitOptions {
  /// Upper end of the sigma^2 search; <= 0 means (1000 omega)^2.
  double sigma2_upper = 0.0;
  /// Log-spaced scan over 16 decades below the upper end, plus sigma^2 = 0.
  std::size_t scan_points = 321;
};

/// sigma_f0 from v_tot(r') by a bracketing scan over sigma^2 followed by
/// golden-section refinement. The error comes from the curvature of the
/// squared residual at the optimum.
Estimate fit_sigma_from_vtot(std::span<const SweepRow> rows, double r, double theta2,
                             const OscillatorConfig& cfg, const CovMat& cov0, const VtotFitOptions& options = {});

}  // namespace osc_echo

#include "osc_echo/estimation.hpp"

#include "osc_echo/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace osc_echo {

EnsembleStats ensemble_stats(std::span<const PhaseVec> points) {
  if (points.size() < 2) {
    throw InsufficientDataError("ensemble statistics need at least 2 points, got " +
                                std::to_string(points.size()));
  }
  const double n = static_cast<double>(points.size());
  double mq = 0.0, mp = 0.0;
  for (const auto& x : points) {
    mq += x.q;
    mp += x.p;
  }
  mq /= n;
  mp /= n;
  double sqq = 0.0, sqp = 0.0, spp = 0.0;
  for (const auto& x : points) {
    const double dq = x.q - mq;
    const double dp = x.p - mp;
    sqq += dq * dq;
    sqp += dq * dp;
    spp += dp * dp;
  }
  return {points.size(), {mq, mp}, {sqq / (n - 1.0), sqp / (n - 1.0), spp / (n - 1.0)}};
}

StatErrors moment_standard_errors(std::span<const PhaseVec> points) {
  const EnsembleStats s = ensemble_stats(points);
  const double n = static_cast<double>(s.n);
  double m4qq = 0.0, m4qp = 0.0, m4pp = 0.0;
  for (const auto& x : points) {
    const double dq2 = (x.q - s.mean.q) * (x.q - s.mean.q);
    const double dp2 = (x.p - s.mean.p) * (x.p - s.mean.p);
    m4qq += dq2 * dq2;
    m4qp += dq2 * dp2;
    m4pp += dp2 * dp2;
  }
  m4qq /= n;
  m4qp /= n;
  m4pp /= n;
  auto se = [n](double m4, double s2) { return std::sqrt(std::max(m4 - s2 * s2, 0.0) / n); };
  StatErrors out;
  out.mean = {std::sqrt(s.cov.qq / n), std::sqrt(s.cov.pp / n)};
  out.cov = {se(m4qq, s.cov.qq), se(m4qp, s.cov.qp), se(m4pp, s.cov.pp)};
  return out;
}

StatErrors bootstrap_standard_errors(std::span<const PhaseVec> points, std::size_t resamples,
                                     std::uint64_t seed) {
  if (points.size() < 2) throw InsufficientDataError("bootstrap needs at least 2 points");
  if (resamples < 2) throw DomainError("bootstrap needs at least 2 resamples");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  std::vector<PhaseVec> buffer(points.size());

  // Running sums of each statistic and of its square.
  std::array<double, 5> sum{}, sum2{};
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& x : buffer) x = points[pick(rng)];
    const EnsembleStats s = ensemble_stats(buffer);
    const std::array<double, 5> v{s.mean.q, s.mean.p, s.cov.qq, s.cov.qp, s.cov.pp};
    for (std::size_t i = 0; i < 5; ++i) {
      sum[i] += v[i];
      sum2[i] += v[i] * v[i];
    }
  }
  const double B = static_cast<double>(resamples);
  std::array<double, 5> sd{};
  for (std::size_t i = 0; i < 5; ++i) {
    const double mean = sum[i] / B;
    sd[i] = std::sqrt(std::max(sum2[i] / B - mean * mean, 0.0) * B / (B - 1.0));
  }
  return {{sd[0], sd[1]}, {sd[2], sd[3], sd[4]}};
}

Estimate fit_sigma_from_growth(std::span<const PhaseStats> stats_by_phase, double r,
                               const OscillatorConfig& cfg) {
  cfg.validate();
  if (stats_by_phase.size() < 2) throw InsufficientDataError("growth fit needs at least 2 phases");
  const auto ref = std::find_if(stats_by_phase.begin(), stats_by_phase.end(),
                                [](const PhaseStats& s) { return std::abs(s.theta) < 1e-12; });
  if (ref == stats_by_phase.end()) throw InsufficientDataError("growth fit needs a reference at theta = 0");
  const Mat2 cov0 = ref->stats.cov.mat();

  struct Element {
    double residual;  // observed minus sigma-independent part
    double shape;     // unit shot covariance
    double weight;
  };
  std::vector<Element> elements;
  std::size_t min_n = ref->stats.n;
  for (const auto& ps : stats_by_phase) {
    min_n = std::min(min_n, ps.stats.n);
    if (&ps == &*ref) continue;
    if (ps.stats.n < 2) throw InsufficientDataError("phase statistics with fewer than 2 samples");
    const Mat2 phi = transition_matrix(r, ps.theta);
    const CovMat base = CovMat::from(phi * cov0 * phi.transpose()) + heating_cov(r, ps.theta, cfg.gamma, cfg.omega);
    const CovMat shape = shot_cov(1.0, r, ps.theta, cfg.omega);
    const CovMat& obs = ps.stats.cov;
    const double dof = static_cast<double>(ps.stats.n - 1);
    auto weight = [dof](double sij, double sii, double sjj) {
      const double var = (sij * sij + sii * sjj) / dof;
      return var > 0.0 ? 1.0 / var : 0.0;
    };
    elements.push_back({obs.qq - base.qq, shape.qq, weight(obs.qq, obs.qq, obs.qq)});
    elements.push_back({obs.qp - base.qp, shape.qp, weight(obs.qp, obs.qq, obs.pp)});
    elements.push_back({obs.pp - base.pp, shape.pp, weight(obs.pp, obs.pp, obs.pp)});
  }

  double sww = 0.0, swy = 0.0, shape_scale = 0.0;
  for (const auto& e : elements) {
    sww += e.weight * e.shape * e.shape;
    swy += e.weight * e.shape * e.residual;
    shape_scale = std::max(shape_scale, std::abs(e.shape));
  }
  // unit shot covariance is O(r^4 / omega^2); anything far below is zero
  const double natural = std::pow(std::max(r * r, 1.0), 2) / (cfg.omega * cfg.omega);
  if (shape_scale <= 1e-20 * natural || sww <= 0.0) {
    throw UnidentifiableError("shot covariance shape vanishes at every phase (multiples of 2 pi?)");
  }
  const double s2 = swy / sww;
  double chi2 = 0.0;
  for (const auto& e : elements) {
    const double res = e.residual - s2 * e.shape;
    chi2 += e.weight * res * res;
  }
  const double dof = static_cast<double>(elements.size()) - 1.0;
  const double fit_var = dof > 0.0 ? chi2 / dof / sww : 1.0 / sww;
  // The clouds share one finite set of force draws, whose sample variance
  // scatters around sigma^2 with variance 2 sigma^4 / (n - 1).
  const double draws = static_cast<double>(min_n - 1);
  const double s2_err = std::sqrt(fit_var + 2.0 * std::max(s2, 0.0) * std::max(s2, 0.0) / draws);

  if (s2 <= 0.0) return {0.0, std::sqrt(s2_err)};
  const double sigma = std::sqrt(s2);
  return {sigma, s2_err / (2.0 * sigma)};
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points < 2) throw DomainError("grid needs at least 2 points");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) throw DomainError("grid needs lo < hi");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  g.back() = hi;
  return g;
}

double displacement_model(double r_prime, double f0, double r, double theta2, double omega) {
  return std::abs(f0) * echo_force_gain({r, r_prime, theta2}, omega).norm();
}

double vtot_model(double r_prime, double sigma_f0, double r, double theta2, const OscillatorConfig& cfg,
                  const CovMat& cov0) {
  return state_size(echo_cov(cov0, {r, r_prime, theta2}, cfg, sigma_f0));
}

SweepResult sweep_rprime(const SweepSetup& setup) {
  const auto& grid = setup.rprime_grid;
  if (grid.size() < 3) throw DomainError("r' sweep needs at least 3 grid points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EchoSpec{setup.r, grid[i], setup.theta2}.validate();
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("r' grid must be strictly increasing");
  }
  setup.cfg.validate();
  setup.force.validate();

  SweepResult out;
  out.rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const EchoSpec spec{setup.r, grid[i], setup.theta2};
    SweepRow row{grid[i], 0.0, 0.0};
    if (setup.backend == Backend::Analytic) {
      row.d_norm = echo_mean(setup.state0.mean, setup.force.f0_mean, spec, setup.cfg.omega).norm();
      row.v_tot = state_size(echo_cov(setup.state0.cov, spec, setup.cfg, setup.force.f0_sigma));
    } else {
      McConfig mc = setup.mc;
      mc.master_seed = shot_stream_seed(setup.mc.master_seed, i, kSweepStream);
      const auto records = run_ensemble(setup.state0, echo_sequence(spec, setup.cfg.omega), setup.force,
                                        setup.cfg, mc);
      const auto finals = sample_column(records, 0);
      const EnsembleStats s = ensemble_stats(finals);
      row.d_norm = s.mean.norm();
      row.v_tot = state_size(s.cov);
    }
    out.rows.push_back(row);
  }
  return out;
}

Estimate fit_f0_from_displacement(std::span<const SweepRow> rows, double r, double theta2,
                                  const OscillatorConfig& cfg) {
  cfg.validate();
  if (rows.empty()) throw InsufficientDataError("displacement fit needs at least one row");
  double sgg = 0.0, sgd = 0.0, gmax = 0.0;
  std::vector<double> gains;
  gains.reserve(rows.size());
  for (const auto& row : rows) {
    const double g = echo_force_gain({r, row.r_prime, theta2}, cfg.omega).norm();
    gains.push_back(g);
    sgg += g * g;
    sgd += g * row.d_norm;
    gmax = std::max(gmax, g);
  }
  // The gain is O(r^2 / omega) away from the optimal ratio.
  if (gmax * cfg.omega <= 1e-9 * std::max(r * r, 1.0)) {
    throw UnidentifiableError("force gain vanishes on every grid point (grid at the optimal ratio only?)");
  }
  if (rows.size() < 2) throw InsufficientDataError("displacement fit needs at least 2 rows for an error");
  const double f0 = sgd / sgg;
  double rss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double res = rows[i].d_norm - f0 * gains[i];
    rss += res * res;
  }
  const double dof = static_cast<double>(rows.size() - 1);
  return {f0, std::sqrt(rss / dof / sgg)};
}

namespace {

// Pieces of v_tot(r') = sqrt(det(base + s * shape)), s = sigma^2.
struct VtotTerm {
  double observed;
  CovMat base;
  CovMat shape;

  double model(double s) const { return std::sqrt(std::max((base + s * shape).det(), 0.0)); }
  double slope(double s) const {
    const CovMat c = base + s * shape;
    const double v = model(s);
    if (v <= 0.0) return 0.0;
    const double ddet = shape.qq * c.pp + shape.pp * c.qq - 2.0 * shape.qp * c.qp;
    return ddet / (2.0 * v);
  }
};

double golden_section_min(const auto& f, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 400 && (b - a) > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(c); ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace

Estimate fit_sigma_from_vtot(std::span<const SweepRow> rows, double r, double theta2,
                             const OscillatorConfig& cfg, const CovMat& cov0, const VtotFitOptions& options) {
  cfg.validate();
  if (rows.size() < 2) throw InsufficientDataError("v_tot fit needs at least 2 rows");
  if (options.scan_points < 3) throw DomainError("v_tot fit scan needs at least 3 points");
  std::vector<VtotTerm> terms;
  terms.reserve(rows.size());
  for (const auto& row : rows) {
    const EchoSpec spec{r, row.r_prime, theta2};
    terms.push_back({row.v_tot, echo_cov(cov0, spec, cfg, 0.0),
                     CovMat::outer(echo_force_gain(spec, cfg.omega))});
  }
  auto ssr = [&](double s) {
    double sum = 0.0;
    for (const auto& t : terms) {
      const double res = t.observed - t.model(s);
      sum += res * res;
    }
    return sum;
  };

  const double upper = options.sigma2_upper > 0.0 ? options.sigma2_upper : 1e6 * cfg.omega * cfg.omega;
  // Scan s = 0 plus a log grid spanning 16 decades below the upper bound.
  std::vector<double> scan{0.0};
  const std::size_t k = options.scan_points - 1;
  for (std::size_t i = 0; i < k; ++i) {
    scan.push_back(upper * std::pow(10.0, -16.0 * (1.0 - static_cast<double>(i) / static_cast<double>(k - 1))));
  }
  std::size_t best = 0;
  double best_val = ssr(scan[0]);
  for (std::size_t i = 1; i < scan.size(); ++i) {
    const double v = ssr(scan[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == scan.size() - 1) {
    throw FitFailureError("no minimum of the v_tot residual below sigma^2 = " + std::to_string(upper) +
                          " (residual " + std::to_string(best_val) + " at the bound)");
  }
  const double lo = best == 0 ? 0.0 : scan[best - 1];
  double s = golden_section_min(ssr, lo, scan[best + 1]);
  if (ssr(0.0) <= ssr(s)) s = 0.0;

  const double rss = ssr(s);
  double jj = 0.0;
  for (const auto& t : terms) jj += t.slope(s) * t.slope(s);
  const double dof = static_cast<double>(rows.size() - 1);
  const double s_err = jj > 0.0 ? std::sqrt(rss / dof / jj) : std::numeric_limits<double>::infinity();
  if (s == 0.0) return {0.0, std::sqrt(s_err)};
  const double sigma = std::sqrt(s);
  return {sigma, s_err / (2.0 * sigma)};
}

}  // namespace osc_echo

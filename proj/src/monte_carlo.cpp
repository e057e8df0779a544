#include "osc_echo/monte_carlo.hpp"

#include "osc_echo/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <string>
#include <thread>

namespace osc_echo {

using std::numbers::pi;

void McConfig::validate() const {
  if (shots == 0) throw ConfigError("monte_carlo.shots", "must be >= 1");
  if (steps_per_period < 100) {
    throw ConfigError("monte_carlo.steps_per_period",
                      "must be >= 100, got " + std::to_string(steps_per_period));
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t shot_stream_seed(std::uint64_t master_seed, std::uint64_t shot_index, std::uint64_t stream) {
  return splitmix64(splitmix64(master_seed ^ splitmix64(shot_index)) + stream);
}

double gaussian_force(const ForceModel& force, Rng& rng) {
  if (force.f0_sigma == 0.0) return force.f0_mean;
  std::normal_distribution<double> normal(force.f0_mean, force.f0_sigma);
  return normal(rng);
}

Mat2 sampling_factor(const CovMat& cov) {
  const Mat2 m = cov.mat();
  Eigen::LLT<Mat2> llt(m);
  if (llt.info() == Eigen::Success && cov.det() > 0.0) return llt.matrixL();

  Eigen::SelfAdjointEigenSolver<Mat2> eig(m);
  Vec2 values = eig.eigenvalues();
  for (int i = 0; i < 2; ++i) {
    if (values(i) < -1e-12) throw InvariantError("covariance has a negative eigenvalue");
    values(i) = std::sqrt(std::max(values(i), 0.0));
  }
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

std::size_t substeps(double phase, std::size_t steps_per_period) {
  const double n = std::ceil(static_cast<double>(steps_per_period) * phase / (2.0 * pi) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

Mat2 drift(double r, double omega) {
  Mat2 a;
  a << 0.0, omega, -omega / (r * r), 0.0;
  return a;
}

// Advances x by `phase` at ratio r about `center`.
struct SegmentStepper {
  double r;
  Vec2 center;
  const OscillatorConfig& cfg;
  Scheme scheme;
  std::size_t steps_per_period;

  void run(Vec2& x, double phase, Rng& rng) const {
    if (phase <= 0.0) return;
    const std::size_t n = substeps(phase, steps_per_period);
    const double h = phase / static_cast<double>(n);
    const double dt = h * r / cfg.omega;
    const double kick_sd = std::sqrt(4.0 * cfg.gamma / (r * r) * dt);
    std::normal_distribution<double> normal(0.0, 1.0);

    if (scheme == Scheme::ExactRotation) {
      const Mat2 half = transition_matrix(r, 0.5 * h);
      for (std::size_t k = 0; k < n; ++k) {
        x = center + half * (x - center);
        if (kick_sd > 0.0) x(1) += kick_sd * normal(rng);
        x = center + half * (x - center);
      }
    } else {
      const Mat2 step = dt * drift(r, cfg.omega);
      for (std::size_t k = 0; k < n; ++k) {
        x += step * (x - center);
        if (kick_sd > 0.0) x(1) += kick_sd * normal(rng);
      }
    }
  }
};

}  // namespace

ShotRecord integrate_shot(PhaseVec state0_draw, const JumpSequence& seq, double f0_draw,
                          const OscillatorConfig& cfg, const McConfig& mc, std::size_t shot_index) {
  mc.validate();
  cfg.validate();
  seq.validate();
  if (!std::isfinite(f0_draw)) throw DomainError("f0 draw must be finite");

  Rng rng(shot_stream_seed(mc.master_seed, shot_index, 1));
  ShotRecord rec;
  rec.shot_index = shot_index;
  rec.f0_draw = f0_draw;
  rec.samples.reserve(seq.sample_marks.size() + 1);

  Vec2 x = state0_draw.vec();
  std::size_t next_mark = 0;
  for (std::size_t i = 0; i < seq.segments.size(); ++i) {
    const Segment& seg = seq.segments[i];
    const SegmentStepper stepper{seg.ratio, rotation_center(f0_draw, seg.ratio, cfg.omega).vec(), cfg,
                                 mc.scheme, mc.steps_per_period};
    double done = 0.0;
    for (; next_mark < seq.sample_marks.size() && seq.sample_marks[next_mark].segment == i; ++next_mark) {
      const double stop = seq.sample_marks[next_mark].phase;
      stepper.run(x, stop - done, rng);
      done = stop;
      rec.samples.push_back(PhaseVec::from(x));
    }
    stepper.run(x, seg.phase - done, rng);
  }
  rec.samples.push_back(PhaseVec::from(x));
  return rec;
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OSC_ECHO_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min(v, 1024UL));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<ShotRecord> run_ensemble(const GaussianState& state0, const JumpSequence& seq,
                                     const ForceModel& force, const OscillatorConfig& cfg, const McConfig& mc,
                                     const ForceSampler& sampler) {
  mc.validate();
  cfg.validate();
  seq.validate();
  force.validate();
  const Mat2 factor = sampling_factor(state0.cov);
  const Vec2 mean = state0.mean.vec();

  std::vector<ShotRecord> records(mc.shots);
  auto one_shot = [&](std::size_t i) {
    Rng draws(shot_stream_seed(mc.master_seed, i, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double z0 = normal(draws);
    const double z1 = normal(draws);
    const Vec2 x0 = mean + factor * Vec2(z0, z1);
    const double f0 = sampler(force, draws);
    records[i] = integrate_shot(PhaseVec::from(x0), seq, f0, cfg, mc, i);
  };

  const unsigned workers = std::min<std::size_t>(resolve_thread_count(mc.threads), mc.shots);
  if (workers <= 1) {
    for (std::size_t i = 0; i < mc.shots; ++i) one_shot(i);
    return records;
  }

  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < mc.shots; i += workers) one_shot(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

std::vector<PhaseVec> sample_column(const std::vector<ShotRecord>& records, std::size_t k) {
  std::vector<PhaseVec> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (k >= r.samples.size()) throw DomainError("sample index out of range");
    out.push_back(r.samples[k]);
  }
  return out;
}

CovMat discrete_noise_cov(double r, double theta, const OscillatorConfig& cfg, std::size_t steps_per_period,
                          Scheme scheme) {
  cfg.validate();
  Segment{r, theta}.validate();
  if (theta == 0.0) return {};
  const std::size_t n = substeps(theta, steps_per_period);
  const double h = theta / static_cast<double>(n);
  const double dt = h * r / cfg.omega;
  Mat2 kick = Mat2::Zero();
  kick(1, 1) = 4.0 * cfg.gamma / (r * r) * dt;

  Mat2 step;
  Mat2 added;
  if (scheme == Scheme::ExactRotation) {
    const Mat2 half = transition_matrix(r, 0.5 * h);
    step = half * half;
    added = half * kick * half.transpose();
  } else {
    step = Mat2::Identity() + dt * drift(r, cfg.omega);
    added = kick;
  }
  Mat2 cov = Mat2::Zero();
  for (std::size_t k = 0; k < n; ++k) cov = step * cov * step.transpose() + added;
  return CovMat::from(cov);
}

}  // namespace osc_echo

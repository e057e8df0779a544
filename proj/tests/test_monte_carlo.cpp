#include "osc_echo/errors.hpp"
#include "osc_echo/estimation.hpp"
#include "osc_echo/monte_carlo.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace osc_echo;
using std::numbers::pi;

namespace {

// |estimate - truth| <= k standard errors for every entry.
void check_within(const std::vector<PhaseVec>& pts, PhaseVec mean, CovMat cov, double k) {
  const auto st = ensemble_stats(pts);
  const auto se = moment_standard_errors(pts);
  CHECK(std::abs(st.mean.q - mean.q) <= k * se.mean.q);
  CHECK(std::abs(st.mean.p - mean.p) <= k * se.mean.p);
  CHECK(std::abs(st.cov.qq - cov.qq) <= k * se.cov.qq);
  CHECK(std::abs(st.cov.qp - cov.qp) <= k * se.cov.qp);
  CHECK(std::abs(st.cov.pp - cov.pp) <= k * se.cov.pp);
}

}  // namespace

TEST_CASE("seed derivation") {
  // first output of the reference splitmix64 generator seeded with 0
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(shot_stream_seed(1, 2, 0) != shot_stream_seed(1, 2, 1));
  CHECK(shot_stream_seed(1, 2, 0) != shot_stream_seed(1, 3, 0));
  CHECK(shot_stream_seed(1, 2, 0) != shot_stream_seed(2, 2, 0));
  CHECK(shot_stream_seed(7, 9, 1) == splitmix64(splitmix64(7 ^ splitmix64(9)) + 1));
}

TEST_CASE("configuration errors") {
  const auto seq = echo_sequence({2.0, optimal_ratio(2.0), pi}, 1.0);
  const OscillatorConfig cfg{1.0, 0.0, 0.0};
  McConfig mc;
  mc.steps_per_period = 99;
  CHECK_THROWS_AS(run_ensemble({}, seq, {}, cfg, mc), ConfigError);
  mc.steps_per_period = 100;
  mc.shots = 0;
  CHECK_THROWS_AS(run_ensemble({}, seq, {}, cfg, mc), ConfigError);
  mc.shots = 1;
  CHECK_THROWS_AS(run_ensemble({}, seq, {0.0, -1.0}, cfg, mc), DomainError);
}

TEST_CASE("sampling factor") {
  for (const CovMat c : {CovMat{2.0, 0.5, 1.0}, CovMat{4.0, 2.0, 1.0}, CovMat{0.0, 0.0, 3.0}, CovMat{}}) {
    const Mat2 l = sampling_factor(c);
    const Mat2 back = l * l.transpose();
    CHECK(std::abs(back(0, 0) - c.qq) < 1e-12);
    CHECK(std::abs(back(0, 1) - c.qp) < 1e-12);
    CHECK(std::abs(back(1, 1) - c.pp) < 1e-12);
  }
  CHECK_THROWS_AS(sampling_factor(CovMat{1.0, 3.0, 1.0}), InvariantError);
}

TEST_CASE("deterministic shots follow the closed form") {
  const OscillatorConfig cfg{1.0, 0.0, 0.0};
  McConfig mc;
  JumpSequence seq{{{2.0, pi}}, {}};
  const auto rec = integrate_shot({}, seq, 1.0, cfg, mc, 0);
  REQUIRE(rec.samples.size() == 1);
  CHECK(std::abs(rec.samples[0].q - 6.0) < 1e-12);
  CHECK(std::abs(rec.samples[0].p) < 1e-12);

  const PhaseVec x0{1.3, -0.4};
  const JumpSequence orbit{{{2.7, 1.9}, {1.4, 0.6}}, {{0, 0.7, "a"}, {1, 0.6, "b"}}};
  const auto shot = integrate_shot(x0, orbit, 0.0, cfg, mc, 0);
  const auto exact = run_sequence({x0, CovMat::identity()}, orbit, 0.0, cfg);
  REQUIRE(shot.samples.size() == exact.size());
  for (std::size_t k = 0; k < exact.size(); ++k) CHECK((shot.samples[k] - exact[k].mean).norm() < 1e-12);
}

TEST_CASE("single shot without force spread") {
  const auto seq = echo_sequence({2.0, 1.3, 1.0}, 1.0);
  McConfig mc;
  const auto recs = run_ensemble({}, seq, {0.75, 0.0}, {1.0, 0.1, 0.0}, mc);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].f0_draw == 0.75);
  CHECK(recs[0].shot_index == 0);
}

TEST_CASE("results depend only on the seed, not on threads") {
  auto seq = echo_sequence({2.0, optimal_ratio(2.0), pi}, 1.0);
  seq.sample_marks = echo_probe_marks({2.0, optimal_ratio(2.0), pi});
  const OscillatorConfig cfg{1.0, 0.06, 0.0};
  const ForceModel force{3.0, 1.5};
  McConfig mc{257, 100, 99, Scheme::ExactRotation, 1};
  const auto one = run_ensemble(GaussianState::thermal(1.0), seq, force, cfg, mc);
  mc.threads = 4;
  const auto four = run_ensemble(GaussianState::thermal(1.0), seq, force, cfg, mc);
  CHECK(one == four);
  CHECK(one[5].samples.size() == 12);
  mc.master_seed = 100;
  CHECK_FALSE(one == run_ensemble(GaussianState::thermal(1.0), seq, force, cfg, mc));
  // a prefix of shots is unchanged when more shots are requested
  mc.master_seed = 99;
  mc.shots = 300;
  const auto more = run_ensemble(GaussianState::thermal(1.0), seq, force, cfg, mc);
  CHECK(std::equal(one.begin(), one.end(), more.begin()));
}

TEST_CASE("the force is constant within a shot") {
  // custom sampler: a two-point force distribution
  auto sampler = [](const ForceModel& f, Rng& rng) {
    return (rng() & 1u) ? f.f0_mean + f.f0_sigma : f.f0_mean - f.f0_sigma;
  };
  const JumpSequence seq{{{3.0, pi}}, {}};
  McConfig mc{400, 100, 5, Scheme::ExactRotation, 1};
  const auto recs = run_ensemble(GaussianState{{}, CovMat{}}, seq, {0.0, 1.0}, {1.0, 0.0, 0.0}, mc, sampler);
  for (const auto& r : recs) {
    CHECK(std::abs(r.f0_draw) == 1.0);
    const auto d = displacement(r.f0_draw, 3.0, pi, 1.0);
    CHECK((r.samples[0] - d).norm() < 1e-10);
  }
}

TEST_CASE("Euler-Maruyama is first order, the exact scheme has no deterministic error") {
  const OscillatorConfig cfg{1.0, 0.0, 0.0};
  const JumpSequence seq{{{2.0, 2.5}}, {}};
  const PhaseVec x0{1.0, 0.5};
  const auto exact = propagate_segment({x0, CovMat::identity()}, seq.segments[0], 0.8, cfg).mean;
  auto error = [&](Scheme s, std::size_t spp) {
    McConfig mc{1, spp, 0, s, 1};
    return (integrate_shot(x0, seq, 0.8, cfg, mc, 0).samples.back() - exact).norm();
  };
  const double e1 = error(Scheme::EulerMaruyama, 1600);
  const double e2 = error(Scheme::EulerMaruyama, 3200);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));
  CHECK(error(Scheme::ExactRotation, 100) < 1e-13);
  CHECK(error(Scheme::ExactRotation, 1000) < 1e-13);
}

TEST_CASE("noise covariance of the split scheme is second order") {
  const OscillatorConfig cfg{1.0, 0.05, 0.0};
  const auto truth = heating_cov(2.0, 2.0, cfg.gamma, cfg.omega);
  auto err = [&](Scheme s, std::size_t spp) {
    const auto c = discrete_noise_cov(2.0, 2.0, cfg, spp, s) - truth;
    return std::abs(c.qq) + std::abs(c.qp) + std::abs(c.pp);
  };
  CHECK(err(Scheme::ExactRotation, 200) / err(Scheme::ExactRotation, 400) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(err(Scheme::EulerMaruyama, 1600) / err(Scheme::EulerMaruyama, 3200) ==
        doctest::Approx(2.0).epsilon(0.05));
  CHECK(err(Scheme::ExactRotation, 200) < 1e-4 * truth.trace());
}

TEST_CASE("heating ensemble matches the closed form") {
  const OscillatorConfig cfg{1.0, 0.0654, 0.0};
  const JumpSequence seq{{{1.0, 2 * pi}}, {}};
  McConfig mc{20000, 200, 4, Scheme::ExactRotation, 0};
  const CovMat s0 = CovMat::thermal(0.5);
  const auto recs = run_ensemble({{}, s0}, seq, {}, cfg, mc);
  check_within(sample_column(recs, 0), {}, s0 + heating_cov(1.0, 2 * pi, cfg.gamma, cfg.omega), 4.0);
}

TEST_CASE("shot-to-shot force spread over one segment") {
  const OscillatorConfig cfg{1.0, 0.0, 0.0};
  const JumpSequence seq{{{2.0, pi}}, {}};
  McConfig mc{20000, 100, 8, Scheme::ExactRotation, 0};
  const auto recs = run_ensemble({}, seq, {0.0, 0.5}, cfg, mc);
  check_within(sample_column(recs, 0), {}, CovMat::identity() + shot_cov(0.5, 2.0, pi, 1.0), 4.0);
}

TEST_CASE("echo ensemble matches the closed form") {
  const OscillatorConfig cfg{1.0, 0.05, 0.0};
  for (double rp : {optimal_ratio(2.0), 1.3}) {
    const EchoSpec spec{2.0, rp, 2.2};
    const auto seq = echo_sequence(spec, cfg.omega);
    const ForceModel force{4.0, 0.7};
    McConfig mc{20000, 100, 21, Scheme::ExactRotation, 0};
    const GaussianState s0{{0.5, -1.0}, CovMat::thermal(1.0)};
    const auto recs = run_ensemble(s0, seq, force, cfg, mc);
    check_within(sample_column(recs, 0), echo_mean(s0.mean, force.f0_mean, spec, cfg.omega),
                 echo_cov(s0.cov, spec, cfg, force.f0_sigma), 4.0);
  }
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_thread_count(3) == 3);
  CHECK(resolve_thread_count(0) >= 1);
}

#include "osc_echo/errors.hpp"
#include "osc_echo/gaussian_core.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace osc_echo;
using std::numbers::pi;

namespace {

void check_mat(const Mat2& a, const Mat2& b, double tol) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(a(i, j) - b(i, j)) <= tol);
}

void check_cov(const CovMat& a, const CovMat& b, double tol) {
  CHECK(std::abs(a.qq - b.qq) <= tol);
  CHECK(std::abs(a.qp - b.qp) <= tol);
  CHECK(std::abs(a.pp - b.pp) <= tol);
}

// Oracle: RK4 on dQ/dt = Omega P, dP/dt = -(Omega / r^2) Q + f0 (1 - 1/r^2),
// positions measured from the unsoftened minimum.
PhaseVec rk4_displacement(double f0, double r, double theta, double omega, int steps) {
  const double t_end = r * theta / omega;
  const double h = t_end / steps;
  const double k = omega / (r * r);
  const double drive = f0 * (1.0 - 1.0 / (r * r));
  auto rhs = [&](double q, double p) { return std::pair{omega * p, -k * q + drive}; };
  double q = 0.0, p = 0.0;
  for (int i = 0; i < steps; ++i) {
    auto [a1, b1] = rhs(q, p);
    auto [a2, b2] = rhs(q + 0.5 * h * a1, p + 0.5 * h * b1);
    auto [a3, b3] = rhs(q + 0.5 * h * a2, p + 0.5 * h * b2);
    auto [a4, b4] = rhs(q + h * a3, p + h * b3);
    q += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    p += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
  }
  return {q, p};
}

// Oracle: Simpson quadrature of Phi(s) diag(0, 4 gamma / r^2) Phi(s)^T over the segment.
CovMat quadrature_heating(double r, double theta, double gamma, double omega, int n) {
  const double t_end = r * theta / omega;
  const double h = t_end / n;
  Mat2 acc = Mat2::Zero();
  Mat2 d = Mat2::Zero();
  d(1, 1) = 4.0 * gamma / (r * r);
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const Mat2 phi = transition_matrix(r, omega * i * h / r);
    acc += w * phi * d * phi.transpose();
  }
  return CovMat::from(acc * h / 3.0);
}

}  // namespace

TEST_CASE("transition matrix examples") {
  check_mat(transition_matrix(2.0, 0.0), Mat2::Identity(), 1e-15);
  for (double r : {1.0, 1.5811388300841898, 7.0}) check_mat(transition_matrix(r, pi), -Mat2::Identity(), 1e-15);
  Mat2 expect;
  expect << 0.0, 2.0, -0.5, 0.0;
  check_mat(transition_matrix(2.0, pi / 2), expect, 1e-15);
}

TEST_CASE("transition matrix is symplectic and composes along the phase") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(1.0, 6.0), ut(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const double r = ur(rng), a = ut(rng), b = ut(rng);
    CHECK(std::abs(transition_matrix(r, a).determinant() - 1.0) < 1e-12);
    check_mat(transition_matrix(r, a + b), transition_matrix(r, b) * transition_matrix(r, a), 1e-12);
  }
}

TEST_CASE("transition matrix rejects bad ratios") {
  CHECK_THROWS_AS(transition_matrix(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(transition_matrix(-2.0, 1.0), DomainError);
  CHECK_THROWS_AS(transition_matrix(std::numeric_limits<double>::quiet_NaN(), 1.0), DomainError);
  CHECK_THROWS_AS(transition_matrix(2.0, std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("squeeze decomposition") {
  const auto unit = squeeze_decomposition(1.0, 0.7);
  check_mat(unit.squeeze, Mat2::Identity(), 1e-15);
  check_mat(unit.product(), transition_matrix(1.0, 0.7), 1e-15);
  check_mat(squeeze_decomposition(4.0, pi / 3).product(), transition_matrix(4.0, pi / 3), 1e-14);
  check_mat(squeeze_decomposition(2.0, 0.0).product(), Mat2::Identity(), 1e-15);
  const auto d = squeeze_decomposition(4.0, pi / 3);
  CHECK(d.squeeze(0, 0) == doctest::Approx(2.0));
  CHECK(d.squeeze(1, 1) == doctest::Approx(0.5));
  check_mat(d.squeeze * d.unsqueeze, Mat2::Identity(), 1e-15);
}

TEST_CASE("displacement examples") {
  const double omega = 3.7;
  const auto none = displacement(5.0 * omega, 1.0, 1.3, omega);
  CHECK(none.q == 0.0);
  CHECK(none.p == 0.0);
  const auto d = displacement(omega, 2.0, pi, omega);
  CHECK(d.q == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(std::abs(d.p) < 1e-14);
  for (double r : {1.3, 2.0, 5.0}) CHECK(displacement(2.0 * omega, r, 2 * pi, omega).norm() < 1e-12);
  CHECK_THROWS_AS(displacement(1.0, 2.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(displacement(1.0, 2.0, 1.0, -1.0), DomainError);
}

TEST_CASE("displacement agrees with numerical integration") {
  const double omega = 1.0;
  const auto rk = rk4_displacement(1.0, 2.0, pi, omega, 4000);
  CHECK(rk.q == doctest::Approx(6.0).epsilon(1e-10));
  for (auto [f0, r, theta] : {std::tuple{1.0, 2.0, pi}, {-0.4, 3.0, 1.1}, {2.5, 1.2, 5.0}}) {
    const auto exact = displacement(f0, r, theta, omega);
    const auto num = rk4_displacement(f0, r, theta, omega, 4000);
    CHECK((exact - num).norm() < 1e-9 * (1.0 + exact.norm()));
  }
}

TEST_CASE("rotation center") {
  const double omega = 2.0;
  const auto c = rotation_center(omega, 2.0, omega);
  CHECK(c.q == doctest::Approx(3.0));
  CHECK(c.p == 0.0);
  CHECK(rotation_center(0.0, 3.0, omega).norm() == 0.0);
  const auto big = rotation_center(97.0 * omega, std::sqrt(10.0), omega);
  CHECK(big.q == doctest::Approx(873.0).epsilon(1e-13));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uf(-5.0, 5.0), ur(1.0, 5.0), ut(0.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    const double f0 = uf(rng), r = ur(rng), theta = ut(rng);
    const Vec2 lhs = displacement(f0, r, theta, 1.0).vec();
    const Vec2 rhs = (Mat2::Identity() - transition_matrix(r, theta)) * rotation_center(f0, r, 1.0).vec();
    CHECK((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("heating covariance examples") {
  check_cov(heating_cov(2.5, 0.0, 0.3, 1.0), CovMat{}, 0.0);
  const auto h1 = heating_cov(1.0, 2 * pi, 0.01, 1.0);
  CHECK(h1.qq == doctest::Approx(0.12566370614359174).epsilon(1e-12));
  CHECK(h1.pp == doctest::Approx(0.12566370614359174).epsilon(1e-12));
  CHECK(std::abs(h1.qp) < 1e-15);
  const auto h2 = heating_cov(2.0, pi, 3.4 / 52.0, 1.0);
  CHECK(h2.qq == doctest::Approx(0.8216473094004074).epsilon(1e-12));
  CHECK(h2.pp == doctest::Approx(0.2054118273501019).epsilon(1e-12));
  CHECK(std::abs(h2.qp) < 1e-15);
  CHECK_THROWS_AS(heating_cov(2.0, 1.0, -0.1, 1.0), DomainError);
}

TEST_CASE("heating covariance matches quadrature of the noise kernel") {
  // frozen quadrature value for (r = 3, theta = 1.3, gamma = 0.2, omega = 2)
  check_cov(heating_cov(3.0, 1.3, 0.2, 2.0), {0.6253495884535609, 0.18568887533689474, 0.10385004572738216},
            1e-13);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ur(1.0, 4.0), ut(0.0, 9.0);
  for (int i = 0; i < 20; ++i) {
    const double r = ur(rng), theta = ut(rng);
    check_cov(heating_cov(r, theta, 0.07, 1.3), quadrature_heating(r, theta, 0.07, 1.3, 2000), 1e-10);
  }
}

TEST_CASE("heating covariance is PSD, grows with phase and has the occupancy rate") {
  double prev_trace = 0.0;
  for (int i = 1; i <= 200; ++i) {
    const auto h = heating_cov(2.3, 0.1 * i, 0.05, 1.0);
    CHECK(h.is_psd());
    CHECK(h.trace() >= prev_trace);
    prev_trace = h.trace();
  }
  // r = 1: trace grows at 2 * (2 Gamma), i.e. <n> rises at Gamma.
  const double gamma = 0.02, t = 3.0;
  CHECK(heating_cov(1.0, t, gamma, 1.0).trace() / 2.0 == doctest::Approx(2.0 * gamma * t));
}

TEST_CASE("shot covariance") {
  for (double r : {1.5, 2.0, 4.0}) check_cov(shot_cov(0.8, r, 2 * pi, 1.0), CovMat{}, 1e-24);
  const auto s = shot_cov(1.0, 2.0, pi, 1.0);
  CHECK(s.qq == doctest::Approx(36.0).epsilon(1e-13));
  CHECK(std::abs(s.qp) < 1e-13);
  CHECK(std::abs(s.pp) < 1e-13);
  check_cov(shot_cov(0.0, 2.0, 1.1, 1.0), CovMat{}, 0.0);
  CHECK_THROWS_AS(shot_cov(-1.0, 2.0, 1.0, 1.0), DomainError);
  // rank one, largest at theta = pi
  double best = -1.0, best_theta = 0.0;
  for (int i = 0; i <= 360; ++i) {
    const double th = 2 * pi * i / 360.0;
    const auto c = shot_cov(0.3, 2.5, th, 1.0);
    CHECK(std::abs(c.det()) < 1e-12 * (1.0 + c.trace() * c.trace()));
    if (c.trace() > best) best = c.trace(), best_theta = th;
  }
  CHECK(best_theta == doctest::Approx(pi));
}

TEST_CASE("propagate segment examples") {
  OscillatorConfig cfg{1.0, 0.0, 0.0};
  const GaussianState vac{};
  const auto same = propagate_segment(vac, {1.0, 2 * pi}, 0.0, cfg);
  check_cov(same.cov, CovMat::identity(), 1e-15);
  CHECK(same.mean.norm() < 1e-15);
  const auto sq = propagate_segment(vac, {2.0, pi / 2}, 0.0, cfg);
  check_cov(sq.cov, CovMat::diag(4.0, 0.25), 1e-15);
  const GaussianState th{{}, CovMat{3.0, 0.4, 2.0}};
  const auto kicked = propagate_segment(th, {2.0, pi}, 1.0, cfg);
  CHECK(kicked.mean.q == doctest::Approx(6.0));
  CHECK(std::abs(kicked.mean.p) < 1e-14);
  check_cov(kicked.cov, th.cov, 1e-14);
}

TEST_CASE("propagation is affine in the mean and the force") {
  OscillatorConfig cfg{1.4, 0.03, 0.0};
  const Segment seg{2.2, 1.7};
  const GaussianState a{{0.3, -1.2}, CovMat::thermal(0.5)};
  const GaussianState b{{2.0, 0.7}, CovMat::thermal(0.5)};
  const GaussianState sum{a.mean + b.mean, CovMat::thermal(0.5)};
  const auto pa = propagate_segment(a, seg, 0.9, cfg);
  const auto pb = propagate_segment(b, seg, -0.2, cfg);
  const auto ps = propagate_segment(sum, seg, 0.7, cfg);
  CHECK((ps.mean - (pa.mean + pb.mean)).norm() < 1e-12);
  CHECK(ps.cov.is_psd());
  check_cov(pa.cov, pb.cov, 1e-15);
}

TEST_CASE("normalized force") {
  const double omega = 2 * pi * 52000.0;
  CHECK(normalized_force(0.0, 1.2e-18, omega) == 0.0);
  CHECK(momentum_zero_point(1.2e-18, omega) == doctest::Approx(4.546794349355713e-24).epsilon(1e-12));
  CHECK(normalized_force(144e-18, 1.2e-18, omega) == doctest::Approx(31670664.85432863).epsilon(1e-12));
  CHECK(normalized_force(22.7e-18, 1.2e-18, omega) == doctest::Approx(4992528.418008749).epsilon(1e-12));
  CHECK_THROWS_AS(normalized_force(1.0, 0.0, omega), DomainError);
  CHECK_THROWS_AS(normalized_force(1.0, 1e-18, -1.0), DomainError);
}

TEST_CASE("covariance helpers") {
  CHECK(CovMat::identity().is_psd());
  CHECK_FALSE(CovMat{1.0, 2.0, 1.0}.is_psd());
  CHECK(CovMat{1.0, 1.0, 1.0}.is_psd());
  CHECK_FALSE(CovMat{-1.0, 0.0, 1.0}.is_psd());
  Mat2 m;
  m << 1.0, 0.2, 0.4, 2.0;
  const auto c = CovMat::from(m);
  CHECK(c.qp == doctest::Approx(0.3));
  CHECK(CovMat::thermal(1.2).qq == doctest::Approx(3.4));
  CHECK_THROWS_AS((OscillatorConfig{0.0, 0.0, 0.0}.validate()), DomainError);
  CHECK_THROWS_AS((OscillatorConfig{1.0, -1.0, 0.0}.validate()), DomainError);
  CHECK_THROWS_AS((ForceModel{0.0, -1.0}.validate()), DomainError);
}

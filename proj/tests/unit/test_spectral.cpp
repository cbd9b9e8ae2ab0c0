#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <numbers>

#include "support.hpp"
#include "vdw_otoc/spectral.hpp"

using namespace vdw_otoc;
using std::numbers::pi;

namespace {

const BoundStateBasis& harmonic_basis() {
  static const BoundStateBasis b = solve_bound_states(
      PotentialModel::harmonic(10.0, 1.0), RadialGrid(2.0, 18.0, 400), 1.0, {.energy_ceiling = 20.0});
  return b;
}

const MatrixElements& harmonic_elements() {
  static const MatrixElements e = position_matrix(harmonic_basis());
  return e;
}

const BoundStateBasis& lj_basis() {
  static const BoundStateBasis b = [] {
    const auto m = PotentialModel::lennard_jones(1.0, 1.0);
    return solve_bound_states(m, build_grid(m, 1500, AutoGrid{}), 5000.0);
  }();
  return b;
}

const MatrixElements& lj_elements() {
  static const MatrixElements e = position_matrix(lj_basis());
  return e;
}

// Direct complex evaluation of b_nl(t) from its defining double sum.
std::vector<std::complex<double>> b_row(const MatrixElements& el, int n, double t, int k) {
  std::vector<std::complex<double>> b(k);
  const auto& e = el.energies;
  for (int l = 0; l < k; ++l) {
    std::complex<double> sum = 0.0;
    for (int m = 0; m < k; ++m) {
      const double e_ml = e[m] - e[l];
      const double e_nm = e[n] - e[m];
      sum += el.r(n, m) * el.r(m, l) *
             (e_ml * std::exp(std::complex<double>(0.0, e_nm * t)) -
              e_nm * std::exp(std::complex<double>(0.0, e_ml * t)));
    }
    b[l] = el.mass * sum;
  }
  return b;
}

double c_direct(const MatrixElements& el, int n, double t, int k) {
  double c = 0.0;
  for (const auto& b : b_row(el, n, t, k)) c += std::norm(b);
  return c;
}

}  // namespace

TEST(PositionMatrix, HarmonicSelectionRules) {
  const auto& el = harmonic_elements();
  EXPECT_NEAR(std::abs(el.r(0, 1)), std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(el.r(0, 2), 0.0, 1e-8);
  for (int n = 0; n < el.size(); ++n) EXPECT_NEAR(el.r(n, n), 10.0, 1e-8) << n;
  for (int n = 0; n + 1 < 10; ++n) EXPECT_NEAR(std::abs(el.r(n, n + 1)), std::sqrt((n + 1) / 2.0), 1e-8);
}

TEST(PositionMatrix, SymmetricWithPositiveDiagonal) {
  const auto& el = lj_elements();
  EXPECT_TRUE((el.r.array() == el.r.transpose().array()).all());
  for (int n = 0; n < el.size(); ++n) EXPECT_GT(el.r(n, n), 0.0);
}

TEST(Momentum, FromPosition) {
  const Eigen::MatrixXd q = momentum_from_position(harmonic_elements());
  for (int n = 0; n < q.rows(); ++n) EXPECT_EQ(q(n, n), 0.0);
  EXPECT_NEAR(std::abs(q(0, 1)), std::sqrt(0.5), 1e-6);
  const Eigen::MatrixXd q_lj = momentum_from_position(lj_elements());
  for (int trial = 0; trial < 200; ++trial) {
    const int n = vdw_otoc::testing::uniform_int(0, static_cast<int>(q_lj.rows()) - 1);
    const int l = vdw_otoc::testing::uniform_int(0, static_cast<int>(q_lj.rows()) - 1);
    EXPECT_EQ(q_lj(n, l), -q_lj(l, n));
  }
}

TEST(Momentum, DirectAgreesWithSpectralHarmonic) {
  const Eigen::MatrixXd spectral = momentum_from_position(harmonic_elements()).topLeftCorner(20, 20);
  const Eigen::MatrixXd direct = momentum_direct(harmonic_basis(), 20);
  EXPECT_LE((spectral - direct).norm() / spectral.norm(), 1e-3);
  EXPECT_LE((spectral - direct).cwiseAbs().maxCoeff() / spectral.cwiseAbs().maxCoeff(), 1e-3);
  for (int n = 0; n < 20; ++n) EXPECT_LE(std::abs(direct(n, n)), 1e-8);
}

TEST(Momentum, DirectAgreesWithSpectralLennardJones) {
  const int count = std::min(20, lj_basis().size());
  const Eigen::MatrixXd spectral = momentum_from_position(lj_elements()).topLeftCorner(count, count);
  const Eigen::MatrixXd direct = momentum_direct(lj_basis(), count);
  EXPECT_LE((spectral - direct).norm() / spectral.norm(), 1e-3);
}

TEST(Momentum, BoxMatrixElementMatchesQuadrature) {
  const auto basis = solve_bound_states(PotentialModel::harmonic(1.5, 0.0), RadialGrid(0.0, pi, 300), 1.0,
                                        {.energy_ceiling = 20.0});
  // q_12 = -<1|d/dr|2> for psi_k = sqrt(2/pi) sin(k r).
  const double oracle = -boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double r) { return (2.0 / pi) * std::sin(r) * 2.0 * std::cos(2.0 * r); }, 0.0, pi);
  EXPECT_NEAR(std::abs(oracle), 8.0 / (3.0 * pi), 1e-12);
  // The direct route is a grid quadrature of sin(r) 2cos(2r); its integrand has
  // f'(0) = 1, f'(pi) = -1, so the Euler-Maclaurin error is (h^2/12) * 2 * 4/pi.
  const auto quadrature_error = [&](int points) {
    const auto b = solve_bound_states(PotentialModel::harmonic(1.5, 0.0), RadialGrid(0.0, pi, points),
                                      1.0, {.energy_ceiling = 20.0});
    return std::abs(momentum_direct(b, 2)(0, 1)) - std::abs(oracle);
  };
  const double h = pi / 301.0;
  const double coarse = quadrature_error(300);
  EXPECT_NEAR(coarse, h * h / 12.0 * 2.0 * 4.0 / pi, 1e-3 * std::abs(coarse));
  EXPECT_NEAR(coarse / quadrature_error(601), 4.0, 0.01);
  const Eigen::MatrixXd spectral = momentum_from_position(position_matrix(basis));
  EXPECT_NEAR(std::abs(spectral(0, 1)), std::abs(oracle), 1e-9);
}

TEST(Otoc, HarmonicGroundStateIsCosSquared) {
  const auto t = vdw_otoc::testing::linspace(0.0, 4.0 * pi, 400);
  const auto c = otoc_values(0, t, harmonic_elements(), harmonic_elements().size());
  double sum = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) sum += std::pow(c[j] - std::pow(std::cos(t[j]), 2), 2);
  EXPECT_LE(std::sqrt(sum / t.size()), 1e-6);
}

TEST(Otoc, HarmonicOffDiagonalsVanish) {
  const auto& el = harmonic_elements();
  for (int n : {0, 3, 7}) {
    for (double t : vdw_otoc::testing::linspace(0.0, 4.0 * pi, 37)) {
      const auto b = b_row(el, n, t, el.size());
      for (int l = 0; l < el.size(); ++l) {
        if (l == n) continue;
        EXPECT_LE(std::abs(b[l]), 1e-6) << "n=" << n << " l=" << l << " t=" << t;
      }
    }
  }
}

TEST(Otoc, MatchesDirectDoubleSum) {
  const auto& el = lj_elements();
  const int nb = el.size();
  for (int trial = 0; trial < 20; ++trial) {
    const int n = vdw_otoc::testing::uniform_int(0, nb - 3);
    const int k = vdw_otoc::testing::uniform_int(n + 2, nb);
    const double t = vdw_otoc::testing::uniform(-500.0, 500.0);
    const double ref = c_direct(el, n, t, k);
    const double got = otoc_values(n, std::span(&t, 1), el, k)[0];
    EXPECT_NEAR(got, ref, 1e-10 * std::max(1.0, ref)) << "n=" << n << " k=" << k << " t=" << t;
  }
}

TEST(Otoc, CanonicalNormalisationAtZero) {
  const double zero = 0.0;
  const auto& h = harmonic_elements();
  for (int n = 0; n < 15; ++n) EXPECT_NEAR(otoc_values(n, std::span(&zero, 1), h, h.size())[0], 1.0, 1e-8);
  // Bound states alone miss the continuum part of the sum rule; only states
  // that pass the truncation bound are held to 1%.  The mu = 5000 well is too
  // shallow to have any, so this uses a deeper one (27 bound states).
  const auto lj = PotentialModel::lennard_jones(1.0, 1.0);
  const auto el = position_matrix(solve_bound_states(lj, build_grid(lj, 1500, AutoGrid{}), 20000.0));
  const auto probes = probe_subset(vdw_otoc::testing::linspace(0.0, 5000.0, 400));
  int passing = 0;
  for (int n = 0; n < el.size(); ++n) {
    if (!(otoc_truncation_error(n, el, probes) <= 0.01)) continue;
    ++passing;
    EXPECT_NEAR(otoc_values(n, std::span(&zero, 1), el, el.size())[0], 1.0, 0.01) << n;
  }
  EXPECT_GE(passing, 5);
}

TEST(Otoc, TimeSymmetryAndPositivity) {
  const auto& el = lj_elements();
  std::vector<double> t, minus_t;
  for (int trial = 0; trial < 100; ++trial) {
    t.push_back(vdw_otoc::testing::uniform(0.0, 2000.0));
    minus_t.push_back(-t.back());
  }
  for (int n : {0, 2, 5}) {
    const auto plus = otoc_values(n, t, el, el.size());
    const auto minus = otoc_values(n, minus_t, el, el.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
      EXPECT_GE(plus[j], 0.0);
      EXPECT_LE(std::abs(plus[j] - minus[j]), 1e-12 * plus[j]);
    }
  }
}

TEST(Otoc, Errors) {
  const auto& el = harmonic_elements();
  const std::vector<double> t{0.0, 1.0};
  EXPECT_THROW(otoc_values(-1, t, el, el.size()), IndexError);
  EXPECT_THROW(otoc_values(el.size(), t, el, el.size()), IndexError);
  EXPECT_THROW(otoc_values(0, t, el, el.size() + 1), IndexError);
  EXPECT_THROW(otoc_values(5, t, el, 6), TruncationError);
  EXPECT_NO_THROW(otoc_values(5, t, el, 7));
}

TEST(Otoc, SeriesCarriesEstimate) {
  const auto& el = harmonic_elements();
  const auto t = vdw_otoc::testing::linspace(0.0, 10.0, 200);
  const auto s = otoc_series(2, t, el, el.size());
  EXPECT_EQ(s.n, 2);
  EXPECT_EQ(s.values.size(), t.size());
  EXPECT_EQ(s.truncation, el.size());
  EXPECT_LE(s.convergence_estimate, 1e-8);
  EXPECT_LE(std::abs(s.values[0] - 1.0), std::max(s.convergence_estimate, 1e-12));
  EXPECT_TRUE(std::isnan(otoc_series(2, t, el, el.size() - 1).convergence_estimate));
}

TEST(Truncation, HarmonicGroundStateExact) {
  const auto& full = harmonic_elements();
  MatrixElements ten{full.r.topLeftCorner(10, 10),
                     std::vector<double>(full.energies.begin(), full.energies.begin() + 10), full.mass};
  ASSERT_EQ(reduced_truncation(10), 8);
  const auto probes = probe_subset(vdw_otoc::testing::linspace(0.0, 4.0 * pi, 400));
  EXPECT_LE(otoc_truncation_error(0, ten, probes), 1e-10);
}

TEST(Truncation, LastStateExcluded) {
  const auto& el = lj_elements();
  const auto probes = probe_subset(vdw_otoc::testing::linspace(0.0, 5000.0, 400));
  EXPECT_GT(otoc_truncation_error(el.size() - 1, el, probes), 0.01);
}

TEST(Truncation, BoundsCompletenessDefect) {
  const auto& el = lj_elements();
  const auto probes = probe_subset(vdw_otoc::testing::linspace(0.0, 5000.0, 400));
  const double zero = 0.0;
  for (int n = 0; n < el.size(); ++n) {
    const double est = otoc_truncation_error(n, el, probes);
    if (std::isfinite(est)) {
      EXPECT_LE(std::abs(otoc_values(n, std::span(&zero, 1), el, el.size())[0] - 1.0), est) << n;
    }
  }
}

TEST(Truncation, Errors) {
  const auto& full = harmonic_elements();
  MatrixElements seven{full.r.topLeftCorner(7, 7),
                       std::vector<double>(full.energies.begin(), full.energies.begin() + 7), full.mass};
  const std::vector<double> probes{0.0, 1.0};
  EXPECT_THROW(otoc_truncation_error(0, seven, probes), ArgumentError);
  EXPECT_THROW(otoc_truncation_error(full.size(), full, probes), IndexError);
}

TEST(Probes, EvenSubset) {
  const auto t = vdw_otoc::testing::linspace(0.0, 1.0, 101);
  const auto p = probe_subset(t, 16);
  ASSERT_EQ(p.size(), 16u);
  EXPECT_EQ(p.front(), 0.0);
  EXPECT_EQ(p.back(), 1.0);
  EXPECT_EQ(probe_subset(std::vector<double>{2.0, 3.0}, 16).size(), 2u);
}

#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <numbers>

#include "support.hpp"
#include "vdw_otoc/dvr.hpp"

using namespace vdw_otoc;
using std::numbers::pi;

namespace {

const PotentialModel& harmonic10() {
  static const PotentialModel m = PotentialModel::harmonic(10.0, 1.0);
  return m;
}

const BoundStateBasis& harmonic_basis() {
  static const BoundStateBasis b =
      solve_bound_states(harmonic10(), RadialGrid(2.0, 18.0, 400), 1.0, {.energy_ceiling = 20.0});
  return b;
}

// Flat potential: a particle in the box (a, b).
const BoundStateBasis& box_basis() {
  static const BoundStateBasis b = solve_bound_states(
      PotentialModel::harmonic(1.5, 0.0), RadialGrid(0.0, pi, 200), 1.0, {.energy_ceiling = 60.0});
  return b;
}

// LJ(1,1) with a mass giving a handful of bound states.
constexpr double lj_mass = 2000.0;
const PotentialModel& lj11() {
  static const PotentialModel m = PotentialModel::lennard_jones(1.0, 1.0);
  return m;
}
const BoundStateBasis& lj_basis() {
  static const BoundStateBasis b =
      solve_bound_states(lj11(), build_grid(lj11(), 1200, AutoGrid{}), lj_mass);
  return b;
}

int sign_changes(const Eigen::VectorXd& psi) {
  const double floor = 1e-6 * psi.cwiseAbs().maxCoeff();
  int changes = 0;
  int last = 0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (std::abs(psi[i]) < floor) continue;
    const int s = psi[i] > 0 ? 1 : -1;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

void expect_basis_invariants(const BoundStateBasis& b, const PotentialModel& m) {
  const int nb = b.size();
  for (int k = 1; k < nb; ++k) EXPECT_GT(b.energies[k], b.energies[k - 1]);
  for (double e : b.energies) EXPECT_LT(e, b.threshold);
  const Eigen::MatrixXd overlap = b.wavefunctions.transpose() * b.wavefunctions * b.grid.spacing();
  EXPECT_LE((overlap - Eigen::MatrixXd::Identity(nb, nb)).cwiseAbs().maxCoeff(), 1e-10);

  const Eigen::MatrixXd h = hamiltonian_matrix(m, b.grid, b.mass);
  const double norm = h.norm();
  for (int k = 0; k < nb; ++k) {
    const Eigen::VectorXd psi = b.wavefunctions.col(k);
    EXPECT_EQ(sign_changes(psi), k) << "state " << k;
    EXPECT_LE((h * psi - b.energies[k] * psi).norm() / psi.norm(), 1e-9 * norm) << "state " << k;
    // Innermost antinode is positive.
    const double floor = 1e-6 * psi.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i + 1 < psi.size(); ++i) {
      if (std::abs(psi[i]) >= floor && std::abs(psi[i]) >= std::abs(psi[i + 1])) {
        EXPECT_GT(psi[i], 0.0) << "state " << k;
        break;
      }
    }
  }
}

}  // namespace

TEST(Grid, Spacing) {
  const RadialGrid g(0.0, pi, 99);
  EXPECT_DOUBLE_EQ(g.spacing(), pi / 100);
  EXPECT_DOUBLE_EQ(g.point(0), pi / 100);
  EXPECT_NEAR(g.point(98), 99 * pi / 100, 1e-15);
  const auto r = g.points();
  for (int i = 1; i < r.size(); ++i) EXPECT_GT(r[i], r[i - 1]);
}

TEST(Grid, Errors) {
  EXPECT_THROW(RadialGrid(2.0, 1.0, 100), DomainError);
  EXPECT_THROW(RadialGrid(0.0, 1.0, 15), ArgumentError);
  EXPECT_THROW(build_grid(harmonic10(), 100, ExplicitGrid{2.0, 1.0}), DomainError);
  EXPECT_THROW(build_grid(harmonic10(), 100, ExplicitGrid{11.0, 18.0}), DomainError);
  EXPECT_THROW(build_grid(harmonic10(), 10, ExplicitGrid{2.0, 18.0}), ArgumentError);
  EXPECT_THROW(build_grid(harmonic10(), 100, AutoGrid{}), ArgumentError);
}

TEST(Grid, ExplicitPolicy) {
  const RadialGrid g = build_grid(harmonic10(), 400, ExplicitGrid{2.0, 18.0});
  EXPECT_EQ(g.a(), 2.0);
  EXPECT_EQ(g.b(), 18.0);
  EXPECT_EQ(g.size(), 400);
}

TEST(Grid, AutoPolicyLennardJones) {
  const RadialGrid g = build_grid(lj11(), 500, AutoGrid{});
  EXPECT_GE(lj11()(g.a()), 0.25);
  EXPECT_LT(g.a(), std::pow(2.0, 1.0 / 6.0));
  // Outer edge: twice the turning point 1e-6 of the depth below threshold.
  const double u = (1.0 - std::sqrt(1.0 - 4.0 * 0.25e-6)) / 2.0;
  EXPECT_NEAR(g.b(), 2.0 * std::pow(u, -1.0 / 6.0), 1e-8);
}

TEST(Grid, AutoPolicyBeyondTable) {
  std::vector<double> r, v;
  for (int i = 0; i < 200; ++i) {
    r.push_back(0.95 + i * 0.02);
    v.push_back(std::pow(r.back(), -12) - std::pow(r.back(), -6));
  }
  const auto tab = PotentialModel::tabulated(r, v, 0.0);
  EXPECT_THROW(build_grid(tab, 100, AutoGrid{}), Error);
}

TEST(Kinetic, BoxEigenvalues) {
  const Eigen::MatrixXd t = kinetic_matrix(RadialGrid(0.0, pi, 200), 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  EXPECT_NEAR(es.eigenvalues()[0], 0.5, 1e-10);
  EXPECT_NEAR(es.eigenvalues()[1], 2.0, 1e-9);
}

TEST(Kinetic, ExactlySymmetric) {
  const RadialGrid g(0.3, 7.1, 257);
  const Eigen::MatrixXd t = kinetic_matrix(g, 3.7);
  for (int trial = 0; trial < 500; ++trial) {
    const int i = vdw_otoc::testing::uniform_int(0, 256);
    const int j = vdw_otoc::testing::uniform_int(0, 256);
    EXPECT_EQ(t(i, j), t(j, i));
  }
  const Eigen::MatrixXd h = hamiltonian_matrix(lj11(), RadialGrid(0.9, 6.0, 300), 10.0);
  EXPECT_TRUE((h.array() == h.transpose().array()).all());
  EXPECT_THROW(kinetic_matrix(g, 0.0), ArgumentError);
}

TEST(Solve, HarmonicSpectrum) {
  const auto& b = harmonic_basis();
  ASSERT_GE(b.size(), 11);
  for (int n = 0; n <= 10; ++n) EXPECT_NEAR(b.energies[n], n + 0.5, 1e-8) << n;
  EXPECT_EQ(b.size(), 20);
  expect_basis_invariants(b, harmonic10());
}

TEST(Solve, BoxSpectrum) {
  const auto& b = box_basis();
  for (int n = 0; n < b.size(); ++n) EXPECT_NEAR(b.energies[n], 0.5 * (n + 1) * (n + 1), 1e-8) << n;
  expect_basis_invariants(b, PotentialModel::harmonic(1.5, 0.0));
}

TEST(Solve, LennardJonesInvariants) {
  const auto& b = lj_basis();
  EXPECT_EQ(b.threshold, -1e-10);
  expect_basis_invariants(b, lj11());
}

TEST(Solve, BoundStateCountMatchesWkb) {
  // (1/pi) * integral of sqrt(2 mu (0 - V)) over the classically allowed
  // region r > 1 at zero energy.
  boost::math::quadrature::exp_sinh<double> integrator;
  const double phase = integrator.integrate([](double x) {
    const double r = 1.0 + x;
    const double minus_v = std::pow(r, -6) - std::pow(r, -12);
    return std::sqrt(2.0 * lj_mass * std::max(minus_v, 0.0));
  });
  const int wkb = static_cast<int>(std::floor(phase / pi + 0.5));
  EXPECT_NEAR(lj_basis().size(), wkb, 1);
}

TEST(Solve, Errors) {
  EXPECT_THROW(solve_bound_states(lj11(), RadialGrid(0.0, 5.0, 100), 1.0), DomainError);
  EXPECT_THROW(solve_bound_states(harmonic10(), RadialGrid(2.0, 18.0, 100), 0.0), ArgumentError);
  // Too light to bind.
  EXPECT_THROW(solve_bound_states(lj11(), build_grid(lj11(), 200, AutoGrid{}), 1.0), NoBoundStatesError);
}

TEST(Solve, SpectrumInvariantUnderWiderBox) {
  const auto& base = harmonic_basis();
  const auto wide =
      solve_bound_states(harmonic10(), RadialGrid(1.2, 18.8, 400), 1.0, {.energy_ceiling = 20.0});
  for (int n = 0; n <= 10; ++n) {
    EXPECT_NEAR(wide.energies[n], base.energies[n], 1e-10 * base.energies[n]) << n;
  }
}

TEST(Solve, BasisInvariantsProperty) {
  for (int trial = 0; trial < 6; ++trial) {
    const double c6 = vdw_otoc::testing::log_uniform(0.5, 50.0);
    const double depth = vdw_otoc::testing::log_uniform(0.05, 2.0);
    const auto m = PotentialModel::lennard_jones(c6, lj_c12_for_depth(c6, depth));
    const double r_min = potential_minimum(m).r_min;
    // Mass so that a few states are bound; grid fine on the local scale.
    const double mass = vdw_otoc::testing::uniform(200.0, 1500.0) / (depth * r_min * r_min);
    const auto b = solve_bound_states(m, build_grid(m, 900, AutoGrid{}), mass);
    SCOPED_TRACE("trial " + std::to_string(trial));
    expect_basis_invariants(b, m);
  }
}

TEST(Convergence, HarmonicAlreadyConverged) {
  const auto shifts = convergence_report(harmonic10(), RadialGrid(2.0, 18.0, 400), 1.0,
                                         ExplicitGrid{2.0, 18.0}, {.energy_ceiling = 20.0});
  for (int n = 0; n <= 10; ++n) {
    EXPECT_LT(shifts[n].refine_shift, 1e-10) << n;
    EXPECT_TRUE(std::isnan(shifts[n].box_shift));
  }
}

TEST(Convergence, BoxRefinement) {
  const auto shifts = convergence_report(PotentialModel::harmonic(1.5, 0.0), RadialGrid(0.0, pi, 100),
                                         1.0, ExplicitGrid{0.0, pi}, {.energy_ceiling = 60.0});
  ASSERT_FALSE(shifts.empty());
  for (const auto& s : shifts) EXPECT_LT(s.refine_shift, 1e-9);
}

TEST(Convergence, LennardJonesAutoReportsBoxShift) {
  const auto grid = build_grid(lj11(), 1200, AutoGrid{});
  const auto shifts = convergence_report(lj11(), grid, lj_mass, AutoGrid{});
  ASSERT_EQ(static_cast<int>(shifts.size()), lj_basis().size());
  const auto fine = solve_bound_states(lj11(), RadialGrid(grid.a(), grid.b(), 2401), lj_mass);
  for (const auto& s : shifts) {
    EXPECT_FALSE(std::isnan(s.box_shift));
    // N = 1200 resolves this well to a few micro-hartree (depth 0.25).
    EXPECT_LT(s.refine_shift, 1e-5);
    EXPECT_DOUBLE_EQ(s.refine_shift, std::abs(fine.energies[s.n] - s.energy));
  }
}

#ifndef VDW_OTOC_DVR_HPP
#define VDW_OTOC_DVR_HPP

// Sine-basis (particle-in-a-box) discrete variable representation on a
// uniform radial grid, and the dense bound-state solve built on it.

#include <lapacke.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "vdw_otoc/errors.hpp"
#include "vdw_otoc/potential.hpp"

namespace vdw_otoc {

// Interior points r_i = a + i*spacing, i = 1..n, spacing = (b - a)/(n + 1).
class RadialGrid {
 public:
  static constexpr int min_points = 16;

  RadialGrid(double a, double b, int n) : a_(a), b_(b), n_(n) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
      throw DomainError("grid interval must satisfy a < b, got [" + std::to_string(a) + ", " +
                        std::to_string(b) + "]");
    }
    if (n < min_points) {
      throw ArgumentError("grid needs at least 16 interior points, got " + std::to_string(n));
    }
  }

  double a() const { return a_; }
  double b() const { return b_; }
  int size() const { return n_; }
  double length() const { return b_ - a_; }
  double spacing() const { return (b_ - a_) / (n_ + 1); }
  // Zero-based: point(0) is r_1.
  double point(int i) const { return a_ + (i + 1) * spacing(); }

  Eigen::VectorXd points() const {
    Eigen::VectorXd r(n_);
    for (int i = 0; i < n_; ++i) r[i] = point(i);
    return r;
  }

 private:
  double a_;
  double b_;
  int n_;
};

struct AutoGrid {};
struct ExplicitGrid {
  double a;
  double b;
};
using GridPolicy = std::variant<AutoGrid, ExplicitGrid>;

namespace detail {

// Inner wall radius where V climbs back to `target`.
inline double inner_wall(const PotentialModel& model, double r_min, double target) {
  const Interval dom = model.domain();
  double lo = std::max(0.5 * r_min, dom.lo);
  while (model(lo) < target) {
    if (lo <= dom.lo) {
      throw DomainError("potential never reaches threshold + depth on the inner wall");
    }
    lo = std::max(0.5 * lo, dom.lo);
  }
  auto f = [&model, target](double r) { return model(r) - target; };
  double a = lo;
  double b = r_min;
  // Plain bisection keeping V(a) >= target.
  while (b - a > 1e-12 * std::max(1.0, std::abs(a))) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (f(mid) >= 0.0) a = mid; else b = mid;
  }
  return a;
}

}  // namespace detail

// Auto: a on the repulsive wall at V = threshold + depth, b at twice the
// outer turning point of the level 1e-6*depth below threshold.
inline RadialGrid build_grid(const PotentialModel& model, int n, const GridPolicy& policy) {
  if (n < RadialGrid::min_points) {
    throw ArgumentError("grid needs at least 16 interior points, got " + std::to_string(n));
  }
  if (const auto* ex = std::get_if<ExplicitGrid>(&policy)) {
    if (!(ex->a < ex->b)) {
      throw DomainError("explicit grid needs a < b, got [" + std::to_string(ex->a) + ", " +
                        std::to_string(ex->b) + "]");
    }
    if (model.kind() != PotentialKind::inverted_harmonic) {
      const double r_min = potential_minimum(model).r_min;
      if (!(ex->a < r_min && r_min < ex->b)) {
        throw DomainError("explicit grid must enclose the potential minimum");
      }
    }
    const Interval dom = model.domain();
    if (ex->a < dom.lo || ex->b > dom.hi) {
      throw DomainError("explicit grid exceeds the potential domain");
    }
    return RadialGrid(ex->a, ex->b, n);
  }

  const double threshold = dissociation_limit(model);
  if (!std::isfinite(threshold)) {
    throw ArgumentError(std::string("auto grid needs a dissociating potential; ") +
                        to_string(model.kind()) + " requires an explicit interval");
  }
  const auto [r_min, v_min] = potential_minimum(model);
  const double depth = threshold - v_min;
  if (!(depth > 0.0)) throw DomainError("potential well has no depth below threshold");

  const double a = detail::inner_wall(model, r_min, threshold + depth);
  const double r_outer = outer_turning_point(model, threshold - 1e-6 * depth).r_c;
  const double b = 2.0 * r_outer;
  if (b > model.domain().hi) {
    throw DomainError("auto grid edge " + std::to_string(b) +
                      " bohr exceeds the tabulated domain; extend the table");
  }
  return RadialGrid(a, b, n);
}

// Sine-DVR kinetic energy (hbar = 1).  Entries are computed once for i <= j
// and mirrored, so the matrix is symmetric bit for bit.
inline Eigen::MatrixXd kinetic_matrix(const RadialGrid& grid, double mass) {
  if (!(mass > 0.0)) throw ArgumentError("mass must be positive");
  using std::numbers::pi;
  const int n = grid.size();
  const double np1 = n + 1.0;
  const double prefactor = pi * pi / (4.0 * mass * grid.length() * grid.length());
  auto inv_sin2 = [](double x) {
    const double s = std::sin(x);
    return 1.0 / (s * s);
  };

  Eigen::MatrixXd t(n, n);
  for (int j = 0; j < n; ++j) {
    const int jj = j + 1;
    for (int i = 0; i <= j; ++i) {
      const int ii = i + 1;
      double value;
      if (ii == jj) {
        value = (2.0 * np1 * np1 + 1.0) / 3.0 - inv_sin2(ii * pi / np1);
      } else {
        value = inv_sin2(pi * (ii - jj) / (2.0 * np1)) - inv_sin2(pi * (ii + jj) / (2.0 * np1));
      }
      const double sign = ((jj - ii) % 2 == 0) ? 1.0 : -1.0;
      value *= sign * prefactor;
      t(i, j) = value;
      t(j, i) = value;
    }
  }
  return t;
}

struct SolveOptions {
  // States must also lie below this energy; bounds the kept set for
  // potentials that never dissociate.
  double energy_ceiling = std::numeric_limits<double>::infinity();
  // Gap kept below the dissociation limit.
  double threshold_margin = 1e-10;
};

// Bound eigenstates on a grid.  Column k of `wavefunctions` holds psi_k(r_i),
// normalised so that sum_i psi^2 * spacing = 1.
struct BoundStateBasis {
  double mass;
  std::vector<double> energies;
  Eigen::MatrixXd wavefunctions;
  double threshold;
  RadialGrid grid;

  int size() const { return static_cast<int>(energies.size()); }
};

namespace detail {

// Innermost antinode: first local maximum of |psi| above the tail level.
inline void fix_sign(Eigen::Ref<Eigen::VectorXd> psi) {
  const Eigen::Index n = psi.size();
  const double peak = psi.cwiseAbs().maxCoeff();
  const double floor = 1e-6 * peak;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = std::abs(psi[i]);
    if (v < floor) continue;
    const double next = i + 1 < n ? std::abs(psi[i + 1]) : 0.0;
    if (v >= next) {
      if (psi[i] < 0.0) psi = -psi;
      return;
    }
  }
}

}  // namespace detail

inline Eigen::MatrixXd hamiltonian_matrix(const PotentialModel& model, const RadialGrid& grid,
                                          double mass) {
  Eigen::MatrixXd h = kinetic_matrix(grid, mass);
  for (int i = 0; i < grid.size(); ++i) h(i, i) += model(grid.point(i));
  return h;
}

// Dense symmetric diagonalisation of H = T + V; keeps E_n below threshold.
inline BoundStateBasis solve_bound_states(const PotentialModel& model, const RadialGrid& grid,
                                          double mass, const SolveOptions& options = {}) {
  if (!(mass > 0.0)) throw ArgumentError("mass must be positive");
  const Interval dom = model.domain();
  if (grid.a() < dom.lo || grid.b() > dom.hi) {
    throw DomainError("grid [" + std::to_string(grid.a()) + ", " + std::to_string(grid.b()) +
                      "] exceeds the potential domain");
  }
  const int n = grid.size();
  const double limit = dissociation_limit(model);
  const double threshold = std::min(limit - options.threshold_margin, options.energy_ceiling);

  Eigen::MatrixXd h = hamiltonian_matrix(model, grid, mass);
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, n);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const bool all = !std::isfinite(threshold);
  // Gershgorin lower bound on the spectrum.
  const Eigen::VectorXd radius = h.cwiseAbs().rowwise().sum() - h.diagonal().cwiseAbs();
  const double below = (h.diagonal() - radius).minCoeff() - 1.0;
  if (!all && below >= threshold) {
    throw NoBoundStatesError("no eigenvalue below threshold " + std::to_string(threshold));
  }
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, 'V', all ? 'A' : 'V', 'U', n, h.data(), n, below,
      all ? 0.0 : threshold, 0, 0, 0.0, &found, w.data(), z.data(), n, support.data());
  if (info != 0) {
    throw Error("LAPACK dsyevr failed with info = " + std::to_string(info));
  }

  std::vector<double> energies;
  for (lapack_int k = 0; k < found; ++k) {
    if (w[k] < threshold) energies.push_back(w[k]);
  }
  if (energies.empty()) {
    throw NoBoundStatesError("no eigenvalue below threshold " + std::to_string(threshold));
  }
  const int kept = static_cast<int>(energies.size());
  const double drift =
      (z.leftCols(kept).transpose() * z.leftCols(kept) - Eigen::MatrixXd::Identity(kept, kept))
          .cwiseAbs()
          .maxCoeff();
  if (!(drift < 1e-8)) {
    throw Error("eigensolver returned non-orthonormal vectors (max deviation " +
                std::to_string(drift) + "); the BLAS kernel is faulty, try OPENBLAS_CORETYPE=SkylakeX");
  }
  Eigen::MatrixXd psi = z.leftCols(kept) / std::sqrt(grid.spacing());
  for (int k = 0; k < kept; ++k) detail::fix_sign(psi.col(k));
  return BoundStateBasis{mass, std::move(energies), std::move(psi),
                         std::isfinite(threshold) ? threshold : limit, grid};
}

struct LevelShift {
  int n;
  double energy;
  // |dE| after 2N+1 points on the same interval.
  double refine_shift;
  // |dE| after doubling the box at fixed spacing (auto policy only; NaN otherwise).
  double box_shift;
};

inline std::vector<LevelShift> convergence_report(const PotentialModel& model,
                                                  const RadialGrid& grid, double mass,
                                                  const GridPolicy& policy,
                                                  const SolveOptions& options = {}) {
  const BoundStateBasis base = solve_bound_states(model, grid, mass, options);
  const RadialGrid fine(grid.a(), grid.b(), 2 * grid.size() + 1);
  const BoundStateBasis refined = solve_bound_states(model, fine, mass, options);

  std::vector<double> boxed;
  if (std::holds_alternative<AutoGrid>(policy)) {
    const double b2 = grid.a() + 2.0 * grid.length();
    if (b2 <= model.domain().hi) {
      const RadialGrid wide(grid.a(), b2, 2 * grid.size() + 1);
      boxed = solve_bound_states(model, wide, mass, options).energies;
    }
  }

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<LevelShift> shifts;
  for (int k = 0; k < base.size(); ++k) {
    const double e = base.energies[k];
    const double dr = k < refined.size() ? std::abs(refined.energies[k] - e) : nan;
    const double db = k < static_cast<int>(boxed.size()) ? std::abs(boxed[k] - e) : nan;
    shifts.push_back({k, e, dr, db});
  }
  return shifts;
}

}  // namespace vdw_otoc

#endif  // VDW_OTOC_DVR_HPP

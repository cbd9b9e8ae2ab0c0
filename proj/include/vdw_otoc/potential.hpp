#ifndef VDW_OTOC_POTENTIAL_HPP
#define VDW_OTOC_POTENTIAL_HPP

// One-dimensional interatomic potentials in atomic units (bohr, hartree).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "vdw_otoc/errors.hpp"
#include "vdw_otoc/spline.hpp"

namespace vdw_otoc {

enum class PotentialKind { harmonic, inverted_harmonic, lennard_jones, tabulated };

inline const char* to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::harmonic: return "harmonic";
    case PotentialKind::inverted_harmonic: return "inverted_harmonic";
    case PotentialKind::lennard_jones: return "lennard_jones";
    case PotentialKind::tabulated: return "tabulated";
  }
  return "unknown";
}

struct Derivatives {
  double value;
  double first;
  double second;
};

struct Interval {
  double lo;
  double hi;
  bool contains(double r) const { return r >= lo && r <= hi; }
};

// V = k/2 (r - r0)^2
struct Harmonic {
  double center;
  double curvature;
};

// V = -kappa/2 (r - r0)^2
struct InvertedHarmonic {
  double center;
  double curvature_magnitude;
};

// V = C12/r^12 - C6/r^6
struct LennardJones {
  double c6;
  double c12;
};

struct Tabulated {
  std::shared_ptr<const NaturalSpline> spline;
  double asymptote;
};

class PotentialModel {
 public:
  using Params = std::variant<Harmonic, InvertedHarmonic, LennardJones, Tabulated>;

  static PotentialModel harmonic(double center, double curvature) {
    if (!(curvature >= 0.0) || !std::isfinite(center)) {
      throw ArgumentError("harmonic curvature must be non-negative");
    }
    return PotentialModel(Harmonic{center, curvature}, unbounded());
  }

  static PotentialModel inverted_harmonic(double center, double curvature_magnitude) {
    if (!(curvature_magnitude > 0.0) || !std::isfinite(center)) {
      throw ArgumentError("inverted harmonic curvature magnitude must be positive");
    }
    return PotentialModel(InvertedHarmonic{center, curvature_magnitude}, unbounded());
  }

  static PotentialModel lennard_jones(double c6, double c12) {
    if (!(c6 > 0.0) || !(c12 > 0.0)) {
      throw ArgumentError("Lennard-Jones coefficients C6 and C12 must be positive");
    }
    return PotentialModel(LennardJones{c6, c12},
                          {std::numeric_limits<double>::min(), inf()});
  }

  // Natural cubic spline through the samples; no extrapolation.
  static PotentialModel tabulated(std::vector<double> r, std::vector<double> v,
                                  std::optional<double> asymptote = std::nullopt) {
    if (r.size() != v.size()) throw ArgumentError("table columns differ in length");
    if (r.size() < 4) throw TooFewPointsError("tabulated potential needs at least 4 points");
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (!(r[i] > r[i - 1])) {
        throw OrderError(i + 1, "radii must be strictly increasing");
      }
    }
    if (!(r.front() > 0.0)) throw ArgumentError("tabulated radii must be positive");
    const double limit = asymptote.value_or(v.back());
    Interval domain{r.front(), r.back()};
    auto spline = std::make_shared<const NaturalSpline>(std::move(r), std::move(v));
    return PotentialModel(Tabulated{std::move(spline), limit}, domain);
  }

  PotentialKind kind() const { return static_cast<PotentialKind>(params_.index()); }
  const Params& params() const { return params_; }
  Interval domain() const { return domain_; }

  Derivatives evaluate(double r) const {
    if (!(r >= domain_.lo && r <= domain_.hi)) {
      throw DomainError("radius " + std::to_string(r) + " outside potential domain [" +
                        std::to_string(domain_.lo) + ", " + std::to_string(domain_.hi) + "]");
    }
    return std::visit([r](const auto& p) { return eval(p, r); }, params_);
  }

  double operator()(double r) const { return evaluate(r).value; }

 private:
  PotentialModel(Params params, Interval domain) : params_(std::move(params)), domain_(domain) {}

  static double inf() { return std::numeric_limits<double>::infinity(); }
  static Interval unbounded() { return {-inf(), inf()}; }

  static Derivatives eval(const Harmonic& p, double r) {
    const double x = r - p.center;
    return {0.5 * p.curvature * x * x, p.curvature * x, p.curvature};
  }
  static Derivatives eval(const InvertedHarmonic& p, double r) {
    const double x = r - p.center;
    const double k = p.curvature_magnitude;
    return {-0.5 * k * x * x, -k * x, -k};
  }
  static Derivatives eval(const LennardJones& p, double r) {
    const double inv = 1.0 / r;
    const double inv2 = inv * inv;
    const double inv6 = inv2 * inv2 * inv2;
    const double inv12 = inv6 * inv6;
    return {p.c12 * inv12 - p.c6 * inv6,
            (-12.0 * p.c12 * inv12 + 6.0 * p.c6 * inv6) * inv,
            (156.0 * p.c12 * inv12 - 42.0 * p.c6 * inv6) * inv2};
  }
  static Derivatives eval(const Tabulated& p, double r) {
    return {p.spline->value(r), p.spline->first(r), p.spline->second(r)};
  }

  Params params_;
  Interval domain_;
};

inline Derivatives evaluate_with_derivs(const PotentialModel& model, double r) {
  return model.evaluate(r);
}

// C12 that gives a Lennard-Jones well of the requested depth.
inline double lj_c12_for_depth(double c6, double depth) {
  if (!(c6 > 0.0) || !(depth > 0.0)) {
    throw ArgumentError("C6 and depth must be positive");
  }
  return c6 * c6 / (4.0 * depth);
}

// +inf for harmonic (never dissociates), -inf for the inverted oscillator.
inline double dissociation_limit(const PotentialModel& model) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (model.kind()) {
    case PotentialKind::harmonic: return inf;
    case PotentialKind::inverted_harmonic: return -inf;
    case PotentialKind::lennard_jones: return 0.0;
    case PotentialKind::tabulated: return std::get<Tabulated>(model.params()).asymptote;
  }
  return inf;
}

namespace detail {

// Bisection on a sign-changing bracket down to `width`, then one secant step
// inside the final bracket.  Keeps bisecting if the residual is still above
// `residual_tol`.
template <class F>
double refine_root(F&& f, double lo, double hi, double width, double residual_tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw BracketError("root is not bracketed");
  auto tol = [width](double a, double b) { return std::abs(b - a) <= width; };
  auto [a, b] = boost::math::tools::bisect(f, lo, hi, tol);
  double fa = f(a);
  double fb = f(b);
  double best = std::abs(fa) < std::abs(fb) ? a : b;
  if (fb != fa) {
    const double s = a - fa * (b - a) / (fb - fa);
    if (s >= std::min(a, b) && s <= std::max(a, b) && std::abs(f(s)) < std::abs(f(best))) {
      best = s;
    }
  }
  // Continue to the representable limit when the polish is not enough.
  while (std::abs(f(best)) > residual_tol) {
    const double mid = 0.5 * (a + b);
    if (mid <= std::min(a, b) || mid >= std::max(a, b)) break;
    const double fm = f(mid);
    if ((fm > 0.0) == (fa > 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
      fb = fm;
    }
    best = std::abs(fa) < std::abs(fb) ? a : b;
  }
  return best;
}

// Minimum of a sampled spline: best knot, then the zero of V' next to it.
inline std::pair<double, double> tabulated_minimum(const PotentialModel& model) {
  const auto& s = *std::get<Tabulated>(model.params()).spline;
  const auto x = s.knots();
  const auto y = s.values();
  const std::size_t k =
      static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  if (k == 0 || k + 1 == x.size()) {
    throw NoMinimumError("tabulated potential has no interior minimum");
  }
  auto slope = [&s](double r) { return s.first(r); };
  double lo = x[k - 1];
  double hi = x[k + 1];
  if (slope(lo) >= 0.0 || slope(hi) <= 0.0) {
    // The sampled minimum lies on a knot with a flat neighbour; widen once.
    lo = x[k > 1 ? k - 2 : 0];
    hi = x[std::min(k + 2, x.size() - 1)];
  }
  const double r = refine_root(slope, lo, hi, 1e-13, 1e-12);
  return {r, s.value(r)};
}

}  // namespace detail

struct Minimum {
  double r_min;
  double v_min;
};

inline Minimum potential_minimum(const PotentialModel& model) {
  switch (model.kind()) {
    case PotentialKind::harmonic: {
      const auto& p = std::get<Harmonic>(model.params());
      return {p.center, 0.0};
    }
    case PotentialKind::inverted_harmonic:
      throw NoMinimumError("inverted harmonic potential has no minimum");
    case PotentialKind::lennard_jones: {
      const auto& p = std::get<LennardJones>(model.params());
      const double r = std::pow(2.0 * p.c12 / p.c6, 1.0 / 6.0);
      return {r, model(r)};
    }
    case PotentialKind::tabulated: {
      auto [r, v] = detail::tabulated_minimum(model);
      return {r, v};
    }
  }
  throw NoMinimumError("unknown potential kind");
}

enum class TurningBranch { outer };

struct TurningPoint {
  double r_c;
  double energy;
  TurningBranch branch = TurningBranch::outer;
};

// Largest root of V(r) = E.
inline TurningPoint outer_turning_point(const PotentialModel& model, double energy) {
  if (!std::isfinite(energy)) throw NoRootError("energy must be finite");
  switch (model.kind()) {
    case PotentialKind::harmonic: {
      const auto& p = std::get<Harmonic>(model.params());
      if (energy < 0.0 || p.curvature == 0.0) {
        throw NoRootError("energy below the harmonic minimum or flat potential");
      }
      return {p.center + std::sqrt(2.0 * energy / p.curvature), energy};
    }
    case PotentialKind::inverted_harmonic: {
      const auto& p = std::get<InvertedHarmonic>(model.params());
      if (energy > 0.0) throw NoRootError("energy above the inverted-oscillator barrier");
      return {p.center + std::sqrt(-2.0 * energy / p.curvature_magnitude), energy};
    }
    case PotentialKind::lennard_jones:
    case PotentialKind::tabulated: break;
  }

  const auto [r_min, v_min] = potential_minimum(model);
  const double v_inf = dissociation_limit(model);
  if (energy < v_min || energy >= v_inf) {
    throw NoRootError("energy " + std::to_string(energy) + " outside (V_min, V_inf)");
  }
  if (energy == v_min) return {r_min, energy};

  const Interval dom = model.domain();
  double hi = 2.0 * r_min;
  if (model.kind() == PotentialKind::tabulated) {
    hi = dom.hi;
    if (model(hi) < energy) {
      throw BracketError("table ends before V reaches E; extend the table outward");
    }
  } else {
    while (model(hi) < energy) {
      hi *= 2.0;
      if (hi > 1e12) throw BracketError("outer turning point beyond 1e12 bohr");
    }
  }
  auto f = [&model, energy](double r) { return model(r) - energy; };
  const double r_c = detail::refine_root(f, r_min, hi, 1e-10, 1e-12);
  return {r_c, energy};
}

// Radius beyond r_min where V'' changes sign from positive to negative.
inline double curvature_inflection(const PotentialModel& model) {
  switch (model.kind()) {
    case PotentialKind::harmonic:
    case PotentialKind::inverted_harmonic:
      throw NoInflectionError("quadratic potentials have constant curvature");
    case PotentialKind::lennard_jones: {
      const auto& p = std::get<LennardJones>(model.params());
      return std::pow(26.0 * p.c12 / (7.0 * p.c6), 1.0 / 6.0);
    }
    case PotentialKind::tabulated: break;
  }
  // V'' of a cubic spline is linear between knots.
  const auto& s = *std::get<Tabulated>(model.params()).spline;
  const double r_min = potential_minimum(model).r_min;
  const auto x = s.knots();
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i + 1] <= r_min) continue;
    const double left = std::max(x[i], r_min);
    const double c0 = s.second(left);
    const double c1 = s.second(x[i + 1]);
    if (c0 > 0.0 && c1 < 0.0) return left + c0 * (x[i + 1] - left) / (c0 - c1);
    if (c0 > 0.0 && c1 == 0.0 && i + 2 < x.size() && s.second(x[i + 2]) < 0.0) {
      return x[i + 1];
    }
  }
  throw NoInflectionError("V'' does not change sign beyond the minimum");
}

// Reads "r V" rows (bohr, hartree).  '#' starts a comment line; blank lines
// are skipped.
inline PotentialModel load_tabulated(std::istream& in,
                                     std::optional<double> asymptote = std::nullopt) {
  std::vector<double> r;
  std::vector<double> v;
  std::string line;
  std::size_t number = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; };

  while (std::getline(in, line)) {
    ++number;
    std::string_view rest(line);
    while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
    while (!rest.empty() && is_space(rest.back())) rest.remove_suffix(1);
    if (rest.empty() || rest.front() == '#') continue;

    double cols[2];
    for (double& c : cols) {
      while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
      if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), c);
      if (ec != std::errc() || (ptr != rest.data() + rest.size() && !is_space(*ptr))) {
        throw ParseError(number, "expected two numbers \"r V\", got \"" + line + "\"");
      }
      rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
    }
    if (!rest.empty() || !std::isfinite(cols[0]) || !std::isfinite(cols[1])) {
      throw ParseError(number, "expected two numbers \"r V\", got \"" + line + "\"");
    }
    if (!r.empty() && !(cols[0] > r.back())) {
      throw OrderError(number, "radius " + std::to_string(cols[0]) + " does not increase");
    }
    r.push_back(cols[0]);
    v.push_back(cols[1]);
  }
  if (r.size() < 4) {
    throw TooFewPointsError("tabulated potential needs at least 4 rows, got " +
                            std::to_string(r.size()));
  }
  return PotentialModel::tabulated(std::move(r), std::move(v), asymptote);
}

}  // namespace vdw_otoc

#endif  // VDW_OTOC_POTENTIAL_HPP

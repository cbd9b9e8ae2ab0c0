#ifndef VDW_OTOC_SENSITIVITY_HPP
#define VDW_OTOC_SENSITIVITY_HPP

// Growth-rate extraction from OTOC series and the local (turning-point)
// predictions it is compared against.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "vdw_otoc/errors.hpp"
#include "vdw_otoc/potential.hpp"
#include "vdw_otoc/spectral.hpp"

namespace vdw_otoc {

struct ClassicalSensitivity {
  double lambda_c;
  double r_c;
  // Sign of V''(r_c): +1 oscillatory, -1 exponentially sensitive, 0 flat.
  int curvature_sign;
};

inline ClassicalSensitivity classical_sensitivity(const PotentialModel& model, double energy,
                                                  double mass) {
  if (!(mass > 0.0)) throw ArgumentError("mass must be positive");
  const TurningPoint tp = outer_turning_point(model, energy);
  const double curvature = model.evaluate(tp.r_c).second;
  const int sign = curvature > 0.0 ? 1 : (curvature < 0.0 ? -1 : 0);
  return {std::sqrt(std::abs(curvature) / mass), tp.r_c, sign};
}

// Position of a trajectory started at (r0, p0) in the quadratic expansion of
// V about the outer turning point:
//   r(t) = r_d + (r0 - r_d) cos(wt) + p0/(mu w) sin(wt)     for V''(r_c) > 0
// and cosh/sinh for V''(r_c) < 0, with r_d = r_c - V'(r_c)/V''(r_c).
inline std::vector<double> classical_quadratic_trajectory(const PotentialModel& model,
                                                          double energy, double mass, double r0,
                                                          double p0,
                                                          std::span<const double> times) {
  if (!(mass > 0.0)) throw ArgumentError("mass must be positive");
  const double r_c = outer_turning_point(model, energy).r_c;
  if (std::abs(r0 - r_c) > 0.1 * std::abs(r_c)) {
    throw ArgumentError("r0 must lie within 10% of the outer turning point");
  }
  const Derivatives d = model.evaluate(r_c);
  if (std::abs(d.second) < 1e-14) {
    throw CurvatureZeroError("V''(r_c) vanishes; quadratic expansion is degenerate");
  }
  const double r_d = r_c - d.first / d.second;
  const double omega = std::sqrt(std::abs(d.second) / mass);
  const double offset = r0 - r_d;
  const double kick = p0 / (mass * omega);

  std::vector<double> r;
  r.reserve(times.size());
  for (const double t : times) {
    const double x = omega * t;
    // Written relative to r0 so that t = 0 reproduces r0 exactly.
    if (d.second > 0.0) {
      r.push_back(r0 + offset * (std::cos(x) - 1.0) + kick * std::sin(x));
    } else {
      r.push_back(r0 + offset * (std::cosh(x) - 1.0) + kick * std::sinh(x));
    }
  }
  return r;
}

// Where the Airy-function wavefunction peaks, in units of r_bar inside r_c.
enum class AiryMaximum { approximate, exact };

inline double airy_offset(AiryMaximum choice) {
  // First zero of Ai'(z) is at z = -1.0187929716474710.
  return choice == AiryMaximum::exact ? 1.0187929716474710 : 1.0;
}

struct SemiclassicalSensitivity {
  double lambda_sc;
  double r_m;
  double r_bar;
};

// Linearising V about r_c gives an Airy equation with length scale
// r_bar = (2 mu |V'(r_c)|)^(-1/3); the wavefunction peaks near r_m = r_c - r_bar.
inline SemiclassicalSensitivity semiclassical_sensitivity(
    const PotentialModel& model, double energy, double mass,
    AiryMaximum airy = AiryMaximum::approximate) {
  if (!(mass > 0.0)) throw ArgumentError("mass must be positive");
  const TurningPoint tp = outer_turning_point(model, energy);
  const double slope = model.evaluate(tp.r_c).first;
  bool at_minimum = slope == 0.0;
  if (!at_minimum && model.kind() != PotentialKind::inverted_harmonic) {
    at_minimum = tp.r_c == potential_minimum(model).r_min;
  }
  if (at_minimum) {
    throw DerivativeZeroError("V'(r_c) vanishes at the bottom of the well");
  }
  const double r_bar = std::cbrt(1.0 / (2.0 * mass * std::abs(slope)));
  const double r_m = tp.r_c - airy_offset(airy) * r_bar;
  const double curvature = model.evaluate(r_m).second;
  return {std::sqrt(std::abs(curvature) / mass), r_m, r_bar};
}

struct FitOptions {
  double r2_min = 0.98;
  int min_points = 20;
  // Every min_points-long sub-fit inside a window must reach this fraction of
  // the window slope.
  double slope_uniformity = 0.9;
  // A maximum of ln C ends the search region when its prominence is at least
  // this fraction of the full range of ln C.
  double prominence_fraction = 0.1;
};

struct GrowthWindow {
  double t_start;
  double t_end;
  int points;
  double r2;
  // Indices into the series, inclusive.
  std::size_t first;
  std::size_t last;
};

namespace detail {

struct LogSeries {
  std::vector<double> t;
  std::vector<double> y;
  std::vector<std::size_t> index;
};

// ln C over positive samples only.
inline LogSeries log_series(const OtocSeries& series) {
  LogSeries out;
  for (std::size_t j = 0; j < series.values.size(); ++j) {
    const double c = series.values[j];
    if (c > 0.0 && std::isfinite(c) && std::isfinite(series.times[j])) {
      out.t.push_back(series.times[j]);
      out.y.push_back(std::log(c));
      out.index.push_back(j);
    }
  }
  return out;
}

// Topographic prominence of a local maximum at j.
inline double prominence(std::span<const double> y, std::size_t j) {
  const std::size_t n = y.size();
  double left_min = y[j];
  for (std::size_t k = j; k-- > 0;) {
    if (y[k] > y[j]) break;
    left_min = std::min(left_min, y[k]);
  }
  double right_min = y[j];
  for (std::size_t k = j + 1; k < n; ++k) {
    if (y[k] > y[j]) break;
    right_min = std::min(right_min, y[k]);
  }
  // A side with no samples does not constrain the base.
  if (j == 0) return y[j] - right_min;
  if (j + 1 == n) return y[j] - left_min;
  return y[j] - std::max(left_min, right_min);
}

// Index of the first maximum of y that stands out at the scale of the whole
// series.
inline std::size_t first_major_maximum(std::span<const double> y, double fraction) {
  const std::size_t n = y.size();
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return n - 1;
  for (std::size_t j = 0; j < n; ++j) {
    const bool left_ok = j == 0 || y[j] >= y[j - 1];
    const bool right_ok = j + 1 == n || y[j] >= y[j + 1];
    if (left_ok && right_ok && prominence(y, j) >= fraction * span) return j;
  }
  return n - 1;
}

// Running sums for O(1) least-squares over any index range.
class PrefixFit {
 public:
  PrefixFit(std::span<const double> t, std::span<const double> y)
      : origin_(t.empty() ? 0.0 : t.front()) {
    const std::size_t n = t.size();
    st_.assign(n + 1, 0.0L);
    sy_ = stt_ = sty_ = syy_ = st_;
    for (std::size_t k = 0; k < n; ++k) {
      const long double x = static_cast<long double>(t[k]) - origin_;
      const long double v = y[k];
      st_[k + 1] = st_[k] + x;
      sy_[k + 1] = sy_[k] + v;
      stt_[k + 1] = stt_[k] + x * x;
      sty_[k + 1] = sty_[k] + x * v;
      syy_[k + 1] = syy_[k] + v * v;
    }
  }

  // Slope and R^2 of y against t on [i, j].
  std::pair<double, double> fit(std::size_t i, std::size_t j) const {
    const long double n = static_cast<long double>(j - i + 1);
    const long double st = st_[j + 1] - st_[i];
    const long double sy = sy_[j + 1] - sy_[i];
    const long double sxx = (stt_[j + 1] - stt_[i]) - st * st / n;
    const long double sxy = (sty_[j + 1] - sty_[i]) - st * sy / n;
    const long double syy = (syy_[j + 1] - syy_[i]) - sy * sy / n;
    if (!(sxx > 0.0L)) return {0.0, 0.0};
    const long double slope = sxy / sxx;
    const long double r2 = syy > 0.0L ? (sxy * sxy) / (sxx * syy) : 0.0L;
    return {static_cast<double>(slope), static_cast<double>(std::min(r2, 1.0L))};
  }

 private:
  long double origin_;
  std::vector<long double> st_, sy_, stt_, sty_, syy_;
};

}  // namespace detail

// Longest stretch of log-linear growth before the first major maximum of
// ln C.  Ties go to the higher R^2, then the earlier start.
inline GrowthWindow detect_growth_window(const OtocSeries& series, const FitOptions& options = {}) {
  const int w = options.min_points;
  if (w < 3) throw ArgumentError("min_points must be at least 3");
  if (series.times.size() != series.values.size()) {
    throw ArgumentError("series times and values differ in length");
  }
  if (series.values.size() < 4 * static_cast<std::size_t>(w)) {
    throw ArgumentError("series needs at least 4*min_points samples");
  }
  const detail::LogSeries log = detail::log_series(series);
  if (log.y.size() < static_cast<std::size_t>(w)) {
    throw NoWindowError("too few positive samples for a growth window");
  }
  const std::size_t end = detail::first_major_maximum(log.y, options.prominence_fraction);
  const std::size_t count = end + 1;
  if (count < static_cast<std::size_t>(w)) {
    throw NoWindowError("no growth before the first major maximum of ln C");
  }

  const detail::PrefixFit sums(std::span(log.t).first(count), std::span(log.y).first(count));
  const std::size_t subs = count - w + 1;
  std::vector<double> local(subs);
  for (std::size_t i = 0; i < subs; ++i) local[i] = sums.fit(i, i + w - 1).first;

  bool found = false;
  std::tuple<std::size_t, double, std::size_t> best_key{0, 0.0, 0};
  std::size_t best_i = 0, best_j = 0;
  double best_r2 = 0.0;
  for (std::size_t i = 0; i < subs; ++i) {
    double min_local = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + w - 1; j < count; ++j) {
      min_local = std::min(min_local, local[j - w + 1]);
      if (min_local <= 0.0) break;
      const auto [slope, r2] = sums.fit(i, j);
      if (!(slope > 0.0) || r2 < options.r2_min) continue;
      if (min_local < options.slope_uniformity * slope) continue;
      const std::size_t length = j - i + 1;
      // Larger length, then larger R^2, then smaller start.
      const bool better =
          !found || length > std::get<0>(best_key) ||
          (length == std::get<0>(best_key) &&
           (r2 > std::get<1>(best_key) || (r2 == std::get<1>(best_key) && i < best_i)));
      if (better) {
        found = true;
        best_key = {length, r2, i};
        best_i = i;
        best_j = j;
        best_r2 = r2;
      }
    }
  }
  if (!found) throw NoWindowError("no exponential growth window (regular dynamics)");
  return GrowthWindow{log.t[best_i],
                      log.t[best_j],
                      static_cast<int>(best_j - best_i + 1),
                      best_r2,
                      log.index[best_i],
                      log.index[best_j]};
}

struct ExponentialFit {
  double alpha;
  double lambda_otoc;
  // Half-width of the 95% confidence interval on lambda_otoc.
  double ci95;
  double delta_t;
  double lambda_dt_product;
  int points;
};

// Ordinary least squares of ln C against t over the window.
inline ExponentialFit fit_exponential(const OtocSeries& series, const GrowthWindow& window) {
  if (window.last >= series.values.size() || window.first > window.last) {
    throw ArgumentError("window does not belong to this series");
  }
  std::vector<double> t, y;
  for (std::size_t j = window.first; j <= window.last; ++j) {
    const double c = series.values[j];
    if (c > 0.0 && std::isfinite(c)) {
      t.push_back(series.times[j]);
      y.push_back(std::log(c));
    }
  }
  const std::size_t n = t.size();
  if (n < 3) throw DegenerateFitError("exponential fit needs at least 3 positive samples");

  double t_mean = 0.0, y_mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    t_mean += t[k];
    y_mean += y[k];
  }
  t_mean /= static_cast<double>(n);
  y_mean /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (t[k] - t_mean) * (t[k] - t_mean);
    sxy += (t[k] - t_mean) * (y[k] - y_mean);
  }
  if (!(sxx > 0.0)) throw DegenerateFitError("window has no time extent");
  const double slope = sxy / sxx;
  const double intercept = y_mean - slope * t_mean;
  double ssr = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double res = y[k] - (intercept + slope * t[k]);
    ssr += res * res;
  }
  const double dof = static_cast<double>(n - 2);
  const double stderr_slope = std::sqrt(ssr / dof / sxx);
  const boost::math::students_t dist(dof);
  const double quantile = boost::math::quantile(dist, 0.975);
  const double delta_t = window.t_end - window.t_start;
  return ExponentialFit{std::exp(intercept), slope,   quantile * stderr_slope,
                        delta_t,             slope * delta_t, static_cast<int>(n)};
}

}  // namespace vdw_otoc

#endif  // VDW_OTOC_SENSITIVITY_HPP

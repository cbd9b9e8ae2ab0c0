#ifndef VDW_OTOC_SPECTRAL_HPP
#define VDW_OTOC_SPECTRAL_HPP

// Matrix elements over bound states and the out-of-time-order correlator
//   C_n(t) = -<n|[r(t), p(0)]^2|n>   (hbar = 1)
// evaluated from position matrix elements alone, using p_nl = i mu E_nl r_nl.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vdw_otoc/dvr.hpp"
#include "vdw_otoc/errors.hpp"

namespace vdw_otoc {

struct MatrixElements {
  // r(n, l) = <n|r|l>, stored symmetric.
  Eigen::MatrixXd r;
  std::vector<double> energies;
  double mass;

  int size() const { return static_cast<int>(energies.size()); }
};

inline MatrixElements position_matrix(const BoundStateBasis& basis) {
  const Eigen::VectorXd radii = basis.grid.points();
  const Eigen::MatrixXd& psi = basis.wavefunctions;
  const Eigen::MatrixXd weighted = (psi.array().colwise() * radii.array()).matrix();
  const int nb = basis.size();
  const double dr = basis.grid.spacing();

  Eigen::MatrixXd r(nb, nb);
  for (int l = 0; l < nb; ++l) {
    for (int n = 0; n <= l; ++n) {
      const double value = psi.col(n).dot(weighted.col(l)) * dr;
      r(n, l) = value;
      r(l, n) = value;
    }
  }
  return MatrixElements{std::move(r), basis.energies, basis.mass};
}

// Real matrix q with p_nl = i q_nl; q_nl = mu (E_n - E_l) r_nl.
inline Eigen::MatrixXd momentum_from_position(const MatrixElements& elements) {
  const int nb = elements.size();
  Eigen::MatrixXd q(nb, nb);
  for (int l = 0; l < nb; ++l) {
    for (int n = 0; n < nb; ++n) {
      q(n, l) = elements.mass * (elements.energies[n] - elements.energies[l]) * elements.r(n, l);
    }
  }
  return q;
}

// Independent route to q_nl = -<n|d/dr|l> for the lowest `count` states: each
// grid wavefunction is expanded in the box sines it represents exactly and
// differentiated analytically at the grid points.
inline Eigen::MatrixXd momentum_direct(const BoundStateBasis& basis, int count = -1) {
  const int nb = count < 0 ? basis.size() : std::min(count, basis.size());
  const int n = basis.grid.size();
  const double np1 = n + 1.0;
  const double length = basis.grid.length();
  // Transposed so that each grid point is a contiguous column.
  const Eigen::MatrixXd psi_t = basis.wavefunctions.leftCols(nb).transpose();

  // Sine coefficients: c_m = 2/(N+1) sum_i psi_i sin(m pi i/(N+1)).
  Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(nb, n);
  for (int m = 1; m <= n; ++m) {
    for (int i = 1; i <= n; ++i) {
      // Reduce the argument modulo 2(N+1) for accuracy.
      const long phase = (static_cast<long>(m) * i) % (2 * (n + 1));
      coeff.col(m - 1) += std::sin(std::numbers::pi * phase / np1) * psi_t.col(i - 1);
    }
  }
  coeff *= 2.0 / np1;
  Eigen::MatrixXd derivative = Eigen::MatrixXd::Zero(nb, n);
  for (int m = 1; m <= n; ++m) {
    const double k = m * std::numbers::pi / length;
    for (int i = 1; i <= n; ++i) {
      const long phase = (static_cast<long>(m) * i) % (2 * (n + 1));
      derivative.col(i - 1) += (k * std::cos(std::numbers::pi * phase / np1)) * coeff.col(m - 1);
    }
  }
  return -(psi_t * derivative.transpose()) * basis.grid.spacing();
}

struct OtocSeries {
  int n;
  std::vector<double> times;
  std::vector<double> values;
  int truncation;
  // Largest relative change against a reduced truncation, or NaN when not
  // evaluated.
  double convergence_estimate;
};

namespace detail {

inline void check_otoc_args(int n, int nb, int truncation) {
  if (n < 0 || n >= nb) {
    throw IndexError("state " + std::to_string(n) + " outside 0.." + std::to_string(nb - 1));
  }
  if (truncation > nb || truncation < 1) {
    throw IndexError("truncation " + std::to_string(truncation) + " outside 1.." +
                     std::to_string(nb));
  }
  if (truncation < n + 2) {
    throw TruncationError("truncation " + std::to_string(truncation) + " cannot represent state " +
                          std::to_string(n) + " (needs at least n + 2)");
  }
}

}  // namespace detail

// C_n(t) for each time with sums over the lowest `truncation` states.
//
// With e_k = E_k - E_n and A_k = r_nk exp(-i e_k t), B_k = -r_nk e_k exp(i e_k t):
//   b_nl / mu = sum_k r_lk (e_k A_k) - e_l sum_k r_lk A_k - exp(-i e_l t) sum_k r_lk B_k
// which is three real matrix products per block of times.
inline std::vector<double> otoc_values(int n, std::span<const double> times,
                                       const MatrixElements& elements, int truncation) {
  detail::check_otoc_args(n, elements.size(), truncation);
  const int k = truncation;
  const Eigen::MatrixXd r = elements.r.topLeftCorner(k, k);
  Eigen::VectorXd e(k);
  for (int i = 0; i < k; ++i) e[i] = elements.energies[i] - elements.energies[n];
  const Eigen::VectorXd rn = r.col(n);

  std::vector<double> out(times.size());
  constexpr std::size_t block = 512;
  for (std::size_t start = 0; start < times.size(); start += block) {
    const int width = static_cast<int>(std::min(block, times.size() - start));
    Eigen::MatrixXd ar(k, width), ai(k, width), er(k, width), ei(k, width), br(k, width),
        bi(k, width);
    Eigen::MatrixXd cos_l(k, width), sin_l(k, width);
    for (int j = 0; j < width; ++j) {
      const double t = times[start + j];
      for (int i = 0; i < k; ++i) {
        const double phase = e[i] * t;
        const double c = std::cos(phase);
        const double s = std::sin(phase);
        cos_l(i, j) = c;
        sin_l(i, j) = s;
        ar(i, j) = rn[i] * c;
        ai(i, j) = -rn[i] * s;
        er(i, j) = e[i] * ar(i, j);
        ei(i, j) = e[i] * ai(i, j);
        br(i, j) = -rn[i] * e[i] * c;
        bi(i, j) = -rn[i] * e[i] * s;
      }
    }
    const Eigen::MatrixXd ur = r * er, ui = r * ei;
    const Eigen::MatrixXd vr = r * ar, vi = r * ai;
    const Eigen::MatrixXd wr = r * br, wi = r * bi;
    for (int j = 0; j < width; ++j) {
      double sum = 0.0;
      for (int l = 0; l < k; ++l) {
        // exp(-i e_l t) * w = (c w_r + s w_i) + i (c w_i - s w_r)
        const double c = cos_l(l, j);
        const double s = sin_l(l, j);
        const double re = ur(l, j) - e[l] * vr(l, j) - (c * wr(l, j) + s * wi(l, j));
        const double im = ui(l, j) - e[l] * vi(l, j) - (c * wi(l, j) - s * wr(l, j));
        sum += re * re + im * im;
      }
      out[start + j] = elements.mass * elements.mass * sum;
    }
  }
  return out;
}

// Reduced truncation used by the convergence probe.
inline int reduced_truncation(int nb) { return nb - std::max(2, nb / 10); }

// Sup over the probe times of the relative change in C_n between the full
// bound basis and a truncation smaller by max(2, N_b/10), combined with the
// completeness defect |C_n(0) - 1|.  Infinite when the reduced basis cannot
// represent the state.
inline double otoc_truncation_error(int n, const MatrixElements& elements,
                                    std::span<const double> probe_times) {
  const int nb = elements.size();
  if (nb < 8) throw ArgumentError("truncation probe needs at least 8 bound states");
  if (n < 0 || n >= nb) {
    throw IndexError("state " + std::to_string(n) + " outside 0.." + std::to_string(nb - 1));
  }
  const int reduced = reduced_truncation(nb);
  if (reduced < n + 2) return std::numeric_limits<double>::infinity();

  const std::vector<double> full = otoc_values(n, probe_times, elements, nb);
  const std::vector<double> cut = otoc_values(n, probe_times, elements, reduced);
  const double zero = 0.0;
  double estimate = std::abs(otoc_values(n, std::span(&zero, 1), elements, nb)[0] - 1.0);
  for (std::size_t j = 0; j < full.size(); ++j) {
    const double denom = std::abs(full[j]);
    const double rel = denom > 0.0 ? std::abs(full[j] - cut[j]) / denom
                                   : (cut[j] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    estimate = std::max(estimate, rel);
  }
  return estimate;
}

// Evenly spaced subset of a time grid used for truncation probes.
inline std::vector<double> probe_subset(std::span<const double> times, std::size_t count = 16) {
  std::vector<double> probes;
  if (times.empty()) return probes;
  count = std::min(count, times.size());
  if (count == 1) return {times.front()};
  for (std::size_t j = 0; j < count; ++j) {
    probes.push_back(times[j * (times.size() - 1) / (count - 1)]);
  }
  return probes;
}

inline OtocSeries otoc_series(int n, std::span<const double> times,
                              const MatrixElements& elements, int truncation) {
  OtocSeries series{n, {times.begin(), times.end()}, otoc_values(n, times, elements, truncation),
                    truncation, std::numeric_limits<double>::quiet_NaN()};
  if (truncation == elements.size() && elements.size() >= 8) {
    series.convergence_estimate = otoc_truncation_error(n, elements, probe_subset(times));
  }
  return series;
}

}  // namespace vdw_otoc

#endif  // VDW_OTOC_SPECTRAL_HPP

#ifndef VDW_OTOC_SPLINE_HPP
#define VDW_OTOC_SPLINE_HPP

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <memory>
#include <span>
#include <vector>

#include "vdw_otoc/errors.hpp"

namespace vdw_otoc {

// Natural cubic spline through (x_i, y_i), backed by GSL.  Evaluation never
// touches shared mutable state, so one instance may be read from any number
// of threads.
class NaturalSpline {
 public:
  NaturalSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size()) {
      throw ArgumentError("spline abscissa and ordinate sizes differ");
    }
    if (x_.size() < 3) {
      throw ArgumentError("natural spline needs at least 3 knots");
    }
    static const bool handler_off = [] {
      gsl_set_error_handler_off();
      return true;
    }();
    (void)handler_off;
    spline_.reset(gsl_spline_alloc(gsl_interp_cspline, x_.size()));
    if (!spline_ ||
        gsl_spline_init(spline_.get(), x_.data(), y_.data(), x_.size()) !=
            GSL_SUCCESS) {
      throw ArgumentError("spline knots must be strictly increasing");
    }
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  std::span<const double> knots() const { return x_; }
  std::span<const double> values() const { return y_; }

  double value(double x) const { return gsl_spline_eval(spline_.get(), x, nullptr); }
  double first(double x) const {
    return gsl_spline_eval_deriv(spline_.get(), x, nullptr);
  }
  double second(double x) const {
    return gsl_spline_eval_deriv2(spline_.get(), x, nullptr);
  }

 private:
  struct Free {
    void operator()(gsl_spline* s) const { gsl_spline_free(s); }
  };

  std::vector<double> x_;
  std::vector<double> y_;
  std::unique_ptr<gsl_spline, Free> spline_;
};

}  // namespace vdw_otoc

#endif  // VDW_OTOC_SPLINE_HPP

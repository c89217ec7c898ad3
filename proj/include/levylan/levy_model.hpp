#pragma once

// Levy measure families m(u) = C_pm |u|^{-alpha-1} f(u) with an even taper
// factor f, f(0) = 1.  Everything downstream (exponent, densities, simulator,
// weight) consumes the spec through this header.

#include <string>
#include <vector>

#include "levylan/common.hpp"

namespace levylan {

enum class Taper { none, exp_abs, gauss, sech_like, smooth_damp };

Taper taper_from_string(const std::string& s);
const char* to_string(Taper t);

struct LevyMeasureSpec {
  double alpha = 1.5;
  double c_plus = 1.0;
  double c_minus = 1.0;
  Taper taper = Taper::none;
  double u1 = 1.0;    // smooth_damp support half-width, unused otherwise
  double u0 = 1.0;    // split radius between the inner and outer regimes
  double delta = 0.5; // outer moment exponent margin

  void validate() const;  // throws config_error naming the field
  bool symmetric() const { return c_plus == c_minus; }
  // radius beyond which m vanishes (+inf unless smooth_damp)
  double support_radius() const;
  double side_coef(int sign) const { return sign > 0 ? c_plus : c_minus; }
};

struct Theta {
  double beta = 0.0;
  double gamma = 1.0;
  void validate() const;
};

// taper factor f(u), its log derivative L = f'/f, and L'
double taper_factor(const LevyMeasureSpec& spec, double u);
double taper_log_deriv(const LevyMeasureSpec& spec, double u);
double taper_log_deriv2(const LevyMeasureSpec& spec, double u);

double m_density(const LevyMeasureSpec& spec, double u);
double m_prime(const LevyMeasureSpec& spec, double u);
// tau = |u m'(u)| / m(u); constant alpha+1 for taper=none
double tau(const LevyMeasureSpec& spec, double u);
// chi = -u^2 m'/m - 2u = (alpha-1)u - u^2 L(u); odd in u for every taper
double chi(const LevyMeasureSpec& spec, double u);

// int_{lo < |u| <= hi} u^k m(u) du, signed (odd k sees the asymmetry).
// hi may be +inf; requires either a decaying taper or k < alpha there.
// lo = 0 requires k > alpha.
double moment_integral(const LevyMeasureSpec& spec, int k, double lo,
                       double hi);
double mass_above(const LevyMeasureSpec& spec, double eps);
// int_{lo < |u| <= hi} chi(u) m(u) du; zero for symmetric specs
double chi_integral(const LevyMeasureSpec& spec, double lo, double hi);

// drift correction t * int_{t^{1/alpha} < |u| <= 1} u m(u) du.
// Exact 0 for symmetric specs; empty region (t >= 1) reports through the flag.
double c_t(const LevyMeasureSpec& spec, double t, bool* empty_region = nullptr);

struct H1Report {
  bool pass = false;
  double tol = 0.0;
  double last_decade_dev = 0.0;          // max deviation at the smallest decade
  std::vector<double> decade_dev;        // per decade, largest |u| first
};
// ratio m(u) / (C_pm |u|^{-alpha_ref-1}) -> 1 along shrinking decades.
// alpha_ref = 0 means spec.alpha; override exposes index mismatch.
H1Report verify_h1(const LevyMeasureSpec& spec, double tol = 1e-6,
                   double alpha_ref = 0.0, int decades = 6);

struct H2Report {
  bool pass = false;
  double sup_tau_inner = 0.0;   // sup of tau on {0 < |u| <= u0}
  double tail_integral = 0.0;   // int_{|u| > u0} tau^{2+delta} dmu
  double tail_err = 0.0;
  bool converged = false;
  std::string diagnostic;       // set when decay is not detected
};
H2Report verify_h2(const LevyMeasureSpec& spec);

}  // namespace levylan

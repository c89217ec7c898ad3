#pragma once

// Characteristic exponents.  psi(l) = int (e^{ilu} - 1 - ilu 1_{|u|<=1}) m(u) du
// evaluated per side by piecewise quadrature: Taylor core below
// |u| = 1e-8/(1+|l|), series-stable mid zone, oscillatory tail by master
// function (pure power) or contour rotation (tapered).  The scaled exponent
// of zeta_t = t^{-1/alpha}(Z_t + c_t) equals the same integral against
// m_t(v) = t^{1+1/alpha} m(t^{1/alpha} v) with the standard |v|<=1 compensator
// (the drift corrections cancel exactly), so route A runs this engine with a
// taper scale; route B composes t psi(t^{-1/alpha} l) with c_t.

#include "levylan/common.hpp"
#include "levylan/levy_model.hpp"

namespace levylan {

// One spec+scale engine instance caches the lambda-free pieces.  Not thread
// safe per instance; build tables from a single thread or use one per thread.
class PsiEngine {
 public:
  explicit PsiEngine(const LevyMeasureSpec& spec, double taper_scale = 1.0);

  cplx eval(double lambda) const;

  const LevyMeasureSpec& spec() const { return spec_; }
  double taper_scale() const { return s0_; }

 private:
  cplx side(double l) const;                       // positive-side J(l)
  cplx osc_int(double lo, double hi, double l) const;  // int e^{ilu} g(u) du
  cplx rotated(double p, double l) const;          // endpoint contour leg
  double fside(double u) const;                    // taper factor at s0*u
  cplx fside_c(cplx u) const;
  double mpow(double u) const;                     // u^{-alpha-1} fside(u)
  double ucut() const;                             // taper support/decay end
  double rot_radius(double hi) const;              // safe rotation height

  LevyMeasureSpec spec_;
  double s0_;
  mutable double m1_ = 0.0;       // int_1^ucut u^{-alpha-1} fside du
  mutable bool m1_set_ = false;
  mutable cplx e_half_{};         // master function at phase 0.5
  mutable bool e_half_set_ = false;
};

// int_a^inf e^{iv} v^{-s} dv, s in (1,3): panels up to v=40, asymptotic
// series beyond (optimal truncation keeps the error near 1e-17 relative)
cplx osc_power_tail(double s, double a);

cplx psi(const LevyMeasureSpec& spec, double lambda);

// exponent of the rescaled increment zeta_t; route A (scaled measure, primary)
cplx psi_alpha_t(const LevyMeasureSpec& spec, double t, double lambda);
// route B (composition with the drift correction), kept as a cross-check
cplx psi_alpha_t_composed(const LevyMeasureSpec& spec, double t,
                          double lambda);

// stable limit exponent: the same engine with taper=none
cplx psi_stable(double alpha, double c_plus, double c_minus, double lambda);

// closed-form stable exponent (test oracle, not the primary path):
// Gamma(-a) |l|^a [(C++C-)cos(pi a/2) - i sgn(l)(C+-C-)sin(pi a/2)]
//   + i l (C+-C-)/(a-1),  alpha != 1;
// per side at alpha=1: -(pi/2)|l| + i l (1 - euler_gamma - ln|l|)
cplx psi_stable_closed(double alpha, double c_plus, double c_minus,
                       double lambda);

}  // namespace levylan

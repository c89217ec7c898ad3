#include "levylan/char_exponent.hpp"

#include <cmath>
#include <limits>

#include "levylan/quadrature.hpp"

namespace levylan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.5772156649015328606;

// e^{i th} - 1 through the half angle, no cancellation at any th
cplx em1(double th) {
  const double s = std::sin(0.5 * th);
  return {-2.0 * s * s, 2.0 * s * std::cos(0.5 * th)};
}

// e^{i th} - 1 - i th; series keeps the relative error at eps below |th|=0.5
cplx em1m(double th) {
  if (std::fabs(th) > 0.5) {
    const cplx e = em1(th);
    return {e.real(), e.imag() - th};
  }
  const cplx it(0.0, th);
  cplx term = it, acc(0.0, 0.0);
  for (int k = 2; k <= 18; ++k) {
    term *= it / double(k);
    acc += term;
    if (std::abs(term) < 1e-18 * std::abs(acc)) break;
  }
  return acc;
}

}  // namespace

cplx osc_power_tail(double s, double a) {
  if (!(a > 0.0)) throw config_error("osc_power_tail: a must be > 0");
  if (a < 40.0) {
    auto r = integrate_segments<cplx>(
        [s](double v) { return std::polar(1.0, v) * std::pow(v, -s); },
        osc_breakpoints(a, 40.0, 1.0), 1e-15, 1e-13);
    return r.value + osc_power_tail(s, 40.0);
  }
  // e^{ia} sum c_k with c_0 = i a^{-s}, c_{k+1} = c_k (-i)(s+k)/a; truncate
  // at the smallest term (error ~ e^{-a} relative at a = 40)
  cplx c(0.0, std::pow(a, -s));
  cplx sum = c;
  double best = std::abs(c);
  for (int k = 0; k < 60; ++k) {
    c *= cplx(0.0, -1.0) * ((s + double(k)) / a);
    const double m = std::abs(c);
    if (m >= best) break;
    sum += c;
    best = m;
    if (m < 1e-18 * std::abs(sum)) break;
  }
  return std::polar(1.0, a) * sum;
}

PsiEngine::PsiEngine(const LevyMeasureSpec& spec, double taper_scale)
    : spec_(spec), s0_(taper_scale) {
  spec_.validate();
  if (!(s0_ > 0.0 && s0_ <= 1.0))
    throw config_error("psi: taper scale must lie in (0,1]");
}

double PsiEngine::fside(double u) const {
  return taper_factor(spec_, s0_ * u);
}

cplx PsiEngine::fside_c(cplx u) const {
  const cplx w = s0_ * u;
  switch (spec_.taper) {
    case Taper::none: return 1.0;
    case Taper::exp_abs: return std::exp(-w);
    case Taper::gauss: return std::exp(-w * w);
    case Taper::sech_like: return std::exp(1.0 - std::sqrt(1.0 + w * w));
    case Taper::smooth_damp:
      return std::exp(2.0 / spec_.u1 - 1.0 / (spec_.u1 + w) -
                      1.0 / (spec_.u1 - w));
  }
  return 1.0;
}

double PsiEngine::mpow(double u) const {
  return std::pow(u, -spec_.alpha - 1.0) * fside(u);
}

double PsiEngine::ucut() const {
  switch (spec_.taper) {
    case Taper::none: return kInf;
    case Taper::exp_abs: return 45.0 / s0_;
    case Taper::gauss: return 7.0 / s0_;
    case Taper::sech_like: return 46.0 / s0_;
    case Taper::smooth_damp:
      // f <= e^{-46} beyond this point
      return (spec_.u1 - 1.0 / (46.0 + 2.0 / spec_.u1)) / s0_;
  }
  return kInf;
}

double PsiEngine::rot_radius(double hi) const {
  switch (spec_.taper) {
    case Taper::none: return kInf;
    case Taper::exp_abs: return kInf;
    case Taper::gauss: return 3.0 / s0_;
    case Taper::sech_like: return 0.9 / s0_;  // branch points at s0 u = +-i
    case Taper::smooth_damp: return 0.7 * (spec_.u1 / s0_ - hi);
  }
  return kInf;
}

cplx PsiEngine::rotated(double p, double l) const {
  // i e^{ilp}/l int_0^45 e^{-s} g(p + is/l) ds, g = u^{-a-1} f(s0 u)
  const double a = spec_.alpha;
  auto g = [&](double s) {
    const cplx u(p, s / l);
    return std::exp(-s) * std::pow(u, -a - 1.0) * fside_c(u);
  };
  auto r = integrate_segments<cplx>(g, {0.0, 1.0, 3.0, 8.0, 20.0, 45.0},
                                    1e-15, 1e-12);
  return cplx(0.0, 1.0) * std::polar(1.0, l * p) / l * r.value;
}

cplx PsiEngine::osc_int(double lo, double hi, double l) const {
  auto direct = [&](double x0, double x1) {
    auto r = integrate_segments<cplx>(
        [&](double u) { return std::polar(1.0, l * u) * mpow(u); },
        osc_breakpoints(x0, x1, l), 1e-14 * (1.0 + std::pow(l, spec_.alpha)),
        1e-11);
    return r.value;
  };
  const double phase = l * (hi - lo);
  const double height = 45.0 / l;
  if (phase <= 200.0 || height >= rot_radius(hi)) {
    if (phase > 6000.0)
      throw numeric_error("osc_int: phase budget exceeded, rotation unsafe");
    return direct(lo, hi);
  }
  const double mid = lo + 200.0 / l;
  return direct(lo, mid) + rotated(mid, l) - rotated(hi, l);
}

cplx PsiEngine::side(double l) const {
  const double a = spec_.alpha;
  const double uc = 1e-8 / (1.0 + l);
  const double atol = 1e-13 * (1.0 + std::pow(l, a));
  const double rtol = 1e-11;
  // Taylor core: -l^2/2 int_0^uc u^{1-a} f du with f(0) = 1; the dropped
  // orders sit below 1e-8 of a term that is itself a small share of J
  cplx J(-l * l * std::pow(uc, 2.0 - a) / (2.0 * (2.0 - a)), 0.0);

  const double us = 0.5 / l;
  if (l <= 60.0) {
    auto mid = integrate_segments<cplx>(
        [&](double u) { return em1m(l * u) * mpow(u); },
        sing_osc_breakpoints(uc, 1.0, l), atol, rtol);
    J += mid.value;
  } else {
    // series-stable inner zone, then split the integrand; the two split
    // pieces stay of the order of J itself (the split sits at phase 0.5)
    auto inner = integrate_segments<cplx>(
        [&](double u) { return em1m(l * u) * mpow(u); },
        geometric_toward(uc, us, uc), atol, rtol);
    auto smooth = integrate_segments<cplx>(
        [&](double u) { return cplx(1.0, l * u) * mpow(u); },
        geometric_toward(us, 1.0, us * 0.5), atol, rtol);
    J += inner.value - smooth.value;
    if (spec_.taper == Taper::none) {
      if (!e_half_set_) {
        e_half_ = osc_power_tail(a + 1.0, 0.5);
        e_half_set_ = true;
      }
      // the E(l) legs of the mid and tail pieces cancel exactly
      return J + std::pow(l, a) * e_half_ - 1.0 / a;
    }
    J += osc_int(us, 1.0, l);
  }

  if (spec_.taper == Taper::none) {
    J += std::pow(l, a) * osc_power_tail(a + 1.0, l) - 1.0 / a;
  } else if (const double cut = ucut(); cut > 1.0) {
    if (!m1_set_) {
      auto r = integrate_segments<double>([&](double u) { return mpow(u); },
                                          geometric_toward(1.0, cut, 0.5),
                                          1e-14, 1e-12);
      if (!r.converged)
        throw numeric_error("psi: tail mass quadrature did not converge");
      m1_ = r.value;
      m1_set_ = true;
    }
    J += osc_int(1.0, cut, l) - m1_;
  }
  return J;
}

cplx PsiEngine::eval(double l) const {
  if (!std::isfinite(l)) throw config_error("psi: lambda must be finite");
  if (l == 0.0) return {0.0, 0.0};
  if (l < 0.0) return std::conj(eval(-l));
  const cplx J = side(l);
  return spec_.c_plus * J + spec_.c_minus * std::conj(J);
}

cplx psi(const LevyMeasureSpec& spec, double lambda) {
  return PsiEngine(spec).eval(lambda);
}

cplx psi_alpha_t(const LevyMeasureSpec& spec, double t, double lambda) {
  spec.validate();
  if (!(t > 0.0 && t <= 1.0)) throw config_error("psi_alpha_t: t must lie in (0,1]");
  return PsiEngine(spec, std::pow(t, 1.0 / spec.alpha)).eval(lambda);
}

cplx psi_alpha_t_composed(const LevyMeasureSpec& spec, double t,
                          double lambda) {
  spec.validate();
  if (!(t > 0.0 && t <= 1.0))
    throw config_error("psi_alpha_t: t must lie in (0,1]");
  const double mu = std::pow(t, -1.0 / spec.alpha);
  return t * PsiEngine(spec).eval(mu * lambda) +
         cplx(0.0, lambda * mu * c_t(spec, t));
}

cplx psi_stable(double alpha, double c_plus, double c_minus, double lambda) {
  LevyMeasureSpec s;
  s.alpha = alpha;
  s.c_plus = c_plus;
  s.c_minus = c_minus;
  s.taper = Taper::none;
  return PsiEngine(s).eval(lambda);
}

cplx psi_stable_closed(double alpha, double c_plus, double c_minus,
                       double lambda) {
  if (lambda == 0.0) return {0.0, 0.0};
  if (lambda < 0.0)
    return std::conj(psi_stable_closed(alpha, c_plus, c_minus, -lambda));
  cplx J;
  if (alpha == 1.0) {
    J = cplx(-0.5 * kPi * lambda,
             lambda * (1.0 - kEulerGamma - std::log(lambda)));
  } else {
    const double g = std::tgamma(-alpha);
    J = g * std::pow(lambda, alpha) *
            std::polar(1.0, -0.5 * kPi * alpha) +
        cplx(0.0, lambda / (alpha - 1.0));
  }
  return c_plus * J + c_minus * std::conj(J);
}

}  // namespace levylan

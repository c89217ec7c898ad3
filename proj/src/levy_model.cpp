#include "levylan/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levylan/quadrature.hpp"

namespace levylan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Taper taper_from_string(const std::string& s) {
  if (s == "none") return Taper::none;
  if (s == "exp_abs") return Taper::exp_abs;
  if (s == "gauss") return Taper::gauss;
  if (s == "sech_like") return Taper::sech_like;
  if (s == "smooth_damp") return Taper::smooth_damp;
  throw config_error("model.taper: unknown taper '" + s + "'");
}

const char* to_string(Taper t) {
  switch (t) {
    case Taper::none: return "none";
    case Taper::exp_abs: return "exp_abs";
    case Taper::gauss: return "gauss";
    case Taper::sech_like: return "sech_like";
    case Taper::smooth_damp: return "smooth_damp";
  }
  return "?";
}

void LevyMeasureSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw config_error("model.alpha: must lie in (0,2)");
  if (!(c_plus >= 0.0)) throw config_error("model.c_plus: must be >= 0");
  if (!(c_minus >= 0.0)) throw config_error("model.c_minus: must be >= 0");
  if (!(c_plus + c_minus > 0.0))
    throw config_error("model.c_plus/c_minus: need c_plus + c_minus > 0");
  if (!(u0 > 0.0)) throw config_error("model.u0: must be > 0");
  if (!(delta > 0.0)) throw config_error("model.delta: must be > 0");
  if (taper == Taper::smooth_damp) {
    if (!(u1 > 0.0)) throw config_error("model.u1: must be > 0");
    if (!(u0 < u1))
      throw config_error("model.u0: must be < u1 for smooth_damp");
  }
}

double LevyMeasureSpec::support_radius() const {
  return taper == Taper::smooth_damp ? u1 : kInf;
}

void Theta::validate() const {
  if (!(gamma > 0.0)) throw config_error("theta.gamma: must be > 0");
  if (!std::isfinite(beta)) throw config_error("theta.beta: must be finite");
}

double taper_factor(const LevyMeasureSpec& spec, double u) {
  const double a = std::fabs(u);
  switch (spec.taper) {
    case Taper::none: return 1.0;
    case Taper::exp_abs: return std::exp(-a);
    case Taper::gauss: return std::exp(-u * u);
    case Taper::sech_like: return std::exp(1.0 - std::sqrt(1.0 + u * u));
    case Taper::smooth_damp: {
      // exp(2/u1 - 1/(u1+u) - 1/(u1-u)) on (-u1,u1); the 2/u1 restores f(0)=1
      if (a >= spec.u1) return 0.0;
      return std::exp(2.0 / spec.u1 - 1.0 / (spec.u1 + u) -
                      1.0 / (spec.u1 - u));
    }
  }
  return 1.0;
}

double taper_log_deriv(const LevyMeasureSpec& spec, double u) {
  switch (spec.taper) {
    case Taper::none: return 0.0;
    case Taper::exp_abs: return u > 0 ? -1.0 : 1.0;
    case Taper::gauss: return -2.0 * u;
    case Taper::sech_like: return -u / std::sqrt(1.0 + u * u);
    case Taper::smooth_damp: {
      const double p = spec.u1 + u, q = spec.u1 - u;
      return 1.0 / (p * p) - 1.0 / (q * q);
    }
  }
  return 0.0;
}

double taper_log_deriv2(const LevyMeasureSpec& spec, double u) {
  switch (spec.taper) {
    case Taper::none: return 0.0;
    case Taper::exp_abs: return 0.0;
    case Taper::gauss: return -2.0;
    case Taper::sech_like: return -std::pow(1.0 + u * u, -1.5);
    case Taper::smooth_damp: {
      const double p = spec.u1 + u, q = spec.u1 - u;
      return -2.0 / (p * p * p) - 2.0 / (q * q * q);
    }
  }
  return 0.0;
}

double m_density(const LevyMeasureSpec& spec, double u) {
  if (u == 0.0) throw config_error("m_density: u = 0 is outside the domain");
  const double c = spec.side_coef(u > 0 ? 1 : -1);
  if (c == 0.0) return 0.0;
  return c * std::pow(std::fabs(u), -spec.alpha - 1.0) * taper_factor(spec, u);
}

double m_prime(const LevyMeasureSpec& spec, double u) {
  if (u == 0.0) throw config_error("m_prime: u = 0 is outside the domain");
  return m_density(spec, u) *
         (-(spec.alpha + 1.0) / u + taper_log_deriv(spec, u));
}

double tau(const LevyMeasureSpec& spec, double u) {
  if (u == 0.0) throw config_error("tau: u = 0 is outside the domain");
  if (std::fabs(u) >= spec.support_radius())
    throw numeric_error("tau: unbounded at the support boundary (m -> 0)");
  // u m'/m = -(alpha+1) + u L(u)
  return std::fabs(-(spec.alpha + 1.0) + u * taper_log_deriv(spec, u));
}

double chi(const LevyMeasureSpec& spec, double u) {
  if (u == 0.0) throw config_error("chi: u = 0 is outside the domain");
  if (std::fabs(u) >= spec.support_radius())
    throw numeric_error("chi: unbounded at the support boundary (m -> 0)");
  return (spec.alpha - 1.0) * u - u * u * taper_log_deriv(spec, u);
}

namespace {

// cutoff beyond which the taper is numerically zero relative to the power
double taper_cutoff(const LevyMeasureSpec& spec) {
  switch (spec.taper) {
    case Taper::none: return kInf;
    case Taper::exp_abs: return 45.0;
    case Taper::gauss: return 7.0;
    case Taper::sech_like: return 46.0;
    case Taper::smooth_damp: return spec.u1;
  }
  return kInf;
}

// int_lo^hi v^{k-alpha-1} f(v) dv on one side, quadrature with geometric
// seeding toward the singular end
double one_side_power_integral(const LevyMeasureSpec& spec, int k, double lo,
                               double hi) {
  const double a = spec.alpha;
  if (hi <= lo) return 0.0;
  auto g = [&](double v) {
    return std::pow(v, double(k) - a - 1.0) * taper_factor(spec, v);
  };
  double tail = 0.0;
  if (hi == kInf) {
    const double cut = taper_cutoff(spec);
    if (cut == kInf) {
      if (!(k < a))
        throw config_error("moment_integral: diverges at infinity (k >= alpha, no taper)");
      // exact power tail above a finite split keeps the panel count bounded
      const double split = std::max(lo, 1.0) * 1e4;
      tail = std::pow(split, double(k) - a) / (a - double(k));
      hi = split;
    } else {
      hi = std::max(cut, lo * (1.0 + 1e-12));
    }
  }
  hi = std::min(hi, spec.support_radius());
  if (hi <= lo) return 0.0;
  std::vector<double> pts;
  if (lo == 0.0) {
    if (!(double(k) > a))
      throw config_error("moment_integral: diverges at 0 (k <= alpha)");
    pts = geometric_toward(lo, hi, hi * 1e-12);
  } else {
    pts = geometric_toward(lo, hi, std::min(lo * 0.5, (hi - lo) * 0.5));
  }
  auto r = integrate_segments<double>(g, std::move(pts), 1e-12, 1e-10);
  if (!r.converged)
    throw numeric_error("moment_integral: quadrature budget exhausted");
  return r.value + tail;
}

}  // namespace

double moment_integral(const LevyMeasureSpec& spec, int k, double lo,
                       double hi) {
  if (!(lo >= 0.0) || !(hi >= lo))
    throw config_error("moment_integral: need 0 <= lo <= hi");
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  double out = 0.0;
  if (spec.c_plus > 0.0)
    out += spec.c_plus * one_side_power_integral(spec, k, lo, hi);
  if (spec.c_minus > 0.0)
    out += sign * spec.c_minus * one_side_power_integral(spec, k, lo, hi);
  return out;
}

double mass_above(const LevyMeasureSpec& spec, double eps) {
  if (!(eps > 0.0)) throw config_error("mass_above: eps must be > 0");
  return moment_integral(spec, 0, eps, kInf);
}

double chi_integral(const LevyMeasureSpec& spec, double lo, double hi) {
  if (!(lo >= 0.0) || !(hi >= lo))
    throw config_error("chi_integral: need 0 <= lo <= hi");
  // chi is odd, so only the asymmetric part survives
  const double cdiff = spec.c_plus - spec.c_minus;
  if (cdiff == 0.0) return 0.0;
  hi = std::min(hi, spec.support_radius());
  if (hi == kInf) hi = taper_cutoff(spec);
  if (hi == kInf)
    throw config_error("chi_integral: infinite range needs a decaying taper");
  if (hi <= lo) return 0.0;
  auto g = [&](double v) {
    return ((spec.alpha - 1.0) * v - v * v * taper_log_deriv(spec, v)) *
           std::pow(v, -spec.alpha - 1.0) * taper_factor(spec, v);
  };
  std::vector<double> pts =
      lo == 0.0 ? geometric_toward(lo, hi, hi * 1e-12)
                : geometric_toward(lo, hi, std::min(lo * 0.5, (hi - lo) * 0.5));
  auto r = integrate_segments<double>(g, std::move(pts), 1e-12, 1e-10);
  if (!r.converged)
    throw numeric_error("chi_integral: quadrature budget exhausted");
  return cdiff * r.value;
}

double c_t(const LevyMeasureSpec& spec, double t, bool* empty_region) {
  if (!(t > 0.0)) throw config_error("c_t: t must be > 0");
  if (empty_region) *empty_region = false;
  const double lo = std::pow(t, 1.0 / spec.alpha);
  if (lo >= 1.0) {
    if (empty_region) *empty_region = true;
    return 0.0;
  }
  if (spec.symmetric()) return 0.0;
  return t * moment_integral(spec, 1, lo, 1.0);
}

H1Report verify_h1(const LevyMeasureSpec& spec, double tol, double alpha_ref,
                   int decades) {
  H1Report rep;
  rep.tol = tol;
  const double aref = alpha_ref > 0.0 ? alpha_ref : spec.alpha;
  const double frac[3] = {1.0, 0.5, 0.25};
  for (int j = 1; j <= decades; ++j) {
    double worst = 0.0;
    for (double fr : frac) {
      const double v = fr * std::pow(10.0, -j);
      for (int s : {1, -1}) {
        const double c = spec.side_coef(s);
        if (c == 0.0) continue;
        const double ratio =
            m_density(spec, s * v) / (c * std::pow(v, -aref - 1.0));
        worst = std::max(worst, std::fabs(ratio - 1.0));
      }
    }
    rep.decade_dev.push_back(worst);
  }
  rep.last_decade_dev = rep.decade_dev.back();
  rep.pass = rep.last_decade_dev <= tol;
  return rep;
}

H2Report verify_h2(const LevyMeasureSpec& spec) {
  H2Report rep;
  // (a) sup tau over the inner region, dense log grid; tau(u) -> alpha+1 at 0
  double sup = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double v = spec.u0 * std::pow(10.0, -6.0 * (1.0 - i / 4000.0));
    for (int s : {1, -1})
      if (spec.side_coef(s) > 0.0) sup = std::max(sup, tau(spec, s * v));
  }
  rep.sup_tau_inner = sup;

  // (b) int_{|u|>u0} tau^{2+delta} dmu, truncated where the integrand falls
  // below 1e-14 of its peak
  const double p = 2.0 + spec.delta;
  auto integrand = [&](double v) {
    const double t = std::fabs(-(spec.alpha + 1.0) +
                               v * taper_log_deriv(spec, v));
    return std::pow(t, p) * std::pow(v, -spec.alpha - 1.0) *
           taper_factor(spec, v);
  };
  const double edge = spec.support_radius();
  double peak = 0.0, cut = spec.u0;
  bool decayed = false;
  if (edge < kInf) {
    // approach the boundary geometrically; the essential zero of f wins
    for (int i = 1; i <= 200; ++i) {
      const double v = edge - (edge - spec.u0) * std::pow(2.0, -i);
      const double w = integrand(v);
      peak = std::max(peak, w);
      cut = v;
      if (w < 1e-14 * peak && peak > 0.0) { decayed = true; break; }
    }
  } else {
    double v = spec.u0;
    for (int i = 0; i <= 400; ++i) {
      const double w = integrand(v);
      peak = std::max(peak, w);
      cut = v;
      if (w < 1e-14 * peak && peak > 0.0 && i > 0) { decayed = true; break; }
      v *= 1.25;
    }
  }
  if (!decayed) {
    rep.diagnostic = "no decay detected in tau^(2+delta) m before the budget";
    rep.pass = false;
    return rep;
  }
  auto r = integrate_segments<double>(
      integrand, geometric_toward(spec.u0, cut, (cut - spec.u0) * 1e-6),
      1e-12, 1e-10);
  rep.converged = r.converged;
  double val = r.value;
  // pure power decays too slowly for the pointwise cutoff to bound the mass;
  // close it exactly
  if (spec.taper == Taper::none)
    val += std::pow(spec.alpha + 1.0, p) * std::pow(cut, -spec.alpha) /
           spec.alpha;
  rep.tail_integral = (spec.c_plus + spec.c_minus) * val;
  rep.tail_err = (spec.c_plus + spec.c_minus) * r.abs_err;
  rep.pass = r.converged && std::isfinite(rep.tail_integral) &&
             std::isfinite(sup);
  if (!r.converged)
    rep.diagnostic = "quadrature budget exhausted over the outer region";
  return rep;
}

}  // namespace levylan

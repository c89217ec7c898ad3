#include "levylan/score_fisher.hpp"

#include <algorithm>
#include <cmath>

#include "levylan/common.hpp"

namespace levylan {

RateMatrices rate_matrices(const LevyMeasureSpec& spec,
                           const SamplingScheme& sch) {
  spec.validate();
  sch.validate(spec.alpha, kRateHardBound);
  RateMatrices rm;
  rm.n = sch.n;
  rm.h = sch.h;
  rm.c_h = c_t(spec, sch.h);
  rm.r_tilde[0][0] = std::pow(sch.h, 1.0 / spec.alpha - 1.0);
  rm.r_tilde[0][1] = rm.c_h / sch.h;
  rm.r_tilde[1][0] = 0.0;
  rm.r_tilde[1][1] = 1.0;
  const double rn = 1.0 / std::sqrt(double(sch.n));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) rm.r[i][j] = rn * rm.r_tilde[i][j];
  return rm;
}

namespace {

struct Quad {
  double s11 = 0.0, s22 = 0.0, cr = 0.0;
};

// sampling the cf at spacing pi/L periodizes the density with period 2L, so
// the window carries folded-in copies of the power tails; those copies are
// pure stamped-tail material and can be subtracted, which keeps the ratio
// d/v meaningful far out where the fold would otherwise dominate
struct AliasFold {
  double L, alpha, cp, cm;

  double value(double x) const {
    double s = 0.0;
    for (int k = 1; k <= 24; ++k) {
      if (cp > 0.0) s += cp * std::pow(x + 2.0 * k * L, -1.0 - alpha);
      if (cm > 0.0) s += cm * std::pow(2.0 * k * L - x, -1.0 - alpha);
    }
    // integral remainder of the copy sum past k = 24
    const double e = 49.0 * L;
    if (cp > 0.0) s += cp * std::pow(x + e, -alpha) / (2.0 * alpha * L);
    if (cm > 0.0) s += cm * std::pow(e - x, -alpha) / (2.0 * alpha * L);
    return s;
  }

  double deriv(double x) const {
    double s = 0.0;
    const double p = 1.0 + alpha;
    for (int k = 1; k <= 24; ++k) {
      if (cp > 0.0) s -= p * cp * std::pow(x + 2.0 * k * L, -2.0 - alpha);
      if (cm > 0.0) s += p * cm * std::pow(2.0 * k * L - x, -2.0 - alpha);
    }
    const double e = 49.0 * L;
    if (cp > 0.0) s -= cp * std::pow(x + e, -1.0 - alpha) / (2.0 * L);
    if (cm > 0.0) s += cm * std::pow(e - x, -1.0 - alpha) / (2.0 * L);
    return s;
  }
};

// trapezoid over the kept node range with a stride, for Richardson pairing
Quad fisher_body(const DensityTable& tb, const std::vector<double>& av,
                 const std::vector<double>& ad, size_t iL, size_t iR,
                 size_t stride) {
  auto w = [&](size_t i) {
    const double v = tb.values[i] - av[i], d = tb.dvalues[i] - ad[i];
    const double z = tb.x_grid[i];
    const double r = d / v;
    return std::array<double, 3>{d * r, (1.0 + z * r) * (1.0 + z * r) * v,
                                 d + z * d * r};
  };
  double acc[3] = {0.0, 0.0, 0.0};
  std::array<double, 3> wa = w(iL);
  size_t i = iL;
  while (i < iR) {
    const size_t j = std::min(i + stride, iR);
    const std::array<double, 3> wb = w(j);
    const double seg = tb.x_grid[j] - tb.x_grid[i];
    for (int k = 0; k < 3; ++k) acc[k] += 0.5 * (wa[k] + wb[k]) * seg;
    wa = wb;
    i = j;
  }
  return Quad{acc[0], acc[1], acc[2]};
}

}  // namespace

FisherMatrix fisher_matrix(double alpha, double c_plus, double c_minus,
                           double gamma) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw config_error("fisher: alpha must lie in (0,2)");
  if (!(c_plus >= 0.0 && c_minus >= 0.0 && c_plus + c_minus > 0.0))
    throw config_error("fisher: stable coefficients must be >= 0, not both 0");
  if (!(gamma > 0.0)) throw config_error("fisher: gamma must be positive");

  // windows carried over from the normalization sweeps: wide enough that the
  // first-order tail completion is the only correction that matters
  double xmax, dx;
  if (alpha >= 1.0) {
    xmax = 500.0;
    dx = 0.01;
  } else if (alpha >= 0.7) {
    xmax = 2000.0;
    dx = 0.02;
  } else {
    xmax = 60000.0;
    dx = 0.018;
  }

  FisherMatrix out;
  out.gamma = gamma;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const DensityTable tb = make_density_table(
        make_stable_handle(alpha, c_plus, c_minus), xmax, dx, {});
    double r2 = 1.0;
    bool fit_ok = true;
    if (c_plus > 0.0) {
      fit_ok = fit_ok && tb.tail_hi.ok;
      if (tb.tail_hi.ok) r2 = std::min(r2, tb.tail_hi.r2);
    }
    if (c_minus > 0.0) {
      fit_ok = fit_ok && tb.tail_lo.ok;
      if (tb.tail_lo.ok) r2 = std::min(r2, tb.tail_lo.r2);
    }
    out.fit_r2 = fit_ok ? r2 : 0.0;
    out.xmax = xmax;
    if ((!fit_ok || r2 < 0.99) && attempt == 0) {
      // the window did not reach the power asymptote; one wider retry
      out.widened = true;
      xmax *= 2.0;
      continue;
    }

    // subtract the periodization fold; it varies on the scale of the fft
    // period, so a coarse grid with linear interpolation carries full
    // accuracy (the returned window is a slice of the padded fft grid)
    const size_t n = tb.x_grid.size(), mid = n / 2;
    const double x0 = tb.x_grid.front();
    const double span = tb.x_grid.back() - x0;
    const AliasFold fold{0.5 * tb.period, alpha, c_plus, c_minus};
    std::vector<double> av(n), ad(n);
    {
      const size_t m = 2048;
      std::vector<double> cv(m + 1), cd(m + 1);
      for (size_t j = 0; j <= m; ++j) {
        const double x = x0 + span * double(j) / double(m);
        cv[j] = fold.value(x);
        cd[j] = fold.deriv(x);
      }
      for (size_t i = 0; i < n; ++i) {
        const double u = (tb.x_grid[i] - x0) / span * double(m);
        const size_t j = std::min(size_t(u), m - 1);
        const double w = u - double(j);
        av[i] = (1.0 - w) * cv[j] + w * cv[j + 1];
        ad[i] = (1.0 - w) * cd[j] + w * cd[j + 1];
      }
    }

    // keep de-aliased nodes well above the residual floor, and stay off the
    // outermost window fringe where the fold model degrades
    const double cut = 1e-8 * tb.peak;
    const size_t lo_cap = mid - size_t(0.95 * double(mid));
    const size_t hi_cap = mid + size_t(0.95 * double(n - 1 - mid));
    size_t iL = mid, iR = mid;
    while (iL > lo_cap && tb.values[iL - 1] - av[iL - 1] >= cut) --iL;
    while (iR < hi_cap && tb.values[iR + 1] - av[iR + 1] >= cut) ++iR;

    const Quad q1 = fisher_body(tb, av, ad, iL, iR, 1);
    const Quad q2 = fisher_body(tb, av, ad, iL, iR, 2);

    const double XR = tb.x_grid[iR], XL = -tb.x_grid[iL];
    double t11 = 0.0, t22 = 0.0, tcr = 0.0, second = 0.0;
    if (c_plus > 0.0) {
      const double c = c_plus, a = alpha;
      t11 += (1.0 + a) * (1.0 + a) * c * std::pow(XR, -2.0 - a) / (2.0 + a);
      t22 += a * c * std::pow(XR, -a);
      tcr += a * c * std::pow(XR, -1.0 - a);
      second = std::max(second, std::pow(XR, -std::min(a, 1.0)));
    }
    if (c_minus > 0.0) {
      const double c = c_minus, a = alpha;
      t11 += (1.0 + a) * (1.0 + a) * c * std::pow(XL, -2.0 - a) / (2.0 + a);
      t22 += a * c * std::pow(XL, -a);
      tcr -= a * c * std::pow(XL, -1.0 - a);
      second = std::max(second, std::pow(XL, -std::min(a, 1.0)));
    }

    const double g2 = gamma * gamma;
    out.sigma11 = (q1.s11 + t11) / g2;
    out.sigma22 = (q1.s22 + t22) / g2;
    out.cross_moment = (q1.cr + tcr) / g2;
    // Richardson on the body plus an allowance for the next tail order (the
    // completion is first order in the stamped power)
    out.err11 =
        (std::fabs(q1.s11 - q2.s11) / 3.0 + 6.0 * t11 * second) / g2;
    out.err22 =
        (std::fabs(q1.s22 - q2.s22) / 3.0 + 6.0 * t22 * second) / g2;
    out.cross_err =
        (std::fabs(q1.cr - q2.cr) / 3.0 + 6.0 * std::fabs(tcr) * second) / g2;
    break;
  }
  return out;
}

namespace {

double kernel_window(const std::vector<double>& z_grid) {
  double zmax = 10.0;
  for (double z : z_grid) zmax = std::max(zmax, std::fabs(z));
  return std::min(zmax * 1.05 + 2.0, 400.0);
}

GTables g_from_kernels(const FKernelSet& ker,
                       const std::vector<double>& z_grid) {
  GTables gt;
  gt.t = ker.t;
  gt.z = z_grid;
  gt.g1.resize(z_grid.size());
  gt.g2.resize(z_grid.size());
  const double floor = ker.f.peak * 1e-300;
  for (size_t i = 0; i < z_grid.size(); ++i) {
    const double f = ker.f.eval(z_grid[i]);
    if (!(f > floor))
      throw numeric_error("score undefined at numerical zero");
    gt.g1[i] = -ker.f1.eval(z_grid[i]) / f;
    gt.g2[i] = -1.0 - ker.f2.eval(z_grid[i]) / f;
  }
  return gt;
}

}  // namespace

GTables g_functions(const LevyMeasureSpec& spec, const Theta& theta,
                    const NuisanceSpec& nu, double t,
                    const std::vector<double>& z_grid,
                    const InvertOptions& opts) {
  if (z_grid.empty()) throw config_error("g_functions: empty z grid");
  const FKernelSet ker =
      f_kernels(spec, theta, nu, t, kernel_window(z_grid), 0.01, opts);
  return g_from_kernels(ker, z_grid);
}

GTables g_functions_limit(double alpha, double c_plus, double c_minus,
                          const std::vector<double>& z_grid,
                          const InvertOptions& opts) {
  if (z_grid.empty()) throw config_error("g_functions: empty z grid");
  LevyMeasureSpec spec;
  spec.alpha = alpha;
  spec.c_plus = c_plus;
  spec.c_minus = c_minus;
  spec.taper = Taper::none;
  const FKernelSet ker = f_kernels(spec, Theta{}, NuisanceSpec{}, 0.0,
                                   kernel_window(z_grid), 0.01, opts);
  return g_from_kernels(ker, z_grid);
}

std::array<double, 2> ScoreContext::at_z(double z) const {
  const double f = ker.f.eval(z);
  if (!(f > ker.f.peak * 1e-300))
    throw numeric_error("score undefined at numerical zero");
  const double g1 = -ker.f1.eval(z) / f;
  const double g2 = -1.0 - ker.f2.eval(z) / f;
  return {tpow * g1 / theta.gamma, (g2 - ct_tm * g1) / theta.gamma};
}

ScoreContext make_score_context(const LevyMeasureSpec& spec,
                                const Theta& theta, const NuisanceSpec& nu,
                                double t, double zmax, double dz,
                                const InvertOptions& opts) {
  if (!(t > 0.0 && t <= 1.0))
    throw config_error("score: t must lie in (0,1]");
  ScoreContext ctx;
  ctx.spec = spec;
  ctx.theta = theta;
  ctx.nu = nu;
  ctx.t = t;
  ctx.ct = c_t(spec, t);
  const double kappa = std::pow(t, -1.0 / spec.alpha);
  ctx.zscale = kappa / theta.gamma;
  ctx.tpow = std::pow(t, 1.0 - 1.0 / spec.alpha);
  ctx.ct_tm = ctx.ct * kappa;
  ctx.ker = f_kernels(spec, theta, nu, t, zmax, dz, opts);
  return ctx;
}

std::array<double, 2> score(const LevyMeasureSpec& spec, const Theta& theta,
                            const NuisanceSpec& nu, double t, double x) {
  if (!(t > 0.0 && t <= 1.0))
    throw config_error("score: t must lie in (0,1]");
  const double kappa = std::pow(t, -1.0 / spec.alpha);
  const double z =
      kappa / theta.gamma * (x - theta.beta * t + theta.gamma * c_t(spec, t));
  const double zmax = std::min(std::max(50.0, std::fabs(z) * 1.05 + 2.0),
                               400.0);
  return make_score_context(spec, theta, nu, t, zmax, 0.01).at_z(z);
}

}  // namespace levylan

#include "levylan/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levylan/quadrature.hpp"
#include "levylan/stats.hpp"

namespace levylan {

double NuisanceSpec::bg_index() const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::compound_poisson: return 0.0;
    case Kind::stable: return alpha_u;
  }
  return 0.0;
}

void NuisanceSpec::validate(double companion_alpha) const {
  switch (kind) {
    case Kind::zero: break;
    case Kind::compound_poisson:
      if (!(rate >= 0.0) || !std::isfinite(rate))
        throw config_error("nuisance.rate: must be >= 0");
      if (!(jump_std > 0.0) || !std::isfinite(jump_std))
        throw config_error("nuisance.jump_std: must be > 0");
      break;
    case Kind::stable:
      if (!(alpha_u > 0.0 && alpha_u < 2.0))
        throw config_error("nuisance.alpha_u: must lie in (0,2)");
      if (!(scale > 0.0) || !std::isfinite(scale))
        throw config_error("nuisance.scale: must be > 0");
      break;
  }
  if (!(bg_index() < companion_alpha))
    throw config_error(
        "nuisance.bg_index: must stay below the main alpha (negligibility)");
}

namespace {

// cf of one compound-poisson jump
cplx jump_cf(NuisanceSpec::JumpLaw law, double sd, double l) {
  if (law == NuisanceSpec::JumpLaw::normal)
    return std::exp(-0.5 * sd * sd * l * l);
  const double b2 = 0.5 * sd * sd;  // laplace: var = 2 b^2
  return 1.0 / (1.0 + b2 * l * l);
}

double jump_cf_deriv(NuisanceSpec::JumpLaw law, double sd, double l) {
  if (law == NuisanceSpec::JumpLaw::normal)
    return -sd * sd * l * std::exp(-0.5 * sd * sd * l * l);
  const double b2 = 0.5 * sd * sd;
  const double den = 1.0 + b2 * l * l;
  return -2.0 * b2 * l / (den * den);
}

}  // namespace

cplx nuisance_psi(const NuisanceSpec& nu, double t, double lambda) {
  switch (nu.kind) {
    case NuisanceSpec::Kind::zero: return {0.0, 0.0};
    case NuisanceSpec::Kind::compound_poisson:
      return t * nu.rate * (jump_cf(nu.jump_law, nu.jump_std, lambda) - 1.0);
    case NuisanceSpec::Kind::stable:
      return {-t * std::pow(nu.scale * std::fabs(lambda), nu.alpha_u), 0.0};
  }
  return {0.0, 0.0};
}

cplx nuisance_cf_mean(const NuisanceSpec& nu, double t, double lambda) {
  // -i d/dl e^{psi_U} ; symmetric laws give a purely imaginary psi'
  if (nu.kind == NuisanceSpec::Kind::zero || lambda == 0.0) return {0.0, 0.0};
  double dpsi = 0.0;
  if (nu.kind == NuisanceSpec::Kind::compound_poisson) {
    dpsi = t * nu.rate * jump_cf_deriv(nu.jump_law, nu.jump_std, lambda);
  } else {
    const double s = nu.scale;
    dpsi = -t * std::pow(s, nu.alpha_u) * nu.alpha_u *
           std::pow(std::fabs(lambda), nu.alpha_u - 1.0) *
           (lambda > 0 ? 1.0 : -1.0);
  }
  return cplx(0.0, -1.0) * dpsi * std::exp(nuisance_psi(nu, t, lambda));
}

StableScaling stable_scaling_from_engine(double alpha, double c_plus,
                                         double c_minus) {
  LevyMeasureSpec sp;
  sp.alpha = alpha;
  sp.c_plus = c_plus;
  sp.c_minus = c_minus;
  sp.taper = Taper::none;
  PsiEngine eng(sp);
  StableScaling s;
  s.alpha = alpha;
  const cplx p1 = eng.eval(1.0);
  if (alpha == 1.0) {
    s.K = cplx(p1.real(), 0.0);
    s.E = p1.imag();
    const double e = std::exp(1.0);
    s.c_diff = s.E - eng.eval(e).imag() / e;  // coefficient of -l ln l
  } else {
    // Im psi(l) = Im(K) l^alpha + D l; two evaluations pin both.  The
    // extraction loses ~|2^alpha - 2|^{-1} accuracy, fine away from alpha=1.
    const cplx p2 = eng.eval(2.0);
    const double t2 = std::pow(2.0, alpha);
    const double imk = (p2.imag() - 2.0 * p1.imag()) / (t2 - 2.0);
    s.D = p1.imag() - imk;
    s.K = cplx(p1.real(), imk);
    if (std::fabs(p2.real() - t2 * p1.real()) >
        1e-8 * (1.0 + std::fabs(p2.real())))
      throw numeric_error("stable scaling: real part does not scale as l^alpha");
  }
  return s;
}

cplx eval_stable_scaling(const StableScaling& s, double lambda) {
  if (lambda == 0.0) return {0.0, 0.0};
  if (lambda < 0.0) return std::conj(eval_stable_scaling(s, -lambda));
  if (s.alpha == 1.0)
    return cplx(s.K.real() * lambda,
                lambda * (s.E - s.c_diff * std::log(lambda)));
  return s.K * std::pow(lambda, s.alpha) + cplx(0.0, s.D * lambda);
}

CharExponentHandle make_stable_handle(double alpha, double c_plus,
                                      double c_minus) {
  auto sc = std::make_shared<StableScaling>(
      stable_scaling_from_engine(alpha, c_plus, c_minus));
  CharExponentHandle h;
  h.psi = [sc](double l) { return eval_stable_scaling(*sc, l); };
  h.alpha = alpha;
  h.tails = {{c_plus + c_minus, alpha}};
  if (c_plus > 0.0) h.tails_hi = {{c_plus, alpha}};
  if (c_minus > 0.0) h.tails_lo = {{c_minus, alpha}};
  h.label = "stable";
  return h;
}

CharExponentHandle make_zeta_handle(const LevyMeasureSpec& spec, double t) {
  spec.validate();
  if (!(t > 0.0 && t <= 1.0))
    throw config_error("zeta handle: t must lie in (0,1]");
  CharExponentHandle h;
  if (spec.taper == Taper::none) {
    // exact self-similarity: the scaled exponent is the stable one
    auto sc = std::make_shared<StableScaling>(stable_scaling_from_engine(
        spec.alpha, spec.c_plus, spec.c_minus));
    h.psi = [sc](double l) { return eval_stable_scaling(*sc, l); };
  } else {
    auto eng =
        std::make_shared<PsiEngine>(spec, std::pow(t, 1.0 / spec.alpha));
    h.psi = [eng](double l) { return eng->eval(l); };
  }
  h.alpha = spec.alpha;
  h.tails = {{spec.c_plus + spec.c_minus, spec.alpha}};
  if (spec.taper == Taper::none) {
    // untapered tails are exact power laws, usable for mass corrections
    if (spec.c_plus > 0.0) h.tails_hi = {{spec.c_plus, spec.alpha}};
    if (spec.c_minus > 0.0) h.tails_lo = {{spec.c_minus, spec.alpha}};
  }
  h.label = "zeta";
  return h;
}

CharExponentHandle make_physical_handle(const LevyMeasureSpec& spec,
                                        const Theta& theta,
                                        const NuisanceSpec& nu, double t) {
  spec.validate();
  theta.validate();
  nu.validate(spec.alpha);
  if (!(t > 0.0 && t <= 1.0))
    throw config_error("physical handle: t must lie in (0,1]");
  CharExponentHandle h;
  const double beta = theta.beta, gamma = theta.gamma;
  if (spec.taper == Taper::none) {
    auto sc = std::make_shared<StableScaling>(stable_scaling_from_engine(
        spec.alpha, spec.c_plus, spec.c_minus));
    h.psi = [=](double l) {
      return cplx(0.0, l * beta * t) +
             t * eval_stable_scaling(*sc, gamma * l) + nuisance_psi(nu, t, l);
    };
  } else {
    auto eng = std::make_shared<PsiEngine>(spec);
    h.psi = [=](double l) {
      return cplx(0.0, l * beta * t) + t * eng->eval(gamma * l) +
             nuisance_psi(nu, t, l);
    };
  }
  h.alpha = spec.alpha;
  const double tc = t * std::pow(gamma, spec.alpha);
  h.tails = {{tc * (spec.c_plus + spec.c_minus), spec.alpha}};
  if (spec.taper == Taper::none &&
      nu.kind != NuisanceSpec::Kind::stable) {
    if (spec.c_plus > 0.0) h.tails_hi = {{tc * spec.c_plus, spec.alpha}};
    if (spec.c_minus > 0.0) h.tails_lo = {{tc * spec.c_minus, spec.alpha}};
  }
  h.extra_pad = std::fabs(beta) * t;
  if (nu.kind == NuisanceSpec::Kind::compound_poisson)
    h.extra_pad += 20.0 * nu.jump_std;
  if (nu.kind == NuisanceSpec::Kind::stable)
    h.tails.push_back({t * std::pow(nu.scale, nu.alpha_u), nu.alpha_u});
  h.label = "physical";
  return h;
}

void fft_radix2(std::vector<cplx>& a, int sign) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)))
    throw config_error("fft: size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  std::vector<cplx> root(n / 2);
  for (size_t k = 0; k < n / 2; ++k)
    root[k] =
        std::polar(1.0, double(sign) * 2.0 * kPi * double(k) / double(n));
  for (size_t len = 2; len <= n; len <<= 1) {
    const size_t stride = n / len;
    for (size_t i = 0; i < n; i += len)
      for (size_t k = 0; k < len / 2; ++k) {
        const cplx w = root[k * stride];
        const cplx u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
  }
}

namespace {

double tail_bound(const CharExponentHandle& h, double d) {
  // 2.7 covers the sum over aliased images (zeta(1+a) < 2.7 for a >= 0.3)
  double b = 0.0;
  for (auto [c, a] : h.tails) b += 2.7 * c * std::pow(d, -1.0 - a);
  return b;
}

// frequency truncation: smallest L with |cf(L)| (1+L) < cutoff, plus a
// sampled check that Re psi really falls polynomially
double lambda_cutoff(const CharExponentHandle& h, double cutoff) {
  auto w = [&](double l) { return std::abs(h.cf(l)) * (1.0 + l); };
  double L = 1.0;
  int it = 0;
  while (w(L) >= cutoff) {
    L *= 2.0;
    if (++it > 55)
      throw numeric_error(h.label +
                          ": cf decay too slow, frequency budget exceeded "
                          "(55 doublings)");
  }
  double lo = 0.5 * L, hi = L;
  for (int i = 0; i < 25; ++i) {
    const double mid = 0.5 * (lo + hi);
    (w(mid) >= cutoff ? lo : hi) = mid;
  }
  const double r1 = h.psi(hi).real(), r2 = h.psi(0.5 * hi).real(),
               r4 = h.psi(0.25 * hi).real();
  if (!(r1 < r2 && r2 < r4 && r1 <= 1.05 * r2))
    throw numeric_error(h.label + ": Re psi is not falling polynomially");
  return hi;
}

// cheap peak bound: (1/pi) int_0^L |cf|, log-spaced trapezoid
double peak_estimate(const CharExponentHandle& h, double L) {
  const int n = 240;
  const double lo = L * 1e-6;
  double acc = std::abs(h.cf(lo)) * lo;  // [0, lo] chunk, |cf| <= this scale
  double xp = lo, fp = std::abs(h.cf(lo));
  for (int i = 1; i <= n; ++i) {
    const double x = lo * std::pow(L / lo, double(i) / n);
    const double f = std::abs(h.cf(x));
    acc += 0.5 * (f + fp) * (x - xp);
    xp = x;
    fp = f;
  }
  return std::max(acc / kPi, 1e-12);
}

double alias_pad(const CharExponentHandle& h, double tol_abs) {
  double d = 1.0;
  while (tail_bound(h, d) > tol_abs && d < 1e9) d *= 1.25;
  return d + h.extra_pad;
}

struct FreqPlan {
  double lambda_max = 0.0, dlam = 0.0, period = 0.0, dx = 0.0;
  double peak_est = 0.0, alias_est = 0.0;
  size_t n = 0;     // fft size (fft path only)
  long m_max = 0;   // last nonzero frequency index
};

FreqPlan plan_fft(const CharExponentHandle& h, double xmax, double dx,
                  const InvertOptions& opts) {
  FreqPlan p;
  p.lambda_max = lambda_cutoff(h, opts.cutoff);
  p.peak_est = peak_estimate(h, p.lambda_max);
  const double pad = alias_pad(h, opts.alias_tol * p.peak_est);
  p.dx = std::min(dx, 0.999 * kPi / p.lambda_max);
  const double span = 2.0 * (xmax + pad);
  size_t n = 64;
  while (double(n) * p.dx < span && (long)n < opts.max_fft) n <<= 1;
  if (double(n) * p.dx < 2.3 * xmax + 2.0 * h.extra_pad)
    throw numeric_error(h.label +
                        ": fft budget cannot reach the requested span; "
                        "raise max_fft or shrink the grid");
  p.n = n;
  p.period = double(n) * p.dx;
  p.dlam = 2.0 * kPi / p.period;
  p.m_max = std::min<long>((long)std::floor(p.lambda_max / p.dlam),
                           (long)n / 2 - 1);
  const double pad_eff = 0.5 * p.period - xmax;
  p.alias_est = tail_bound(h, std::max(pad_eff, 1e-6)) / p.peak_est;
  return p;
}

// spectrum -> real values on the fft grid, scaled by 1/period
std::vector<double> fft_invert(const FreqPlan& p, const std::vector<cplx>& g) {
  std::vector<cplx> a(p.n, cplx(0.0, 0.0));
  for (long m = 0; m <= p.m_max; ++m) {
    const double par = (m & 1) ? -1.0 : 1.0;  // shifts x-origin to -P/2
    a[m] = par * g[m];
    if (m > 0) a[p.n - m] = par * std::conj(g[m]);
  }
  fft_radix2(a, -1);
  std::vector<double> out(p.n);
  for (size_t j = 0; j < p.n; ++j) out[j] = a[j].real() / p.period;
  return out;
}

void fit_side(DensityTable& tb, bool hi_side) {
  // log-log fit over the outer half-decade of the side, skipping noise
  TailFit& tf = hi_side ? tb.tail_hi : tb.tail_lo;
  const double edge = std::fabs(hi_side ? tb.x_grid.back() : tb.x_grid.front());
  const double from = 0.42 * edge, to = 0.95 * edge;
  const double floor = tb.peak * 1e-13;
  std::vector<double> lx, lv;
  double sgn = 0.0;
  for (size_t i = 0; i < tb.x_grid.size(); ++i) {
    const double x = tb.x_grid[i], v = tb.values[i];
    if (hi_side ? (x < from || x > to) : (x > -from || x < -to)) continue;
    if (std::fabs(v) <= floor) continue;
    if (sgn == 0.0) sgn = v > 0 ? 1.0 : -1.0;
    if (v * sgn <= 0.0) return;  // sign change: no clean power tail
    lx.push_back(std::log(std::fabs(x)));
    lv.push_back(std::log(std::fabs(v)));
  }
  if (lx.size() < 25) return;
  if (lx.size() > 512) {
    std::vector<double> sx, sv;
    const size_t stride = lx.size() / 512 + 1;
    for (size_t i = 0; i < lx.size(); i += stride) {
      sx.push_back(lx[i]);
      sv.push_back(lv[i]);
    }
    lx.swap(sx);
    lv.swap(sv);
  }
  const FitResult fr = ols_fit(lx, lv);
  tf.log_c = fr.intercept;
  tf.slope = fr.slope;
  tf.r2 = fr.r2;
  tf.x_from = from;
  tf.sign = sgn;
  tf.ok = (fr.r2 >= 0.99 && fr.slope < -1.02);
}

void finalize_table(DensityTable& tb) {
  double pk = 0.0;
  for (double v : tb.values) pk = std::max(pk, std::fabs(v));
  tb.peak = pk;
  if (!tb.signed_kernel) {
    double clipped = 0.0;
    for (double& v : tb.values)
      if (v < 0.0) {
        clipped += -v;
        v = 0.0;
      }
    tb.clipped_mass = clipped * tb.dx;
  }
  if (tb.dx > 0.0 && tb.x_grid.size() >= 64) {
    fit_side(tb, false);
    fit_side(tb, true);
  }
}

std::vector<cplx> eval_cf_cache(const CharExponentHandle& h,
                                const FreqPlan& p) {
  std::vector<cplx> g(p.m_max + 1);
  for (long m = 0; m <= p.m_max; ++m) g[m] = h.cf(m * p.dlam);
  return g;
}

}  // namespace

double DensityTable::eval(double x) const {
  if (x_grid.size() < 4 || dx <= 0.0)
    throw config_error("density table: no uniform grid to interpolate");
  const double x0 = x_grid.front(), x1 = x_grid.back();
  if (x < x0 || x > x1) {
    const TailFit& tf = (x < x0) ? tail_lo : tail_hi;
    if (!tf.ok) return 0.0;
    return tf.sign * std::exp(tf.log_c + tf.slope * std::log(std::fabs(x)));
  }
  const double u = (x - x0) / dx;
  long i = std::clamp<long>((long)std::floor(u), 1, (long)x_grid.size() - 3);
  const double s = u - double(i);
  const double wm = -s * (s - 1.0) * (s - 2.0) / 6.0;
  const double w0 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
  const double w1 = -(s + 1.0) * s * (s - 2.0) / 2.0;
  const double w2 = (s + 1.0) * s * (s - 1.0) / 6.0;
  double v = wm * values[i - 1] + w0 * values[i] + w1 * values[i + 1] +
             w2 * values[i + 2];
  if (!signed_kernel && v < 0.0) v = 0.0;
  return v;
}

double DensityTable::eval_deriv(double x) const {
  if (dvalues.empty())
    throw config_error("density table: derivative array not built");
  if (x_grid.size() < 4 || dx <= 0.0)
    throw config_error("density table: no uniform grid to interpolate");
  const double x0 = x_grid.front(), x1 = x_grid.back();
  if (x < x0 || x > x1) {
    const TailFit& tf = (x < x0) ? tail_lo : tail_hi;
    if (!tf.ok) return 0.0;
    const double mag = std::exp(tf.log_c + (tf.slope - 1.0) * std::log(std::fabs(x)));
    return tf.sign * tf.slope * mag * (x > 0 ? 1.0 : -1.0);
  }
  const double u = (x - x0) / dx;
  long i = std::clamp<long>((long)std::floor(u), 1, (long)x_grid.size() - 3);
  const double s = u - double(i);
  const double wm = -s * (s - 1.0) * (s - 2.0) / 6.0;
  const double w0 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
  const double w1 = -(s + 1.0) * s * (s - 2.0) / 2.0;
  const double w2 = (s + 1.0) * s * (s - 1.0) / 6.0;
  return wm * dvalues[i - 1] + w0 * dvalues[i] + w1 * dvalues[i + 1] +
         w2 * dvalues[i + 2];
}

double DensityTable::log_eval(double x, bool* floored) const {
  if (floored) *floored = false;
  const double v = eval(x);
  if (!(v > peak * 1e-300)) {
    if (floored) *floored = true;
    return std::log(peak) - 690.77552789821368;  // peak * 1e-300
  }
  return std::log(v);
}

double DensityTable::trapezoid_mass() const {
  double acc = 0.0;
  for (size_t i = 0; i + 1 < x_grid.size(); ++i)
    acc += 0.5 * (values[i] + values[i + 1]) * (x_grid[i + 1] - x_grid[i]);
  return acc;
}

double DensityTable::total_mass() const {
  double acc = trapezoid_mass();
  auto nbar = [](const std::vector<std::pair<double, double>>& tt, double y) {
    double m = 0.0;
    for (auto [c, a] : tt) m += (c / a) * std::pow(y, -a);
    return m;
  };
  auto fit_side = [&](const TailFit& tf, double edge) {
    if (!tf.ok || tf.slope >= -1.0) return 0.0;
    return tf.sign * std::exp(tf.log_c) *
           std::pow(std::fabs(edge), tf.slope + 1.0) / (-1.0 - tf.slope);
  };
  if (x_grid.front() < 0.0)
    acc += tail_terms_lo.empty()
               ? fit_side(tail_lo, x_grid.front())
               : nbar(tail_terms_lo, -x_grid.front());
  if (x_grid.back() > 0.0)
    acc += tail_terms_hi.empty() ? fit_side(tail_hi, x_grid.back())
                                 : nbar(tail_terms_hi, x_grid.back());
  // wrapped periodization images add mass inside the window; with exact
  // power tails their total is a convergent sum over image offsets
  const double X = std::max(std::fabs(x_grid.front()), x_grid.back());
  if (period > 2.0 * X + 1e-9 &&
      (!tail_terms_lo.empty() || !tail_terms_hi.empty())) {
    for (int k = 1; k <= 200000; ++k) {
      const double w = nbar(tail_terms_hi, k * period - X) -
                       nbar(tail_terms_hi, k * period + X) +
                       nbar(tail_terms_lo, k * period - X) -
                       nbar(tail_terms_lo, k * period + X);
      acc -= w;
      if (w < 1e-10) break;
    }
  }
  return acc;
}

DensityTable invert_to_density(const CharExponentHandle& handle,
                               const std::vector<double>& x_grid,
                               const InvertOptions& opts) {
  if (x_grid.empty()) throw config_error("invert: empty x grid");
  for (size_t i = 1; i < x_grid.size(); ++i)
    if (!(x_grid[i] > x_grid[i - 1]))
      throw config_error("invert: x grid must be strictly increasing");

  const double L = lambda_cutoff(handle, opts.cutoff);
  const double pk = peak_estimate(handle, L);
  double xmax = 0.0;
  for (double x : x_grid) xmax = std::max(xmax, std::fabs(x));
  // pad >= max|x| keeps the lambda step at or below pi / (2 max|x|)
  const double pad = std::max(alias_pad(handle, opts.alias_tol * pk), xmax);
  const double period = 2.0 * (xmax + pad);
  const double dlam = 2.0 * kPi / period;
  const long nlam = (long)std::ceil(L / dlam);
  if (nlam > opts.max_direct)
    throw numeric_error(handle.label +
                        ": direct inversion budget exceeded (" +
                        std::to_string(nlam) + " frequencies)");

  std::vector<cplx> g(nlam + 1);
  for (long m = 0; m <= nlam; ++m) g[m] = handle.cf(m * dlam);

  DensityTable tb;
  tb.x_grid = x_grid;
  tb.values.resize(x_grid.size());
  tb.dvalues.resize(x_grid.size());
  tb.lambda_max = L;
  tb.period = period;
  tb.alias_est = tail_bound(handle, pad > 1e-6 ? pad : 1e-6) / pk;
  tb.tail_terms_lo = handle.tails_lo;
  tb.tail_terms_hi = handle.tails_hi;
  for (size_t k = 0; k < x_grid.size(); ++k) {
    const double x = x_grid[k];
    cplx acc = 0.5 * g[0], dacc(0.0, 0.0);
    cplx ph(1.0, 0.0);
    const cplx step = std::polar(1.0, -dlam * x);
    for (long m = 1; m <= nlam; ++m) {
      if ((m & 1023) == 0) ph = std::polar(1.0, -dlam * x * double(m));
      else ph *= step;
      const cplx term = g[m] * ph;
      acc += term;
      dacc += cplx(0.0, -m * dlam) * term;
    }
    tb.values[k] = acc.real() * dlam / kPi;
    tb.dvalues[k] = dacc.real() * dlam / kPi;
  }
  // detect uniform spacing so interpolation and tail fits stay available
  if (x_grid.size() >= 2) {
    const double d0 = x_grid[1] - x_grid[0];
    bool uniform = true;
    for (size_t i = 1; i + 1 < x_grid.size(); ++i)
      if (std::fabs(x_grid[i + 1] - x_grid[i] - d0) > 1e-9 * d0)
        uniform = false;
    tb.dx = uniform ? d0 : 0.0;
  }
  finalize_table(tb);
  return tb;
}

DensityTable make_density_table(const CharExponentHandle& handle, double xmax,
                                double dx, const InvertOptions& opts) {
  if (!(xmax > 0.0) || !(dx > 0.0))
    throw config_error("density table: xmax and dx must be positive");
  const FreqPlan p = plan_fft(handle, xmax, dx, opts);
  const std::vector<cplx> base = eval_cf_cache(handle, p);
  std::vector<double> vals = fft_invert(p, base);
  std::vector<cplx> gd(base.size());
  for (long m = 0; m < (long)base.size(); ++m)
    gd[m] = cplx(0.0, -m * p.dlam) * base[m];
  std::vector<double> dvals = fft_invert(p, gd);

  const long K = (long)std::floor(xmax / p.dx + 1e-9);
  const long mid = (long)p.n / 2;
  DensityTable tb;
  tb.dx = p.dx;
  tb.lambda_max = p.lambda_max;
  tb.period = p.period;
  tb.alias_est = p.alias_est;
  tb.tail_terms_lo = handle.tails_lo;
  tb.tail_terms_hi = handle.tails_hi;
  tb.x_grid.resize(2 * K + 1);
  tb.values.resize(2 * K + 1);
  tb.dvalues.resize(2 * K + 1);
  for (long j = -K; j <= K; ++j) {
    tb.x_grid[j + K] = double(j) * p.dx;
    tb.values[j + K] = vals[mid + j];
    tb.dvalues[j + K] = dvals[mid + j];
  }
  finalize_table(tb);
  return tb;
}

CharExponentHandle make_f_handle(const LevyMeasureSpec& spec,
                                 const Theta& theta, const NuisanceSpec& nu,
                                 double t, const InvertOptions& opts) {
  spec.validate();
  theta.validate();
  nu.validate(spec.alpha);
  const bool limit = !(t > 0.0);
  if (!limit && !(t <= 1.0))
    throw config_error("f handle: t must lie in (0,1] or <= 0 for the limit");
  const double gamma = theta.gamma;
  const double kappa = limit ? 0.0 : std::pow(t, -1.0 / spec.alpha);

  CharExponentHandle h = limit
      ? make_stable_handle(spec.alpha, spec.c_plus, spec.c_minus)
      : make_zeta_handle(spec, t);
  auto base_psi = h.psi;
  const bool with_nu = !limit && nu.kind != NuisanceSpec::Kind::zero;
  if (with_nu) {
    h.psi = [=](double l) {
      return base_psi(l) + nuisance_psi(nu, t, kappa * l / gamma);
    };
    if (nu.kind == NuisanceSpec::Kind::stable)
      h.tails.push_back(
          {t * std::pow(nu.scale * kappa / gamma, nu.alpha_u), nu.alpha_u});
    if (nu.kind == NuisanceSpec::Kind::compound_poisson) {
      // the rescaled jump bump can park probability far outside the stable
      // bulk; pad the period so aliases stay below tolerance
      const double width = kappa * nu.jump_std / gamma;
      const double amp = t * nu.rate / (2.5 * width);
      if (amp > 0.2 * opts.alias_tol) h.extra_pad += 12.0 * width;
    }
  }
  h.label = limit ? "limit kernels" : "f kernels";
  return h;
}

FKernelSet f_kernels(const LevyMeasureSpec& spec, const Theta& theta,
                     const NuisanceSpec& nu, double t, double xmax, double dx,
                     const InvertOptions& opts) {
  const CharExponentHandle h = make_f_handle(spec, theta, nu, t, opts);
  const bool limit = !(t > 0.0);
  const double gamma = theta.gamma;
  const double kappa = limit ? 0.0 : std::pow(t, -1.0 / spec.alpha);
  const auto base_psi =
      (limit ? make_stable_handle(spec.alpha, spec.c_plus, spec.c_minus)
             : make_zeta_handle(spec, t))
          .psi;
  const bool with_nu = !limit && nu.kind != NuisanceSpec::Kind::zero;

  const FreqPlan p = plan_fft(h, xmax, dx, opts);

  // shared lambda cache: exponent part and nuisance factors
  std::vector<cplx> A(p.m_max + 1), B(p.m_max + 1), M(p.m_max + 1);
  for (long m = 0; m <= p.m_max; ++m) {
    const double l = m * p.dlam;
    A[m] = std::exp(base_psi(l));
    B[m] = with_nu ? std::exp(nuisance_psi(nu, t, kappa * l / gamma))
                   : cplx(1.0, 0.0);
    M[m] = with_nu ? kappa * nuisance_cf_mean(nu, t, kappa * l / gamma)
                   : cplx(0.0, 0.0);
  }
  std::vector<cplx> spec_f(p.m_max + 1), spec_f1(p.m_max + 1),
      spec_h(p.m_max + 1);
  for (long m = 0; m <= p.m_max; ++m) {
    const cplx il(0.0, -m * p.dlam);
    spec_f[m] = A[m] * B[m];
    spec_f1[m] = il * spec_f[m];
    spec_h[m] = il * A[m] * M[m];
  }

  const std::vector<double> vf = fft_invert(p, spec_f);
  const std::vector<double> vf1 = fft_invert(p, spec_f1);
  std::vector<double> vh;
  if (with_nu) vh = fft_invert(p, spec_h);
  // second derivative of f feeds the finite-difference consistency checks
  for (long m = 0; m <= p.m_max; ++m)
    spec_h[m] = cplx(0.0, -m * p.dlam) * spec_f1[m];
  const std::vector<double> vf2d = fft_invert(p, spec_h);

  const long K = (long)std::floor(xmax / p.dx + 1e-9);
  const long mid = (long)p.n / 2;
  auto mk = [&](bool signed_k) {
    DensityTable tb;
    tb.dx = p.dx;
    tb.lambda_max = p.lambda_max;
    tb.period = p.period;
    tb.alias_est = p.alias_est;
    tb.signed_kernel = signed_k;
    tb.t = limit ? 0.0 : t;
    tb.is_limit = limit;
    tb.x_grid.resize(2 * K + 1);
    tb.values.resize(2 * K + 1);
    for (long j = -K; j <= K; ++j) tb.x_grid[j + K] = double(j) * p.dx;
    return tb;
  };
  FKernelSet ks;
  ks.t = limit ? 0.0 : t;
  ks.gamma = gamma;
  ks.f = mk(false);
  ks.f.tail_terms_lo = h.tails_lo;
  ks.f.tail_terms_hi = h.tails_hi;
  ks.f1 = mk(true);
  ks.f2 = mk(true);
  ks.f.dvalues.resize(2 * K + 1);
  ks.f1.dvalues.resize(2 * K + 1);
  for (long j = -K; j <= K; ++j) {
    const double z = double(j) * p.dx;
    ks.f.values[j + K] = vf[mid + j];
    ks.f.dvalues[j + K] = vf1[mid + j];
    ks.f1.values[j + K] = vf1[mid + j];
    ks.f1.dvalues[j + K] = vf2d[mid + j];
    const double hval = with_nu ? vh[mid + j] : 0.0;
    ks.f2.values[j + K] = z * vf1[mid + j] - hval / gamma;
  }
  finalize_table(ks.f);
  finalize_table(ks.f1);
  finalize_table(ks.f2);
  return ks;
}

DensityTable transition_density(const LevyMeasureSpec& spec,
                                const Theta& theta, const NuisanceSpec& nu,
                                double t, const std::vector<double>& x_grid,
                                const InvertOptions& opts) {
  spec.validate();
  theta.validate();
  nu.validate(spec.alpha);
  if (!(t > 0.0 && t <= 1.0))
    throw config_error("transition density: t must lie in (0,1]");
  if (x_grid.empty()) throw config_error("transition density: empty x grid");
  const double kappa = std::pow(t, -1.0 / spec.alpha);
  const double ct = c_t(spec, t);
  const double scale = kappa / theta.gamma;
  auto z_of = [&](double x) {
    return scale * (x - theta.beta * t + theta.gamma * ct);
  };
  double zmax = 10.0;
  for (double x : x_grid) zmax = std::max(zmax, std::fabs(z_of(x)));
  // the kernel table covers the mapped window up to a cap; the fitted tails
  // take over beyond it
  const double ztab = std::min(zmax * 1.05 + 2.0, 400.0);
  FKernelSet ks = f_kernels(spec, theta, nu, t, ztab, 0.01, opts);

  DensityTable tb;
  tb.x_grid = x_grid;
  tb.t = t;
  tb.values.resize(x_grid.size());
  tb.dvalues.resize(x_grid.size());
  tb.lambda_max = ks.f.lambda_max;
  tb.period = ks.f.period / scale;  // image spacing mapped to x units
  tb.alias_est = ks.f.alias_est;
  tb.clipped_mass = ks.f.clipped_mass;
  if (spec.taper == Taper::none && nu.kind != NuisanceSpec::Kind::stable) {
    const double tc = t * std::pow(theta.gamma, spec.alpha);
    if (spec.c_plus > 0.0) tb.tail_terms_hi = {{tc * spec.c_plus, spec.alpha}};
    if (spec.c_minus > 0.0)
      tb.tail_terms_lo = {{tc * spec.c_minus, spec.alpha}};
  }
  for (size_t i = 0; i < x_grid.size(); ++i) {
    const double z = z_of(x_grid[i]);
    tb.values[i] = scale * ks.f.eval(z);
    tb.dvalues[i] = scale * scale * ks.f1.eval(z);
  }
  if (x_grid.size() >= 2) {
    const double d0 = x_grid[1] - x_grid[0];
    bool uniform = true;
    for (size_t i = 1; i + 1 < x_grid.size(); ++i)
      if (std::fabs(x_grid[i + 1] - x_grid[i] - d0) > 1e-9 * d0)
        uniform = false;
    tb.dx = uniform ? d0 : 0.0;
  }
  finalize_table(tb);
  return tb;
}

DensityTable transition_density_direct(const LevyMeasureSpec& spec,
                                       const Theta& theta,
                                       const NuisanceSpec& nu, double t,
                                       const std::vector<double>& x_grid,
                                       const InvertOptions& opts) {
  DensityTable tb =
      invert_to_density(make_physical_handle(spec, theta, nu, t), x_grid, opts);
  tb.t = t;
  return tb;
}

}  // namespace levylan

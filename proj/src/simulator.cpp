#include "levylan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "levylan/quadrature.hpp"

namespace levylan {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// per-unit-C one-side jump density f(u) u^{-alpha-1}
double unit_density(const LevyMeasureSpec& spec, double u) {
  return taper_factor(spec, u) * std::pow(u, -spec.alpha - 1.0);
}

}  // namespace

double SamplingScheme::rate_check(double alpha) const {
  return std::pow(double(n), -0.5) * std::pow(h, 1.0 / alpha - 1.0);
}

void SamplingScheme::validate(double alpha, double rate_threshold) const {
  if (n < 1) throw config_error("scheme: n must be >= 1");
  if (!(h > 0.0) || h > 1.0) throw config_error("scheme: h must lie in (0, 1]");
  if (alpha > 1.0 && rate_check(alpha) > rate_threshold)
    throw config_error(
        "scheme: n^{-1/2} h^{1/alpha-1} too large for drift estimation");
}

TruncatedMeasure::TruncatedMeasure(const LevyMeasureSpec& spec, double eps_in)
    : spec_(spec) {
  spec.validate();
  if (!(eps_in > 0.0)) throw config_error("truncated measure: eps must be > 0");
  if (eps_in > 1.0)
    throw config_error(
        "truncated measure: eps must be <= 1 (unit-ball compensation)");
  eps = eps_in;
  side_prob_plus = spec.c_plus / (spec.c_plus + spec.c_minus);
  small_var = moment_integral(spec, 2, 0.0, eps);
  comp_mean = moment_integral(spec, 1, eps, 1.0);
  if (eps >= spec.support_radius()) return;  // nothing above the cut
  closed_form_ = (spec.taper == Taper::none);
  if (closed_form_) {
    g_eps = std::pow(eps, -spec.alpha) / spec.alpha;
  } else {
    LevyMeasureSpec unit = spec;
    unit.c_plus = 1.0;
    unit.c_minus = 0.0;
    g_eps = mass_above(unit, eps);
    // effective upper end: the support bound, or where the tapered tail has
    // given up all its mass
    double hi_eff = spec.support_radius();
    if (!std::isfinite(hi_eff)) {
      double lo = eps, acc = 0.0;
      for (int it = 0;; ++it) {
        if (it > 400)
          throw numeric_error("truncated measure: taper tail does not decay");
        const double hi2 = lo * 1.6;
        double v = 0.0, e = 0.0;
        long ev = 0;
        gk15_panel<double>([&](double u) { return unit_density(spec_, u); },
                           lo, hi2, v, e, ev);
        acc += v;
        lo = hi2;
        if (it > 4 && v < 1e-17 * acc) break;
      }
      hi_eff = lo;
    }
    const int ncell = 1024;
    xs_.resize(ncell + 1);
    const double lr = std::log(hi_eff / eps) / ncell;
    for (int i = 0; i <= ncell; ++i) xs_[i] = eps * std::exp(lr * i);
    xs_.front() = eps;
    xs_.back() = hi_eff;
    gs_.assign(ncell + 1, 0.0);
    for (int i = ncell - 1; i >= 0; --i) {
      double v = 0.0, e = 0.0;
      long ev = 0;
      gk15_panel<double>([&](double u) { return unit_density(spec_, u); },
                         xs_[i], xs_[i + 1], v, e, ev);
      gs_[i] = gs_[i + 1] + v;
    }
    // the cell table must reproduce the adaptive route or the inversion
    // below would sample a different measure
    if (std::fabs(gs_.front() - g_eps) > 1e-7 * g_eps)
      throw numeric_error("truncated measure: size table mismatch");
  }
  intensity = (spec.c_plus + spec.c_minus) * g_eps;
}

double TruncatedMeasure::magnitude(double v) const {
  if (!(v > 0.0 && v < 1.0))
    throw config_error("magnitude: v must lie in (0,1)");
  if (!(g_eps > 0.0))
    throw numeric_error("magnitude: restricted measure is empty");
  if (closed_form_) return eps * std::pow(v, -1.0 / spec_.alpha);
  const double y = v * gs_.front();
  auto it = std::lower_bound(gs_.begin(), gs_.end(), y, std::greater<>());
  size_t i = size_t(it - gs_.begin());
  if (i == 0) return xs_.front();
  if (i >= gs_.size()) i = gs_.size() - 1;
  --i;  // cell with gs_[i] >= y >= gs_[i+1]
  double lo = xs_[i], hi = xs_[i + 1];
  const double tfrac =
      std::clamp((gs_[i] - y) / std::max(gs_[i] - gs_[i + 1], 1e-300), 0.0, 1.0);
  double x = lo * std::pow(hi / lo, tfrac);
  const double tol = 1e-10 * gs_.front();
  for (int iter = 0; iter < 60; ++iter) {
    double seg = 0.0, e = 0.0;
    long ev = 0;
    gk15_panel<double>([&](double u) { return unit_density(spec_, u); }, x,
                       xs_[i + 1], seg, e, ev);
    const double res = gs_[i + 1] + seg - y;  // G(x) - y, G decreasing
    if (std::fabs(res) <= tol) break;
    if (res > 0.0)
      lo = x;
    else
      hi = x;
    const double dens = unit_density(spec_, x);
    double xn = x + res / std::max(dens, 1e-300);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
  }
  return x;
}

double TruncatedMeasure::draw_size(Stream& st) const {
  if (!(intensity > 0.0))
    throw numeric_error("draw_size: restricted measure is empty");
  const double side = st.uniform();
  const double v = st.uniform();
  const double mag = magnitude(v);
  return side < side_prob_plus ? mag : -mag;
}

JumpLedger sample_ledger(const LevyMeasureSpec& spec, double T, double eps,
                         uint64_t seed, uint64_t rep, double max_expected,
                         const TruncatedMeasure* tm) {
  if (!(T > 0.0)) throw config_error("sample_ledger: T must be > 0");
  std::optional<TruncatedMeasure> local;
  if (!tm) local.emplace(spec, eps);
  const TruncatedMeasure& m = tm ? *tm : *local;
  if (m.eps != eps)
    throw config_error("sample_ledger: eps mismatch with the prebuilt measure");
  JumpLedger led;
  led.horizon = T;
  led.eps = eps;
  led.comp_mean = m.comp_mean;
  led.small_var = m.small_var;
  led.intensity = m.intensity;
  const double mean = T * m.intensity;
  if (!(mean <= max_expected))
    throw config_error("sample_ledger: expected jump count exceeds the budget");
  if (mean == 0.0) return led;
  Stream sc = Stream::keyed(seed, rep, StreamTag::ledger_count);
  const uint64_t n = sc.poisson(mean);
  led.times.resize(n);
  led.sizes.resize(n);
  Stream stt = Stream::keyed(seed, rep, StreamTag::ledger_times);
  for (auto& t : led.times) t = stt.uniform(0.0, T);
  std::sort(led.times.begin(), led.times.end());
  Stream sts = Stream::keyed(seed, rep, StreamTag::ledger_sizes);
  for (auto& s : led.sizes) s = m.draw_size(sts);
  return led;
}

double z_from_ledger(const JumpLedger& led, double t, double surrogate_w) {
  if (!(t >= 0.0) || t > led.horizon * (1.0 + 1e-12))
    throw config_error("z_from_ledger: t outside the ledger horizon");
  if (t == 0.0) return 0.0;
  double s = 0.0;
  for (size_t i = 0; i < led.times.size() && led.times[i] <= t; ++i)
    s += led.sizes[i];
  return s - t * led.comp_mean + surrogate_w;
}

double z_from_ledger(const JumpLedger& led, double t, Stream& st) {
  const double w =
      t > 0.0 ? std::sqrt(led.small_var * t) * st.normal() : 0.0;
  return z_from_ledger(led, t, w);
}

PathSample sample_path(const LevyMeasureSpec& spec, const Theta& theta,
                       const NuisanceSpec& nu, const SamplingScheme& sch,
                       double eps, uint64_t seed, uint64_t rep,
                       SmallJumpMode mode, const TruncatedMeasure* tm) {
  spec.validate();
  theta.validate();
  nu.validate(spec.alpha);
  // sampling works for any non-degenerate scheme; rate quality is a verdict,
  // not a precondition
  sch.validate(spec.alpha, kRateHardBound);
  PathSample p;
  p.theta = theta;
  p.nuisance = nu;
  p.scheme = sch;
  p.small_jumps = mode;
  p.seed = seed;
  p.rep = rep;
  const double T = sch.horizon();
  p.ledger = sample_ledger(spec, T, eps, seed, rep, 1e7, tm);
  const long n = sch.n;
  p.t_grid.resize(n + 1);
  for (long k = 0; k <= n; ++k) p.t_grid[k] = double(k) * sch.h;
  p.z_values.assign(n + 1, 0.0);
  p.u_values.assign(n + 1, 0.0);
  p.x_values.assign(n + 1, 0.0);

  // Z: jump walk minus compensator drift plus one shared Brownian path
  Stream sb = Stream::keyed(seed, rep, StreamTag::surrogate);
  const double bstep = std::sqrt(p.ledger.small_var * sch.h);
  double bw = 0.0, jsum = 0.0;
  size_t j = 0;
  for (long k = 1; k <= n; ++k) {
    if (mode == SmallJumpMode::gaussian) bw += bstep * sb.normal();
    while (j < p.ledger.times.size() && p.ledger.times[j] <= p.t_grid[k])
      jsum += p.ledger.sizes[j++];
    p.z_values[k] = jsum - p.t_grid[k] * p.ledger.comp_mean + bw;
  }

  Stream su = Stream::keyed(seed, rep, StreamTag::nuisance);
  if (nu.kind == NuisanceSpec::Kind::compound_poisson) {
    const uint64_t nj = su.poisson(nu.rate * T);
    std::vector<double> jt(nj), js(nj);
    for (auto& t : jt) t = su.uniform(0.0, T);
    std::sort(jt.begin(), jt.end());
    for (auto& s : js) {
      if (nu.jump_law == NuisanceSpec::JumpLaw::normal) {
        s = nu.jump_std * su.normal();
      } else {
        // Laplace with matching variance, by inverse CDF
        const double b = nu.jump_std / std::sqrt(2.0);
        const double u = su.uniform();
        s = u < 0.5 ? b * std::log(2.0 * u) : -b * std::log(2.0 * (1.0 - u));
      }
    }
    double usum = 0.0;
    size_t ji = 0;
    for (long k = 1; k <= n; ++k) {
      while (ji < jt.size() && jt[ji] <= p.t_grid[k]) usum += js[ji++];
      p.u_values[k] = usum;
    }
  } else if (nu.kind == NuisanceSpec::Kind::stable) {
    const StableS1 par{nu.alpha_u, nu.scale, 0.0, 0.0};
    for (long k = 1; k <= n; ++k)
      p.u_values[k] = p.u_values[k - 1] + sample_stable_z(par, sch.h, su);
  }

  for (long k = 0; k <= n; ++k)
    p.x_values[k] =
        theta.beta * p.t_grid[k] + theta.gamma * p.z_values[k] + p.u_values[k];
  return p;
}

std::vector<double> normalized_increments(const PathSample& path,
                                          const LevyMeasureSpec& spec,
                                          const Theta& theta,
                                          const SamplingScheme& sch) {
  if (theta.beta != path.theta.beta || theta.gamma != path.theta.gamma)
    throw config_error(
        "normalized_increments: theta differs from the path metadata");
  if (sch.n != path.scheme.n || sch.h != path.scheme.h)
    throw config_error(
        "normalized_increments: scheme differs from the path metadata");
  if (path.x_values.size() != size_t(sch.n) + 1)
    throw config_error("normalized_increments: malformed path");
  const double ch = c_t(spec, sch.h);
  const double hpow = std::pow(sch.h, 1.0 / spec.alpha);
  std::vector<double> xi(size_t(sch.n));
  for (long k = 1; k <= sch.n; ++k)
    xi[size_t(k - 1)] =
        (path.x_values[k] - path.x_values[k - 1] - theta.beta * sch.h +
         theta.gamma * ch) /
        (theta.gamma * hpow);
  return xi;
}

StableS1 stable_s1_params(double alpha, double c_plus, double c_minus) {
  if (!(alpha > 0.0 && alpha < 2.0) || !(c_plus >= 0.0) ||
      !(c_minus >= 0.0) || !(c_plus + c_minus > 0.0))
    throw config_error("stable_s1_params: invalid parameters");
  const double csum = c_plus + c_minus, cdiff = c_plus - c_minus;
  StableS1 par;
  par.alpha = alpha;
  par.beta_s = cdiff / csum;
  if (alpha == 1.0) {
    par.sigma = 0.5 * kPi * csum;
    par.loc = cdiff * (1.0 - kEulerGamma);
  } else {
    par.sigma = std::pow(
        -std::tgamma(-alpha) * csum * std::cos(0.5 * kPi * alpha), 1.0 / alpha);
    par.loc = cdiff / (alpha - 1.0);
  }
  return par;
}

double sample_stable_z(const StableS1& par, double t, Stream& st) {
  if (!(t >= 0.0)) throw config_error("sample_stable_z: t must be >= 0");
  if (t == 0.0) return 0.0;
  const double V = st.uniform(-0.5 * kPi, 0.5 * kPi);
  const double W = st.exponential();
  const double a = par.alpha, b = par.beta_s;
  if (a == 1.0) {
    const double pb = 0.5 * kPi + b * V;
    const double x0 =
        (2.0 / kPi) *
        (pb * std::tan(V) -
         b * std::log((0.5 * kPi * W * std::cos(V)) / pb));
    const double sig = par.sigma * t;
    double z = sig * x0 + t * par.loc;
    if (b != 0.0) z += (2.0 / kPi) * b * sig * std::log(sig);
    return z;
  }
  double x0;
  if (b == 0.0) {
    x0 = std::sin(a * V) / std::pow(std::cos(V), 1.0 / a) *
         std::pow(std::cos((1.0 - a) * V) / W, (1.0 - a) / a);
  } else {
    const double tp = std::tan(0.5 * kPi * a);
    const double B = std::atan(b * tp) / a;
    const double A = std::pow(1.0 + b * b * tp * tp, 0.5 / a);
    x0 = A * std::sin(a * (V + B)) / std::pow(std::cos(V), 1.0 / a) *
         std::pow(std::cos(V - a * (V + B)) / W, (1.0 - a) / a);
  }
  return par.sigma * std::pow(t, 1.0 / a) * x0 + t * par.loc;
}

std::vector<double> sample_stable_path(const StableS1& par,
                                       const SamplingScheme& sch,
                                       uint64_t seed, uint64_t rep) {
  sch.validate(par.alpha, kRateHardBound);
  Stream st = Stream::keyed(seed, rep, StreamTag::stable_increment);
  std::vector<double> z(size_t(sch.n) + 1, 0.0);
  for (long k = 1; k <= sch.n; ++k)
    z[size_t(k)] = z[size_t(k - 1)] + sample_stable_z(par, sch.h, st);
  return z;
}

}  // namespace levylan

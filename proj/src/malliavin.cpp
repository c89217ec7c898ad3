#include "levylan/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "levylan/score_fisher.hpp"
#include "levylan/stats.hpp"

namespace levylan {

namespace {

// chi(u) m(u) = -(u^2 m(u))', so every truncated compensator integral of chi
// telescopes to edge values of u^2 [m(u) - m(-u)]
double chi_edge(const LevyMeasureSpec& spec, double v) {
  return v * v * (m_density(spec, v) - m_density(spec, -v));
}

struct TrendFit {
  double slope = 0.0, se = 0.0;
};

// weighted straight-line slope with per-point sigmas taken as known
TrendFit wls_trend(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& sig) {
  double sw = 0.0, swx = 0.0;
  std::vector<double> w(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double s = std::max(sig[i], 1e-12);
    w[i] = 1.0 / (s * s);
    sw += w[i];
    swx += w[i] * x[i];
  }
  const double xb = swx / sw;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - xb) * (x[i] - xb);
    sxy += w[i] * (x[i] - xb) * y[i];
  }
  if (!(sxx > 0.0)) return {0.0, 0.0};
  return {sxy / sxx, std::sqrt(1.0 / sxx)};
}

}  // namespace

MalliavinFunctionals functionals_from_ledger(const JumpLedger& led,
                                             const LevyMeasureSpec& spec,
                                             const Theta& theta, double t,
                                             TruncationMode mode) {
  spec.validate();
  theta.validate();
  if (!(t > 0.0)) throw config_error("functionals: t must be positive");
  if (led.horizon < t * (1.0 - 1e-12))
    throw config_error("functionals: ledger horizon shorter than t");
  if (!(led.eps > 0.0)) throw config_error("functionals: ledger eps not set");

  MalliavinFunctionals fn;
  fn.t = t;
  fn.gamma = theta.gamma;
  fn.alpha = spec.alpha;
  fn.mode = mode;
  fn.t_pow = std::pow(t, 1.0 / spec.alpha);
  fn.eps_flag = led.eps > fn.t_pow;

  const double u0 = spec.u0;
  double su2 = 0.0, su3 = 0.0, k2 = 0.0;
  double chi_small = 0.0, chi_large = 0.0;
  for (size_t i = 0; i < led.times.size() && led.times[i] <= t; ++i) {
    const double u = led.sizes[i];
    const double au = std::fabs(u);
    su2 += u * u;
    su3 += u * u * u;
    if (au <= fn.t_pow) k2 += u * u;
    if (au <= u0)
      chi_small += chi(spec, u);
    else
      chi_large += chi(spec, u);
  }

  // compensated chi over (eps, u0] plus compensated chi above u0; the tail
  // compensator integral collapses to the edge value at u0, which makes the
  // total mean zero and independent of where the u0 split sits
  const double comp = led.eps < u0 ? chi_edge(spec, led.eps) - chi_edge(spec, u0) : 0.0;
  fn.delta1 = chi_small - t * comp + chi_large - t * chi_edge(spec, u0);

  // sub-eps compensator material: means for d1, d2, kappa and an L2 size for
  // the mean-zero compensated chi remainder
  const double m2 = led.small_var;
  double m3 = 0.0;
  if (!spec.symmetric()) m3 = moment_integral(spec, 3, 0.0, led.eps);
  const double kcap =
      fn.eps_flag ? moment_integral(spec, 2, 0.0, fn.t_pow) : m2;
  fn.d1_resid = theta.gamma * t * m2;
  fn.d2_resid = 2.0 * theta.gamma * t * m3;
  fn.kappa_resid = t * kcap;
  const double lmax = std::max(std::fabs(taper_log_deriv(spec, led.eps)),
                               std::fabs(taper_log_deriv(spec, -led.eps)));
  fn.delta1_resid =
      (std::fabs(spec.alpha - 1.0) + led.eps * lmax) * std::sqrt(t * m2);

  fn.d1 = theta.gamma * su2;
  fn.d2 = 2.0 * theta.gamma * su3;
  fn.kappa = k2;
  if (mode == TruncationMode::mean_patch) {
    fn.d1 += fn.d1_resid;
    fn.d2 += fn.d2_resid;
    fn.kappa += fn.kappa_resid;
  }
  fn.degenerate = !(fn.d1 > 0.0);

  fn.z_t = z_from_ledger(led, t);
  fn.ct = c_t(spec, t);
  fn.z_tilde = fn.z_t + fn.ct;
  return fn;
}

ModifiedWeight modified_weight(const MalliavinFunctionals& fn, double z_t) {
  if (fn.degenerate || !(fn.d1 > 0.0))
    throw numeric_error("weight: D X_t vanishes on this path");
  double delta1 = fn.delta1;
  if (fn.mode == TruncationMode::mean_patch)
    delta1 += (fn.alpha - 1.0) * (z_t - fn.z_t);
  const double rat = delta1 / fn.d1 + fn.d2 / (fn.d1 * fn.d1);
  ModifiedWeight w;
  w.xi_beta = fn.t * rat;
  w.xi_gamma = z_t * rat - 1.0 / fn.gamma;
  w.scaled = {fn.t_pow * rat, (z_t + fn.ct) * rat - 1.0 / fn.gamma};
  return w;
}

KappaReport kappa_inverse_moments(const LevyMeasureSpec& spec,
                                  const std::vector<double>& t_grid,
                                  const std::vector<double>& p_list,
                                  long mc_size, uint64_t seed) {
  spec.validate();
  if (t_grid.size() < 2) throw config_error("kappa sweep: need >= 2 t values");
  if (p_list.empty()) throw config_error("kappa sweep: empty p list");
  for (double p : p_list)
    if (!(p >= 0.0)) throw config_error("kappa sweep: p must be >= 0");
  if (mc_size < 100) throw config_error("kappa sweep: mc_size too small");

  KappaReport rep;
  rep.mc_size = mc_size;
  const Theta th{};  // kappa does not see theta
  std::vector<std::vector<MeanVar>> acc(t_grid.size());
  for (size_t ti = 0; ti < t_grid.size(); ++ti) {
    const double t = t_grid[ti];
    if (!(t > 0.0 && t <= 1.0))
      throw config_error("kappa sweep: t must lie in (0, 1]");
    const double eps = std::pow(t, 1.0 / spec.alpha) / 10.0;
    const TruncatedMeasure tm(spec, eps);
    acc[ti].assign(p_list.size(), MeanVar{});
    const double scale = std::pow(t, -2.0 / spec.alpha);
    for (long i = 0; i < mc_size; ++i) {
      const uint64_t r = uint64_t(ti) * uint64_t(mc_size) + uint64_t(i);
      const JumpLedger led = sample_ledger(spec, t, eps, seed, r, 1e7, &tm);
      const MalliavinFunctionals fn =
          functionals_from_ledger(led, spec, th, t);
      const double y = scale * fn.kappa;
      for (size_t pi = 0; pi < p_list.size(); ++pi)
        acc[ti][pi].add(std::pow(y, -p_list[pi]));
    }
    for (size_t pi = 0; pi < p_list.size(); ++pi)
      rep.cells.push_back({t, p_list[pi], acc[ti][pi].mean, acc[ti][pi].se()});
  }

  rep.pass = true;
  for (size_t pi = 0; pi < p_list.size(); ++pi) {
    std::vector<double> lx, ly, ls;
    for (size_t ti = 0; ti < t_grid.size(); ++ti) {
      const MeanVar& mv = acc[ti][pi];
      lx.push_back(std::log(t_grid[ti]));
      ly.push_back(std::log(mv.mean));
      ls.push_back(mv.se() / mv.mean);
    }
    const TrendFit tf = wls_trend(lx, ly, ls);
    rep.slope.push_back(tf.slope);
    rep.slope_se.push_back(tf.se);
    // growth as t -> 0 shows up as a negative slope against log t
    if (!(tf.slope >= -2.0 * tf.se)) rep.pass = false;
    if (!std::isfinite(tf.slope)) rep.pass = false;
  }
  return rep;
}

RepresentationReport check_representation(const LevyMeasureSpec& spec,
                                          const Theta& theta, double t,
                                          long mc_size, int bins,
                                          uint64_t seed) {
  spec.validate();
  theta.validate();
  if (!(t > 0.0 && t <= 1.0))
    throw config_error("representation: t must lie in (0, 1]");
  if (bins < 2) throw config_error("representation: need >= 2 bins");
  if (mc_size / bins < 500)
    throw config_error("representation: need >= 500 samples per bin");

  const double eps = std::pow(t, 1.0 / spec.alpha) / 10.0;
  const TruncatedMeasure tm(spec, eps);
  std::vector<double> xs, wb, wg;
  xs.reserve(mc_size);
  wb.reserve(mc_size);
  wg.reserve(mc_size);
  RepresentationReport rep;
  rep.mc_size = mc_size;
  for (long i = 0; i < mc_size; ++i) {
    const JumpLedger led =
        sample_ledger(spec, t, eps, seed, uint64_t(i), 1e7, &tm);
    Stream sur = Stream::keyed(seed, uint64_t(i), StreamTag::surrogate);
    const double z = z_from_ledger(led, t, sur);
    const MalliavinFunctionals fn =
        functionals_from_ledger(led, spec, theta, t);
    if (fn.degenerate) {
      ++rep.dropped;
      continue;
    }
    const ModifiedWeight w = modified_weight(fn, z);
    xs.push_back(theta.beta * t + theta.gamma * z);
    wb.push_back(w.xi_beta);
    wg.push_back(w.xi_gamma);
  }

  const long kept = long(xs.size());
  std::vector<long> idx(kept);
  std::iota(idx.begin(), idx.end(), 0L);
  std::sort(idx.begin(), idx.end(),
            [&](long a, long b) { return xs[a] < xs[b]; });

  const long q = kept / bins;
  long start = 0;
  std::vector<double> centers;
  for (int b = 0; b < bins; ++b) {
    const long stop = (b == bins - 1) ? kept : start + q;
    RepresentationBin rb;
    MeanVar mx, mb, mg;
    for (long j = start; j < stop; ++j) {
      mx.add(xs[idx[j]]);
      mb.add(wb[idx[j]]);
      mg.add(wg[idx[j]]);
    }
    rb.count = stop - start;
    rb.center = mx.mean;
    rb.mean_beta = mb.mean;
    rb.se_beta = mb.se();
    rb.mean_gamma = mg.mean;
    rb.se_gamma = mg.se();
    rep.bins.push_back(rb);
    centers.push_back(rb.center);
    start = stop;
  }

  // score table window sized off the bin centers; the few samples past it
  // are served by the fitted power tails of the kernel tables
  double zmax = 20.0;
  const double zscale = 1.0 / (theta.gamma * std::pow(t, 1.0 / spec.alpha));
  const double ct = c_t(spec, t);
  for (double c : centers) {
    const double z = std::fabs(zscale * (c - theta.beta * t + theta.gamma * ct));
    zmax = std::max(zmax, 1.1 * z + 5.0);
  }
  const ScoreContext sc =
      make_score_context(spec, theta, NuisanceSpec{}, t, zmax, 0.01);

  // the theorem's identity is E[Xi | X] = g(X); its finite-bin form compares
  // the bin mean of Xi with the bin mean of g over the same samples.  Scoring
  // the single bin center instead fails spuriously where g is convex (the
  // center bins, through the curvature) and where bins are wide (the outer
  // power-law bins, through a 1/x Jensen gap near 2x), both with the weight
  // being exactly right.
  long okb = 0, okg = 0;
  start = 0;
  for (int b = 0; b < bins; ++b) {
    const long stop = (b == bins - 1) ? kept : start + q;
    RepresentationBin& rb = rep.bins[b];
    MeanVar gb, gg;
    for (long j = start; j < stop; ++j) {
      const std::array<double, 2> g = sc.at(xs[idx[j]]);
      gb.add(g[0]);
      gg.add(g[1]);
    }
    rb.score_beta = gb.mean;
    rb.score_gamma = gg.mean;
    rb.pass_beta = std::fabs(rb.mean_beta - gb.mean) <= 3.0 * rb.se_beta;
    rb.pass_gamma = std::fabs(rb.mean_gamma - gg.mean) <= 3.0 * rb.se_gamma;
    okb += rb.pass_beta;
    okg += rb.pass_gamma;
    start = stop;
  }
  rep.pass_fraction_beta = double(okb) / double(bins);
  rep.pass_fraction_gamma = double(okg) / double(bins);
  rep.pass = rep.pass_fraction_beta >= 0.95 &&
             rep.pass_fraction_gamma >= 0.95 &&
             double(rep.dropped) < 1e-4 * double(mc_size);
  return rep;
}

MomentSweepReport moment_sweep(const LevyMeasureSpec& spec,
                               const std::vector<Theta>& theta_set,
                               const std::vector<SamplingScheme>& schemes,
                               double delta1_exp, long mc_size,
                               uint64_t seed) {
  spec.validate();
  if (theta_set.empty()) throw config_error("moment sweep: empty theta set");
  if (schemes.empty()) throw config_error("moment sweep: empty scheme list");
  if (!(delta1_exp >= 0.0 && delta1_exp < spec.delta))
    throw config_error("moment sweep: exponent margin must lie in [0, delta)");
  if (mc_size < 100) throw config_error("moment sweep: mc_size too small");
  for (const auto& sch : schemes) sch.validate(spec.alpha, kRateHardBound);
  for (const auto& th : theta_set) th.validate();

  MomentSweepReport rep;
  rep.delta1_exp = delta1_exp;
  const double pw = 2.0 + delta1_exp;

  for (size_t ti = 0; ti < theta_set.size(); ++ti) {
    const Theta& th = theta_set[ti];
    for (size_t si = 0; si < schemes.size(); ++si) {
      const SamplingScheme& sch = schemes[si];
      const double h = sch.h;
      const double eps = std::pow(h, 1.0 / spec.alpha) / 10.0;
      const TruncatedMeasure tm(spec, eps);
      const uint64_t cell = uint64_t(ti * schemes.size() + si);
      const uint64_t base = cell * uint64_t(5 * mc_size);

      MomentSweepCell out;
      out.n = sch.n;
      out.h = h;
      out.beta = th.beta;
      out.gamma = th.gamma;
      long budget = mc_size;
      uint64_t off = 0;
      for (int attempt = 0;; ++attempt) {
        MeanVar mv;
        std::vector<double> vals;
        vals.reserve(budget);
        for (long i = 0; i < budget; ++i) {
          const uint64_t r = base + off + uint64_t(i);
          const JumpLedger led = sample_ledger(spec, h, eps, seed, r, 1e7, &tm);
          Stream sur = Stream::keyed(seed, r, StreamTag::surrogate);
          const double z = z_from_ledger(led, h, sur);
          const MalliavinFunctionals fn =
              functionals_from_ledger(led, spec, th, h);
          const ModifiedWeight w = modified_weight(fn, z);
          const double v = std::pow(
              std::hypot(w.scaled[0], w.scaled[1]), pw);
          mv.add(v);
          vals.push_back(v);
        }
        const long topk = std::max(1L, budget / 1000);
        std::nth_element(vals.begin(), vals.begin() + (topk - 1), vals.end(),
                         std::greater<double>());
        double tops = std::accumulate(vals.begin(), vals.begin() + topk, 0.0);
        const double total = mv.mean * double(mv.n);
        out.estimate = mv.mean;
        out.se = mv.se();
        out.top_share = total > 0.0 ? tops / total : 0.0;
        out.retried = attempt;
        // a heavy-tailed cell whose estimate rides on a handful of draws gets
        // one shot at four times the budget before we trust it
        if (out.top_share > 0.5 && attempt == 0) {
          off = uint64_t(mc_size);
          budget = 4 * mc_size;
          continue;
        }
        break;
      }
      if (!std::isfinite(out.estimate)) rep.finite = false;
      rep.cells.push_back(out);
    }
  }

  rep.pass = rep.finite;
  for (size_t ti = 0; ti < theta_set.size(); ++ti) {
    std::vector<double> lx, ly, ls;
    for (size_t si = 0; si < schemes.size(); ++si) {
      const MomentSweepCell& c = rep.cells[ti * schemes.size() + si];
      lx.push_back(std::log(double(c.n)));
      ly.push_back(std::log(c.estimate));
      ls.push_back(c.se / c.estimate);
    }
    TrendFit tf{0.0, 0.0};
    if (schemes.size() >= 2) tf = wls_trend(lx, ly, ls);
    rep.slope.push_back(tf.slope);
    rep.slope_se.push_back(tf.se);
    if (!std::isfinite(tf.slope) || !(tf.slope <= 2.0 * tf.se))
      rep.pass = false;
  }
  return rep;
}

}  // namespace levylan

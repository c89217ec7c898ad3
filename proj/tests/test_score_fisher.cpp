#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "levylan/densities.hpp"
#include "levylan/levy_model.hpp"
#include "levylan/quadrature.hpp"
#include "levylan/score_fisher.hpp"
#include "levylan/simulator.hpp"
#include "levylan/stats.hpp"

using namespace levylan;

namespace {

LevyMeasureSpec make_spec(Taper tp, double alpha, double cp, double cm) {
  LevyMeasureSpec s;
  s.alpha = alpha;
  s.c_plus = cp;
  s.c_minus = cm;
  s.taper = tp;
  if (tp == Taper::smooth_damp) {
    s.u1 = 1.0;
    s.u0 = 0.5;
  }
  return s;
}

}  // namespace

TEST_CASE("rate matrices: shape, symmetry, frozen drift correction") {
  SamplingScheme sch;
  sch.n = 400;
  sch.h = 0.01;

  // symmetric measure: no drift correction, pure diagonal; n large enough
  // that the drift-rate guard n^{-1/2} h^{1/alpha-1} <= 0.2 holds
  SamplingScheme big;
  big.n = 40000;
  big.h = 0.01;
  const auto sym = make_spec(Taper::none, 1.5, 1.0, 1.0);
  const RateMatrices rs = rate_matrices(sym, big);
  CHECK(rs.c_h == 0.0);
  CHECK(rs.r[0][1] == 0.0);
  CHECK(rs.r[1][0] == 0.0);
  CHECK(rs.r[0][0] == doctest::Approx(0.005 * std::pow(0.01, -1.0 / 3.0))
                          .epsilon(1e-14));
  CHECK(rs.r[1][1] == doctest::Approx(0.005).epsilon(1e-14));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(rs.r_tilde[i][j] ==
            doctest::Approx(200.0 * rs.r[i][j]).epsilon(1e-14));

  // the hard guard: h small enough that the drift direction degenerates
  // (rate 2.32 against the 0.5 construction bound) must throw; a merely
  // slow scheme like sch (rate 0.232) is allowed through and only flagged
  // by the rate-condition verdict
  SamplingScheme degen;
  degen.n = 400;
  degen.h = 1e-5;
  CHECK_THROWS_AS(rate_matrices(sym, degen), config_error);
  CHECK_NOTHROW(rate_matrices(sym, sch));

  // alpha = 1: the time exponent drops out entirely
  const auto c1 = make_spec(Taper::none, 1.0, 1.0 / kPi, 1.0 / kPi);
  const RateMatrices r1 = rate_matrices(c1, sch);
  CHECK(r1.r[0][0] == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(r1.r[0][0] == r1.r[1][1]);
  CHECK(r1.r[0][1] == 0.0);

  // one-sided alpha = 1/2: off-diagonal is c_h/h with the closed-form c_h
  const auto os = make_spec(Taper::none, 0.5, 1.0, 0.0);
  const RateMatrices ro = rate_matrices(os, sch);
  CHECK(ro.c_h == doctest::Approx(0.0198).epsilon(1e-12));
  CHECK(ro.r_tilde[0][1] == doctest::Approx(1.98).epsilon(1e-12));
  CHECK(ro.r[0][1] == doctest::Approx(0.099).epsilon(1e-12));
  CHECK(ro.r_tilde[1][0] == 0.0);

  SamplingScheme bad;
  bad.n = 0;
  CHECK_THROWS_AS(rate_matrices(sym, bad), config_error);
}

TEST_CASE("fisher matrix: Cauchy closed form and quadrature oracle") {
  // independent oracle on the closed Cauchy density, no inversion involved
  auto phi = [](double x) { return 1.0 / (kPi * (1.0 + x * x)); };
  auto dphi = [](double x) {
    return -2.0 * x / (kPi * (1.0 + x * x) * (1.0 + x * x));
  };
  const double X = 4000.0;
  auto pts = geometric_toward(0.0, X, 1.0);
  // analytic completions past X: the drift integrand decays like 4/(pi x^4),
  // the scale integrand like 1/(pi x^2) - 5/(pi x^4)
  const double i11 =
      2.0 * (integrate_segments<double>(
                 [&](double x) { return dphi(x) * dphi(x) / phi(x); }, pts,
                 1e-13, 1e-12)
                 .value +
             4.0 / (3.0 * kPi * X * X * X));
  const double i22 =
      2.0 *
      (integrate_segments<double>(
           [&](double x) {
             const double r = 1.0 + x * dphi(x) / phi(x);
             return r * r * phi(x);
           },
           pts, 1e-13, 1e-12)
           .value +
       1.0 / (kPi * X) - 5.0 / (3.0 * kPi * X * X * X));
  CHECK(i11 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(i22 == doctest::Approx(0.5).epsilon(1e-9));

  const FisherMatrix fm = fisher_matrix(1.0, 1.0 / kPi, 1.0 / kPi, 1.0);
  CHECK(std::fabs(fm.sigma11 - i11) <= 1e-5);
  CHECK(std::fabs(fm.sigma22 - i22) <= 1e-5);
  CHECK(std::fabs(fm.sigma11 - 0.5) <= 1e-3);
  CHECK(std::fabs(fm.sigma22 - 0.5) <= 1e-3);
  CHECK(std::fabs(fm.cross_moment) <= 1e-6);
  CHECK(fm.err11 > 0.0);
  CHECK(fm.err11 < 1e-2);
  CHECK(fm.err22 < 1e-2);
  CHECK(fm.fit_r2 >= 0.99);
  CHECK_FALSE(fm.widened);
}

TEST_CASE("fisher matrix: gamma prefactor quarters exactly") {
  const FisherMatrix a = fisher_matrix(1.5, 1.0, 1.0, 1.0);
  const FisherMatrix b = fisher_matrix(1.5, 1.0, 1.0, 2.0);
  CHECK(b.sigma11 == 0.25 * a.sigma11);
  CHECK(b.sigma22 == 0.25 * a.sigma22);
  CHECK(b.cross_moment == 0.25 * a.cross_moment);
}

TEST_CASE("fisher matrix: frozen independent-implementation values") {
  // symmetric alpha = 3/2
  const FisherMatrix f15 = fisher_matrix(1.5, 1.0, 1.0, 1.0);
  CHECK(f15.sigma11 == doctest::Approx(0.08567167).epsilon(2e-5));
  CHECK(f15.sigma22 == doctest::Approx(0.95555974).epsilon(2e-5));
  CHECK(std::fabs(f15.cross_moment) <= 1e-6);

  // one-sided alpha = 0.8: the limit score covariance is not diagonal
  const FisherMatrix f08 = fisher_matrix(0.8, 1.0, 0.0, 1.0);
  CHECK(f08.sigma11 == doctest::Approx(0.3387403).epsilon(5e-5));
  CHECK(f08.sigma22 == doctest::Approx(0.8887651).epsilon(5e-5));
  CHECK(f08.cross_moment == doctest::Approx(-0.3145018).epsilon(5e-4));

  // one-sided alpha = 1/2: fully closed-form moments of the shifted
  // one-sided stable law
  const FisherMatrix f05 = fisher_matrix(0.5, 1.0, 0.0, 1.0);
  CHECK(f05.sigma11 ==
        doctest::Approx(21.0 / (8.0 * kPi * kPi)).epsilon(5e-5));
  CHECK(f05.sigma22 ==
        doctest::Approx(0.5 - 3.0 / kPi + 21.0 / (2.0 * kPi * kPi))
            .epsilon(5e-5));
  CHECK(f05.cross_moment ==
        doctest::Approx(3.0 / (4.0 * kPi) - 21.0 / (4.0 * kPi * kPi))
            .epsilon(5e-4));

  CHECK_THROWS_AS(fisher_matrix(2.0, 1.0, 1.0, 1.0), config_error);
  CHECK_THROWS_AS(fisher_matrix(1.5, 0.0, 0.0, 1.0), config_error);
  CHECK_THROWS_AS(fisher_matrix(1.5, 1.0, 1.0, 0.0), config_error);
}

TEST_CASE("score: symmetric center, one-shot consistency, floor guard") {
  const auto sp = make_spec(Taper::none, 1.5, 1.0, 1.0);
  Theta th;
  th.beta = 0.3;
  th.gamma = 1.2;
  const NuisanceSpec nz;
  const double t = 0.05;
  const ScoreContext ctx = make_score_context(sp, th, nz, t, 80.0, 0.01);

  // symmetric case: z = 0 at x = beta t and the beta-score vanishes there
  const auto g0 = ctx.at(th.beta * t);
  CHECK(std::fabs(ctx.z_of(th.beta * t)) <= 1e-14);
  CHECK(std::fabs(g0[0]) <= 1e-10);

  const double x1 = th.beta * t + 0.7;
  const auto ga = ctx.at(x1);
  const auto gb = score(sp, th, nz, t, x1);
  CHECK(std::fabs(ga[0] - gb[0]) <= 1e-6 * (std::fabs(ga[0]) + 1.0));
  CHECK(std::fabs(ga[1] - gb[1]) <= 1e-6 * (std::fabs(ga[1]) + 1.0));

  CHECK_THROWS_AS(ctx.at_z(1e130), numeric_error);
  CHECK_THROWS_AS(make_score_context(sp, th, nz, 0.0, 80.0, 0.01),
                  config_error);
}

TEST_CASE("score matches finite differences of the log transition density") {
  struct Cfg {
    LevyMeasureSpec sp;
    Theta th;
    NuisanceSpec nu;
    double t;
  };
  std::vector<Cfg> cfgs;
  {
    Cfg a;
    a.sp = make_spec(Taper::none, 1.5, 1.0, 1.0);
    a.th.beta = 0.3;
    a.th.gamma = 1.2;
    a.t = 0.05;
    cfgs.push_back(a);
  }
  {
    // asymmetric with a nonzero drift correction
    Cfg b;
    b.sp = make_spec(Taper::none, 0.8, 1.0, 0.0);
    b.th.beta = -0.2;
    b.th.gamma = 0.8;
    b.t = 0.05;
    cfgs.push_back(b);
  }
  {
    Cfg c;
    c.sp = make_spec(Taper::gauss, 1.2, 1.0, 1.0);
    c.nu.kind = NuisanceSpec::Kind::compound_poisson;
    c.nu.rate = 1.0;
    c.nu.jump_std = 0.5;
    c.t = 0.1;
    cfgs.push_back(c);
  }
  const double zs[] = {0.0,  0.5,  1.0,  2.0,  4.0,  8.0,  16.0, 32.0, 60.0,
                       -0.5, -1.0, -2.0, -4.0, -8.0, -16.0, -32.0, -60.0};

  for (const Cfg& c : cfgs) {
    CAPTURE(c.sp.alpha);
    const bool asym = c.sp.c_plus != c.sp.c_minus;
    CHECK((!asym || c_t(c.sp, c.t) != 0.0));
    const ScoreContext ctx =
        make_score_context(c.sp, c.th, c.nu, c.t, 80.0, 0.01);
    const double zsc = 1.0 / ctx.zscale;
    std::vector<double> xg;
    for (double z : zs) {
      if (ctx.ker.f.eval(z) < 1e-6 * ctx.ker.f.peak) continue;
      xg.push_back(z * zsc + c.th.beta * c.t - c.th.gamma * ctx.ct);
    }
    REQUIRE(xg.size() >= 9);

    // central differences of log p_t through the public density op, step
    // tuned so the table noise (~1e-8) stays below truncation
    const double db = 1e-3 * c.th.gamma * std::pow(c.t, 1.0 / c.sp.alpha - 1.0);
    const double dg = 1e-3 * c.th.gamma;
    Theta tbp = c.th, tbm = c.th, tgp = c.th, tgm = c.th;
    tbp.beta += db;
    tbm.beta -= db;
    tgp.gamma += dg;
    tgm.gamma -= dg;
    const DensityTable pbp = transition_density(c.sp, tbp, c.nu, c.t, xg);
    const DensityTable pbm = transition_density(c.sp, tbm, c.nu, c.t, xg);
    const DensityTable pgp = transition_density(c.sp, tgp, c.nu, c.t, xg);
    const DensityTable pgm = transition_density(c.sp, tgm, c.nu, c.t, xg);

    double worst = 0.0;
    for (size_t i = 0; i < xg.size(); ++i) {
      const auto g = ctx.at(xg[i]);
      const double fb =
          (std::log(pbp.values[i]) - std::log(pbm.values[i])) / (2.0 * db);
      const double fg =
          (std::log(pgp.values[i]) - std::log(pgm.values[i])) / (2.0 * dg);
      const double num = std::hypot(g[0] - fb, g[1] - fg);
      const double den = std::hypot(g[0], g[1]) + 1e-9;
      worst = std::max(worst, num / den);
    }
    CAPTURE(worst);
    CHECK(worst <= 1e-3);
  }
}

TEST_CASE("score integrates to zero against its own density") {
  struct Row {
    LevyMeasureSpec sp;
    Theta th;
    double t;
  };
  Row rows[2];
  rows[0].sp = make_spec(Taper::none, 1.5, 1.0, 1.0);
  rows[0].th.beta = 0.3;
  rows[0].th.gamma = 1.2;
  rows[0].t = 0.05;
  rows[1].sp = make_spec(Taper::none, 0.8, 1.0, 0.0);
  rows[1].th.beta = -0.2;
  rows[1].th.gamma = 0.8;
  rows[1].t = 0.05;

  for (const Row& r : rows) {
    CAPTURE(r.sp.alpha);
    const ScoreContext ctx =
        make_score_context(r.sp, r.th, NuisanceSpec{}, r.t, 800.0, 0.02);
    const DensityTable& f = ctx.ker.f;
    const double floor = 1e-12 * f.peak;
    double ib = 0.0, ig = 0.0, wprevb = 0.0, wprevg = 0.0;
    bool have = false;
    double zfirst = 0.0, zlast = 0.0;
    for (size_t i = 0; i < f.x_grid.size(); ++i) {
      if (f.values[i] < floor) continue;
      const auto g = ctx.at_z(f.x_grid[i]);
      const double wb = g[0] * f.values[i], wg = g[1] * f.values[i];
      if (have) {
        ib += 0.5 * (wprevb + wb) * f.dx;
        ig += 0.5 * (wprevg + wg) * f.dx;
      } else {
        zfirst = f.x_grid[i];
        have = true;
      }
      wprevb = wb;
      wprevg = wg;
      zlast = f.x_grid[i];
    }
    // analytic completion: the integrands decay like power tails, so the
    // window remainder is known from the stamped coefficients
    const double ai = 1.0 / r.th.gamma;
    const double tp = std::pow(r.t, 1.0 - 1.0 / r.sp.alpha);
    for (auto [c, a] : f.tail_terms_hi) {
      ib += ai * tp * c * std::pow(zlast, -1.0 - a);
      ig += ai * (c * std::pow(zlast, -a) -
                  ctx.ct_tm * c * std::pow(zlast, -1.0 - a));
    }
    for (auto [c, a] : f.tail_terms_lo) {
      ib -= ai * tp * c * std::pow(-zfirst, -1.0 - a);
      ig += ai * (c * std::pow(-zfirst, -a) +
                  ctx.ct_tm * c * std::pow(-zfirst, -1.0 - a));
    }
    CAPTURE(ib);
    CAPTURE(ig);
    CHECK(std::fabs(ib) <= 1e-3);
    CHECK(std::fabs(ig) <= 1e-3);
  }
}

TEST_CASE("G functions: exact stable case, center values, nuisance shift") {
  std::vector<double> zg;
  for (double z = -40.0; z <= 40.0 + 1e-9; z += 0.5) zg.push_back(z);
  const auto sp = make_spec(Taper::none, 1.5, 1.0, 1.0);
  Theta th;
  th.gamma = 1.3;
  const GTables gt = g_functions(sp, th, NuisanceSpec{}, 0.07, zg);
  const GTables gl = g_functions_limit(1.5, 1.0, 1.0, zg);
  CHECK(gt.t == 0.07);
  CHECK(gl.t == 0.0);
  double worst = 0.0;
  for (size_t i = 0; i < zg.size(); ++i) {
    worst = std::max(worst, std::fabs(gt.g1[i] - gl.g1[i]));
    worst = std::max(worst, std::fabs(gt.g2[i] - gl.g2[i]));
  }
  CAPTURE(worst);
  CHECK(worst <= 1e-10);

  // center identities (exact zeros by construction, not approximations)
  const size_t mid = zg.size() / 2;
  CHECK(zg[mid] == 0.0);
  CHECK(std::fabs(gl.g1[mid]) <= 1e-13);
  CHECK(gl.g2[mid] == -1.0);

  // a compound-poisson nuisance moves the kernels away from the pure case
  NuisanceSpec cp;
  cp.kind = NuisanceSpec::Kind::compound_poisson;
  cp.rate = 3.0;
  cp.jump_std = 0.8;
  const GTables gn = g_functions(sp, th, cp, 0.07, zg);
  double shift = 0.0;
  for (size_t i = 0; i < zg.size(); ++i)
    shift = std::max(shift, std::fabs(gn.g2[i] - gt.g2[i]));
  CHECK(shift > 1e-4);

  CHECK_THROWS_AS(g_functions(sp, th, NuisanceSpec{}, 0.07, {}), config_error);
}

TEST_CASE("G functions converge to the stable limit as t shrinks") {
  const auto sp = make_spec(Taper::gauss, 1.2, 1.0, 1.0);
  std::vector<double> zg;
  for (double z = -8.0; z <= 8.0 + 1e-9; z += 0.1) zg.push_back(z);
  const GTables gl = g_functions_limit(1.2, 1.0, 1.0, zg);
  double prev1 = 1e300, prev2 = 1e300;
  for (double t : {0.2, 0.1, 0.05}) {
    const GTables gt = g_functions(sp, Theta{}, NuisanceSpec{}, t, zg);
    double d1 = 0.0, d2 = 0.0;
    for (size_t i = 0; i < zg.size(); ++i) {
      d1 = std::max(d1, std::fabs(gt.g1[i] - gl.g1[i]));
      d2 = std::max(d2, std::fabs(gt.g2[i] - gl.g2[i]));
    }
    CAPTURE(t);
    CAPTURE(d1);
    CAPTURE(d2);
    CHECK(d1 < prev1);
    CHECK(d2 < prev2);
    prev1 = d1;
    prev2 = d2;
  }
}

TEST_CASE("per-increment score identity: r~^T g equals gamma^{-1} G(xi)") {
  const auto sp = make_spec(Taper::none, 0.8, 1.0, 0.0);
  Theta th;
  th.beta = 0.4;
  th.gamma = 1.1;
  const NuisanceSpec nz;
  SamplingScheme sch;
  sch.n = 2000;
  sch.h = 0.01;
  const PathSample p = sample_path(sp, th, nz, sch, 3e-4, 606, 0);
  const std::vector<double> xi = normalized_increments(p, sp, th, sch);
  const RateMatrices rm = rate_matrices(sp, sch);
  const ScoreContext ctx = make_score_context(sp, th, nz, sch.h, 200.0, 0.01);

  long checked = 0;
  double worst = 0.0;
  for (long k = 0; k < sch.n; ++k) {
    const double z = xi[size_t(k)];
    if (!(ctx.ker.f.eval(z) > 1e-6 * ctx.ker.f.peak)) continue;
    const double dx = p.x_values[size_t(k) + 1] - p.x_values[size_t(k)];
    const auto g = ctx.at(dx);
    const double G1 = -ctx.ker.f1.eval(z) / ctx.ker.f.eval(z);
    const double G2 = -1.0 - ctx.ker.f2.eval(z) / ctx.ker.f.eval(z);
    const double a0 = rm.r_tilde[0][0] * g[0];
    const double a1 = rm.r_tilde[0][1] * g[0] + rm.r_tilde[1][1] * g[1];
    const double w0 = G1 / th.gamma, w1 = G2 / th.gamma;
    worst = std::max(worst, std::fabs(a0 - w0) / (std::fabs(w0) + 1e-9));
    worst = std::max(worst, std::fabs(a1 - w1) / (std::fabs(w1) + 1e-9));
    ++checked;
  }
  CAPTURE(checked);
  CAPTURE(worst);
  REQUIRE(checked > 1800);
  CHECK(worst <= 1e-9);
}

TEST_CASE("score covariance converges to the fisher matrix along h") {
  const auto sp = make_spec(Taper::gauss, 1.2, 1.0, 1.0);
  const Theta th;
  const NuisanceSpec nz;
  const FisherMatrix fm = fisher_matrix(1.2, 1.0, 1.0, 1.0);

  auto frob_at = [&](double h, uint64_t rep, bool check_mean) {
    SamplingScheme sch;
    sch.n = 20000;
    sch.h = h;
    const double eps = std::pow(h, 1.0 / 1.2) / 10.0;
    const PathSample p = sample_path(sp, th, nz, sch, eps, 7117, rep);
    const std::vector<double> xi = normalized_increments(p, sp, th, sch);
    const FKernelSet ker = f_kernels(sp, th, nz, h, 200.0, 0.01);
    MeanVar m1, m2;
    std::vector<std::array<double, 2>> gs(xi.size());
    for (size_t k = 0; k < xi.size(); ++k) {
      const double f = ker.f.eval(xi[k]);
      const double g1 = -ker.f1.eval(xi[k]) / f;
      const double g2 = -1.0 - ker.f2.eval(xi[k]) / f;
      gs[k] = {g1, g2};
      m1.add(g1);
      m2.add(g2);
    }
    if (check_mean) {
      CHECK(std::fabs(m1.mean) <= 3.0 * m1.se());
      CHECK(std::fabs(m2.mean) <= 3.0 * m2.se());
    }
    double c11 = 0.0, c22 = 0.0, c12 = 0.0;
    for (const auto& g : gs) {
      c11 += (g[0] - m1.mean) * (g[0] - m1.mean);
      c22 += (g[1] - m2.mean) * (g[1] - m2.mean);
      c12 += (g[0] - m1.mean) * (g[1] - m2.mean);
    }
    const double n = double(gs.size());
    c11 /= n;
    c22 /= n;
    c12 /= n;
    const double d11 = c11 - fm.sigma11, d22 = c22 - fm.sigma22;
    return std::sqrt(d11 * d11 + d22 * d22 + 2.0 * c12 * c12);
  };

  const double f1 = frob_at(0.5, 1, false);
  const double f2 = frob_at(0.1, 2, false);
  const double f3 = frob_at(0.02, 3, true);
  CAPTURE(f1);
  CAPTURE(f2);
  CAPTURE(f3);
  CHECK(f1 > f2);
  CHECK(f2 > f3);
}

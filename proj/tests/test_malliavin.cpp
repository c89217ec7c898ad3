#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "levylan/levy_model.hpp"
#include "levylan/malliavin.hpp"
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

Theta make_theta(double b, double g) {
  Theta th;
  th.beta = b;
  th.gamma = g;
  return th;
}

// one jump of size 0.5 at time 0.3, no sub-eps mass on record
JumpLedger hand_ledger() {
  JumpLedger led;
  led.horizon = 1.0;
  led.eps = 0.01;
  led.times = {0.3};
  led.sizes = {0.5};
  led.comp_mean = 0.0;
  led.small_var = 0.0;
  led.intensity = 1.0;
  return led;
}

}  // namespace

TEST_CASE("functionals on a hand ledger follow the defining arithmetic") {
  const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
  const auto th = make_theta(0.0, 2.0);
  const auto led = hand_ledger();

  const auto fn = functionals_from_ledger(led, spec, th, 1.0);
  CHECK(fn.d1 == 0.5);  // gamma u^2 = 2 * 0.25
  CHECK(fn.d2 == 0.5);  // 2 gamma u^3 = 4 * 0.125
  CHECK(fn.kappa == 0.25);
  CHECK(fn.delta1 == doctest::Approx(0.25).epsilon(1e-15));  // (alpha-1) u
  CHECK(fn.z_t == 0.5);
  CHECK(fn.ct == 0.0);
  CHECK(fn.z_tilde == 0.5);
  CHECK(fn.t_pow == 1.0);
  CHECK(!fn.eps_flag);
  CHECK(!fn.degenerate);

  const auto w = modified_weight(fn, fn.z_t);
  // ratio = 0.25/0.5 + 0.5/0.25 = 2.5
  CHECK(w.xi_beta == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(w.xi_gamma == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(w.scaled[0] == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(w.scaled[1] == doctest::Approx(0.75).epsilon(1e-15));

  SUBCASE("jump at the boundary time is included") {
    const auto f3 = functionals_from_ledger(led, spec, th, 0.3);
    CHECK(f3.d1 == 0.5);
  }
  SUBCASE("before the jump the raw path is degenerate") {
    const auto f2 = functionals_from_ledger(led, spec, th, 0.2,
                                            TruncationMode::raw);
    CHECK(f2.degenerate);
    CHECK(f2.d1 == 0.0);
    CHECK_THROWS_AS(modified_weight(f2, 0.0), numeric_error);
  }
  SUBCASE("eps coarser than t^{1/alpha} raises the flag") {
    const auto f4 = functionals_from_ledger(led, spec, th, 0.0005);
    CHECK(f4.eps_flag);  // 0.0005^{2/3} = 0.0063 < eps
  }
  SUBCASE("ledger shorter than t is a config error") {
    CHECK_THROWS_AS(functionals_from_ledger(led, spec, th, 1.5), config_error);
  }
}

TEST_CASE("delta1 closed forms for pure stable ledgers") {
  const double t = 0.04;

  SUBCASE("symmetric: delta1 = (alpha-1) z exactly") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    const auto th = make_theta(0.0, 1.0);
    const double eps = std::pow(t, 1.0 / spec.alpha) / 10.0;
    const TruncatedMeasure tm(spec, eps);
    for (uint64_t r = 0; r < 60; ++r) {
      const auto led = sample_ledger(spec, t, eps, 41u, r, 1e7, &tm);
      const auto fn = functionals_from_ledger(led, spec, th, t);
      CHECK(fn.delta1 ==
            doctest::Approx(0.5 * fn.z_t).epsilon(1e-12).scale(1.0));
    }
  }

  SUBCASE("one-sided tilt: delta1 is (alpha-1) z - t (C+ - C-), u0-free") {
    // with no taper chi(u) = (alpha-1) u everywhere, so delta1 collapses to
    // the compensated jump sum itself; the u0 split must leave no trace
    auto spec = make_spec(Taper::none, 1.5, 1.0, 0.4);
    const auto th = make_theta(0.0, 1.0);
    const double eps = std::pow(t, 1.0 / spec.alpha) / 10.0;
    for (double u0 : {1.0, 0.7}) {
      spec.u0 = u0;
      const TruncatedMeasure tm(spec, eps);
      for (uint64_t r = 0; r < 40; ++r) {
        const auto led = sample_ledger(spec, t, eps, 42u, r, 1e7, &tm);
        const auto fn = functionals_from_ledger(led, spec, th, t);
        CHECK(fn.delta1 == doctest::Approx(0.5 * fn.z_t - 0.6 * t)
                               .epsilon(1e-11)
                               .scale(1.0));
      }
    }
  }

  SUBCASE("telescoped compensator matches the quadrature route") {
    auto spec = make_spec(Taper::gauss, 1.2, 1.0, 0.5);
    for (double eps : {0.01, 0.1}) {
      const double closed =
          eps * eps * (m_density(spec, eps) - m_density(spec, -eps)) -
          spec.u0 * spec.u0 *
              (m_density(spec, spec.u0) - m_density(spec, -spec.u0));
      const double quad = chi_integral(spec, eps, spec.u0);
      CHECK(closed == doctest::Approx(quad).epsilon(1e-8));
    }
  }
}

TEST_CASE("pathwise bounds: d1 dominates gamma kappa, d2 obeys the 3/2 rule") {
  const double t = 0.04;
  for (double alpha : {0.8, 1.5}) {
    for (Taper tp : {Taper::none, Taper::gauss}) {
      for (double gamma : {0.5, 2.0}) {
        const auto spec = make_spec(tp, alpha, 1.0, 0.4);
        const auto th = make_theta(0.0, gamma);
        const double eps = std::pow(t, 1.0 / alpha) / 10.0;
        const TruncatedMeasure tm(spec, eps);
        const double cap = 2.0 / std::sqrt(gamma);
        for (uint64_t r = 0; r < 400; ++r) {
          const auto led = sample_ledger(spec, t, eps, 7u, r, 1e7, &tm);
          for (auto mode : {TruncationMode::mean_patch, TruncationMode::raw}) {
            const auto fn = functionals_from_ledger(led, spec, th, t, mode);
            CHECK(fn.d1 >= gamma * fn.kappa - 1e-15);
            if (mode == TruncationMode::mean_patch) {
              CHECK(fn.d1 > 0.0);
              CHECK(std::fabs(fn.d2) <=
                    cap * std::pow(fn.d1, 1.5) * (1.0 + 1e-12));
            } else if (fn.d1 > 0.0) {
              CHECK(std::fabs(fn.d2) <=
                    cap * std::pow(fn.d1, 1.5) * (1.0 + 1e-12));
            }
          }
        }
      }
    }
  }
}

TEST_CASE("inverse moments of the scaled kappa stay bounded as t shrinks") {
  const std::vector<double> ts{0.1, 0.01, 0.001};
  const std::vector<double> ps{1.0, 2.0};

  SUBCASE("pure stable: the scaled law is exactly t-free") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    const auto rep = kappa_inverse_moments(spec, ts, ps, 4000, 11u);
    CHECK(rep.pass);
    REQUIRE(rep.cells.size() == 6);
    for (size_t pi = 0; pi < ps.size(); ++pi) {
      // all three t estimates target the same number under this eps policy
      for (size_t ti = 0; ti + 1 < ts.size(); ++ti) {
        const auto& a = rep.cells[ti * 2 + pi];
        const auto& b = rep.cells[(ti + 1) * 2 + pi];
        CHECK(std::fabs(a.estimate - b.estimate) <=
              3.5 * std::hypot(a.se, b.se));
      }
      CHECK(std::fabs(rep.slope[pi]) <= 2.0 * rep.slope_se[pi]);
    }
  }

  SUBCASE("p = 0 collapses to one") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    const auto rep =
        kappa_inverse_moments(spec, {0.1, 0.01}, {0.0}, 200, 3u);
    for (const auto& c : rep.cells) {
      CHECK(c.estimate == 1.0);
      CHECK(c.se == 0.0);
    }
    CHECK(rep.pass);
  }

  SUBCASE("tapered asymmetric case passes too") {
    const auto spec = make_spec(Taper::gauss, 1.2, 1.0, 0.5);
    const auto rep =
        kappa_inverse_moments(spec, {0.1, 0.01}, ps, 3000, 12u);
    CHECK(rep.pass);
  }

  SUBCASE("bad arguments throw") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    CHECK_THROWS_AS(kappa_inverse_moments(spec, {0.1}, ps, 4000, 1u),
                    config_error);
    CHECK_THROWS_AS(kappa_inverse_moments(spec, ts, {-1.0}, 4000, 1u),
                    config_error);
    CHECK_THROWS_AS(kappa_inverse_moments(spec, {0.1, 2.0}, ps, 4000, 1u),
                    config_error);
  }
}

TEST_CASE("the weight is a ledger functional: nuisance cannot touch it") {
  const auto spec = make_spec(Taper::gauss, 1.2, 1.0, 1.0);
  const auto th = make_theta(0.3, 1.5);
  SamplingScheme sch;
  sch.n = 40;
  sch.h = 0.5;

  NuisanceSpec none{};
  NuisanceSpec cp{};
  cp.kind = NuisanceSpec::Kind::compound_poisson;
  cp.rate = 2.0;
  NuisanceSpec st{};
  st.kind = NuisanceSpec::Kind::stable;
  st.alpha_u = 0.5;

  std::vector<std::array<double, 2>> got;
  for (const auto& nu : {none, cp, st}) {
    const auto path = sample_path(spec, th, nu, sch, 0.1, 99u, 5u);
    const auto fn =
        functionals_from_ledger(path.ledger, spec, th, sch.h);
    const auto w = modified_weight(fn, path.z_values[1]);
    got.push_back({w.xi_beta, w.xi_gamma});
  }
  // keyed streams make the ledger and surrogate identical across nuisances,
  // so the weights agree bit for bit
  CHECK(got[0][0] == got[1][0]);
  CHECK(got[0][0] == got[2][0]);
  CHECK(got[0][1] == got[1][1]);
  CHECK(got[0][1] == got[2][1]);
}

TEST_CASE("scaled weight equals the rate matrix acting on (xi_beta, xi_gamma)") {
  const auto spec = make_spec(Taper::gauss, 1.2, 1.0, 0.5);
  const auto th = make_theta(0.3, 1.5);
  SamplingScheme sch;
  sch.n = 40;
  sch.h = 0.5;
  const auto rm = rate_matrices(spec, sch);

  const double eps = 0.05;
  const TruncatedMeasure tm(spec, eps);
  for (uint64_t r = 0; r < 30; ++r) {
    const auto led = sample_ledger(spec, sch.h, eps, 13u, r, 1e7, &tm);
    Stream sur = Stream::keyed(13u, r, StreamTag::surrogate);
    const double z = z_from_ledger(led, sch.h, sur);
    const auto fn = functionals_from_ledger(led, spec, th, sch.h);
    const auto w = modified_weight(fn, z);
    const double s0 = rm.r_tilde[0][0] * w.xi_beta;
    const double s1 = rm.r_tilde[0][1] * w.xi_beta + w.xi_gamma;
    CHECK(w.scaled[0] == doctest::Approx(s0).epsilon(1e-9));
    CHECK(w.scaled[1] ==
          doctest::Approx(s1).epsilon(1e-9).scale(1.0 + std::fabs(s1)));
  }
}

TEST_CASE("weight halves when gamma doubles") {
  const auto spec = make_spec(Taper::exp_abs, 1.5, 1.0, 1.0);
  const double t = 0.2;
  const double eps = 0.02;
  const TruncatedMeasure tm(spec, eps);
  for (uint64_t r = 0; r < 20; ++r) {
    const auto led = sample_ledger(spec, t, eps, 21u, r, 1e7, &tm);
    Stream sur = Stream::keyed(21u, r, StreamTag::surrogate);
    const double z = z_from_ledger(led, t, sur);
    const auto f1 = functionals_from_ledger(led, spec, make_theta(0.0, 1.0), t);
    const auto f2 = functionals_from_ledger(led, spec, make_theta(0.0, 2.0), t);
    const auto w1 = modified_weight(f1, z);
    const auto w2 = modified_weight(f2, z);
    CHECK(w2.xi_beta == doctest::Approx(0.5 * w1.xi_beta).epsilon(1e-13));
    CHECK(w2.xi_gamma ==
          doctest::Approx(0.5 * w1.xi_gamma).epsilon(1e-13).scale(1.0));
  }
}

TEST_CASE("the weight has mean zero") {
  const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
  const auto th = make_theta(0.0, 1.0);
  const double t = 0.01;
  const double eps = std::pow(t, 1.0 / spec.alpha) / 10.0;
  const TruncatedMeasure tm(spec, eps);
  MeanVar mb, mg;
  for (uint64_t r = 0; r < 100000; ++r) {
    const auto led = sample_ledger(spec, t, eps, 31u, r, 1e7, &tm);
    Stream sur = Stream::keyed(31u, r, StreamTag::surrogate);
    const double z = z_from_ledger(led, t, sur);
    const auto fn = functionals_from_ledger(led, spec, th, t);
    const auto w = modified_weight(fn, z);
    mb.add(w.xi_beta);
    mg.add(w.xi_gamma);
  }
  CHECK(std::fabs(mb.mean) <= 3.5 * mb.se());
  CHECK(std::fabs(mg.mean) <= 3.5 * mg.se());
}

TEST_CASE("binned regression of the weight recovers the transition score") {
  const double t = 0.01;

  SUBCASE("symmetric pure stable") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    const auto rep = check_representation(spec, make_theta(0.0, 1.0), t,
                                          200000, 40, 51u);
    CHECK(rep.pass);
    CHECK(rep.dropped == 0);
    CHECK(rep.pass_fraction_beta >= 0.95);
    CHECK(rep.pass_fraction_gamma >= 0.95);
    // the central bins carry most of the mass and must agree
    for (int b = 15; b < 25; ++b) {
      CHECK(rep.bins[b].pass_beta);
      CHECK(rep.bins[b].pass_gamma);
    }
  }

  SUBCASE("asymmetric pure stable") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 0.4);
    const auto rep = check_representation(spec, make_theta(0.0, 1.0), t,
                                          200000, 40, 52u);
    CHECK(rep.pass);
  }

  SUBCASE("bin occupancy is enforced") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    CHECK_THROWS_AS(
        check_representation(spec, make_theta(0.0, 1.0), t, 1000, 40, 1u),
        config_error);
    CHECK_THROWS_AS(
        check_representation(spec, make_theta(0.0, 1.0), t, 1000, 1, 1u),
        config_error);
    CHECK_THROWS_AS(
        check_representation(spec, make_theta(0.0, 1.0), 1.5, 200000, 40, 1u),
        config_error);
  }
}

TEST_CASE("scaled weight moments stay bounded along the schemes") {
  std::vector<SamplingScheme> schemes(3);
  schemes[0].n = 20000;
  schemes[0].h = 5e-5;
  schemes[1].n = 100000;
  schemes[1].h = 1e-5;
  schemes[2].n = 1000000;
  schemes[2].h = 1e-6;

  SUBCASE("pure stable symmetric: the scaled law is n-free") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    const auto rep = moment_sweep(spec, {make_theta(0.0, 1.0)}, schemes, 0.0,
                                  20000, 61u);
    CHECK(rep.pass);
    CHECK(rep.finite);
    REQUIRE(rep.slope.size() == 1);
    CHECK(std::fabs(rep.slope[0]) <= 2.0 * rep.slope_se[0]);
  }

  SUBCASE("smaller gamma means a larger weight, cell by cell") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    const std::vector<Theta> ths{make_theta(0.0, 0.5), make_theta(0.0, 1.0),
                                 make_theta(0.0, 2.0)};
    const auto rep = moment_sweep(spec, ths, schemes, 0.0, 8000, 62u);
    CHECK(rep.pass);
    for (size_t si = 0; si < schemes.size(); ++si) {
      CHECK(rep.cells[si].estimate > rep.cells[3 + si].estimate);
      CHECK(rep.cells[3 + si].estimate > rep.cells[6 + si].estimate);
    }
  }

  SUBCASE("tapered case with a positive moment margin") {
    const auto spec = make_spec(Taper::exp_abs, 1.2, 1.0, 1.0);
    std::vector<SamplingScheme> sc2(2);
    sc2[0].n = 10000;
    sc2[0].h = 1e-4;
    sc2[1].n = 100000;
    sc2[1].h = 1e-5;
    const auto rep =
        moment_sweep(spec, {make_theta(0.0, 1.0)}, sc2, 0.25, 10000, 63u);
    CHECK(rep.pass);
  }

  SUBCASE("margin at or past delta is rejected") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    CHECK_THROWS_AS(moment_sweep(spec, {make_theta(0.0, 1.0)}, schemes, 0.6,
                                 1000, 1u),
                    config_error);
    CHECK_THROWS_AS(
        moment_sweep(spec, {}, schemes, 0.0, 1000, 1u), config_error);
  }

  SUBCASE("schemes past the hard drift rate bound are rejected") {
    const auto spec = make_spec(Taper::none, 1.5, 1.0, 1.0);
    SamplingScheme bad;
    bad.n = 400;
    bad.h = 1e-5;  // rate 2.32, far past the 0.5 construction bound
    CHECK_THROWS_AS(
        moment_sweep(spec, {make_theta(0.0, 1.0)}, {bad}, 0.0, 1000, 1u),
        config_error);
  }
}

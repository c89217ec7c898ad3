#pragma once

// Score vector of the transition density, normalized score functions G and
// their stable limit, the asymptotic information matrix, and the local rate
// matrices that tie per-increment scores to the normalized-increment scale.

#include <array>
#include <vector>

#include "levylan/densities.hpp"
#include "levylan/levy_model.hpp"
#include "levylan/simulator.hpp"

namespace levylan {

struct RateMatrices {
  // r = n^{-1/2} [[h^{1/alpha-1}, c_h/h], [0, 1]], r_tilde = sqrt(n) r
  std::array<std::array<double, 2>, 2> r{}, r_tilde{};
  long n = 0;
  double h = 0.0;
  double c_h = 0.0;
};

RateMatrices rate_matrices(const LevyMeasureSpec& spec,
                           const SamplingScheme& sch);

struct FisherMatrix {
  // gamma^{-2} int (phi'/phi)^2 phi dx and gamma^{-2} int (1+x phi'/phi)^2 phi
  double sigma11 = 0.0, sigma22 = 0.0;
  double err11 = 0.0, err22 = 0.0;
  // gamma^{-2} int x (phi'/phi)^2 phi dx.  The limit theorem displays a
  // diagonal matrix; this diagnostic measures how non-diagonal the score
  // covariance actually is (zero by parity when C+ = C-, nonzero otherwise)
  double cross_moment = 0.0, cross_err = 0.0;
  double gamma = 1.0;
  double xmax = 0.0;    // window the quadrature ran on
  double fit_r2 = 1.0;  // worst power-tail fit supporting the extension
  bool widened = false; // a failed fit forced one wider-grid retry
};

FisherMatrix fisher_matrix(double alpha, double c_plus, double c_minus,
                           double gamma);

struct GTables {
  std::vector<double> z;
  std::vector<double> g1;  // -f1/f
  std::vector<double> g2;  // -1 - f2/f
  double t = 0.0;          // 0 marks the stable limit
};

GTables g_functions(const LevyMeasureSpec& spec, const Theta& theta,
                    const NuisanceSpec& nu, double t,
                    const std::vector<double>& z_grid,
                    const InvertOptions& opts = {});
GTables g_functions_limit(double alpha, double c_plus, double c_minus,
                          const std::vector<double>& z_grid,
                          const InvertOptions& opts = {});

// score evaluator bound to one (spec, theta, nuisance, t): kernel tables are
// built once, after that each g_t(theta; x) is three table lookups
struct ScoreContext {
  LevyMeasureSpec spec;
  Theta theta;
  NuisanceSpec nu;
  double t = 0.0;
  double ct = 0.0;      // compensator drift c_t
  double zscale = 1.0;  // 1/(gamma t^{1/alpha})
  double tpow = 1.0;    // t^{1 - 1/alpha}
  double ct_tm = 0.0;   // c_t t^{-1/alpha}
  FKernelSet ker;

  double z_of(double x) const {
    return zscale * (x - theta.beta * t + theta.gamma * ct);
  }
  std::array<double, 2> at(double x) const { return at_z(z_of(x)); }
  // z already on the normalized-increment scale
  std::array<double, 2> at_z(double z) const;
};

ScoreContext make_score_context(const LevyMeasureSpec& spec,
                                const Theta& theta, const NuisanceSpec& nu,
                                double t, double zmax, double dz,
                                const InvertOptions& opts = {});

// one-shot convenience; builds a throwaway context with a default window
std::array<double, 2> score(const LevyMeasureSpec& spec, const Theta& theta,
                            const NuisanceSpec& nu, double t, double x);

}  // namespace levylan

#pragma once

// Path functionals of the jump ledger behind the integration-by-parts weight:
// D X = gamma sum u^2, D^2 X = 2 gamma sum u^3, the compensated chi integral
// delta_1, the small-jump quadratic kappa, and the weight (xi_beta, xi_gamma)
// whose conditional expectation given X_t is the transition score.  All of it
// is a functional of (ledger, Z_t, t) only; the nuisance never enters.

#include <array>
#include <cstdint>
#include <vector>

#include "levylan/common.hpp"
#include "levylan/levy_model.hpp"
#include "levylan/simulator.hpp"

namespace levylan {

// sub-eps jump mass: folded in through its compensator mean (default), or
// left out entirely for diagnostics
enum class TruncationMode { mean_patch, raw };

struct MalliavinFunctionals {
  double d1 = 0.0;      // gamma sum u^2 over jumps up to t (+ patch)
  double d2 = 0.0;      // 2 gamma sum u^3 (+ patch)
  double delta1 = 0.0;  // compensated chi below u0 + pathwise above + boundary
  double kappa = 0.0;   // sum_{|u| <= t^{1/alpha}} u^2 (+ patch)
  double z_t = 0.0;     // omit-mode Z_t read back from the ledger
  double ct = 0.0;
  double z_tilde = 0.0;  // z_t + c_t
  double t = 0.0;
  double t_pow = 0.0;   // t^{1/alpha}, the kappa radius and the scaled weight
  double gamma = 1.0;   // the gamma baked into d1 and d2
  double alpha = 1.5;
  TruncationMode mode = TruncationMode::mean_patch;
  // compensator integrals of the sub-eps mass: the mean patches for d1, d2,
  // kappa, and an L2 bound for the (mean-zero) compensated delta1 remainder
  double d1_resid = 0.0, d2_resid = 0.0, kappa_resid = 0.0, delta1_resid = 0.0;
  bool eps_flag = false;    // ledger eps exceeds t^{1/alpha}
  bool degenerate = false;  // d1 = 0: no jumps kept and no patch mass
};

MalliavinFunctionals functionals_from_ledger(
    const JumpLedger& ledger, const LevyMeasureSpec& spec, const Theta& theta,
    double t, TruncationMode mode = TruncationMode::mean_patch);

struct ModifiedWeight {
  double xi_beta = 0.0;
  double xi_gamma = 0.0;
  // r_tilde^T (xi_beta, xi_gamma) in closed form: the same ratio against
  // t^{1/alpha} and against z_t + c_t
  std::array<double, 2> scaled{0.0, 0.0};
};

// z_t is the path value actually used (the ledger's omit-mode z, or the
// surrogate-completed one).  Below eps the integrand chi(u) is (alpha-1) u up
// to O(u^3), so whatever surrogate material z_t carries beyond the ledger sum
// completes delta1 with coefficient alpha-1; without it the regression of the
// weight on X comes out visibly attenuated.  Skipped in raw mode.  Throws
// numeric_error on degenerate functionals.
ModifiedWeight modified_weight(const MalliavinFunctionals& fn, double z_t);

struct KappaMomentCell {
  double t = 0.0, p = 0.0;
  double estimate = 0.0, se = 0.0;
};

struct KappaReport {
  std::vector<KappaMomentCell> cells;   // row-major over (t, p)
  std::vector<double> slope, slope_se;  // per p: d log estimate / d log t
  long mc_size = 0;
  bool pass = false;  // no growth as t -> 0: slope >= -2 se for every p
};

// Monte-Carlo estimates of E (t^{-2/alpha} kappa_t)^{-p}; eps = t^{1/alpha}/10
// per point, mean-patch mode
KappaReport kappa_inverse_moments(const LevyMeasureSpec& spec,
                                  const std::vector<double>& t_grid,
                                  const std::vector<double>& p_list,
                                  long mc_size, uint64_t seed);

struct RepresentationBin {
  double center = 0.0;  // within-bin mean of x
  long count = 0;
  // score_* is the bin mean of the analytic score over the bin's samples,
  // the finite-bin form of E[Xi | X] = g(X)
  double mean_beta = 0.0, se_beta = 0.0, score_beta = 0.0;
  double mean_gamma = 0.0, se_gamma = 0.0, score_gamma = 0.0;
  bool pass_beta = false, pass_gamma = false;
};

struct RepresentationReport {
  std::vector<RepresentationBin> bins;
  long mc_size = 0, dropped = 0;
  double pass_fraction_beta = 0.0, pass_fraction_gamma = 0.0;
  bool pass = false;  // >= 95% of bins per component, drop rate < 1e-4
};

// binned regression of the weight on x against the analytic transition score:
// equal-count bins (>= 500 samples each), 3 binwise standard errors
RepresentationReport check_representation(const LevyMeasureSpec& spec,
                                          const Theta& theta, double t,
                                          long mc_size, int bins,
                                          uint64_t seed);

struct MomentSweepCell {
  long n = 0;
  double h = 0.0;
  double beta = 0.0, gamma = 0.0;
  double estimate = 0.0, se = 0.0;
  double top_share = 0.0;  // share of the sum carried by the top 0.1%
  int retried = 0;
};

struct MomentSweepReport {
  std::vector<MomentSweepCell> cells;    // row-major over (theta, scheme)
  std::vector<double> slope, slope_se;   // per theta: log estimate vs log n
  double delta1_exp = 0.0;
  bool finite = true;
  bool pass = false;  // finite everywhere, no upward trend in n
};

// E |r_tilde(n)^T Xi_{h_n}|^{2+delta1_exp} across schemes and a compact theta
// set; requires delta1_exp < spec.delta; cells dominated by a handful of
// samples are retried once at four times the budget
MomentSweepReport moment_sweep(const LevyMeasureSpec& spec,
                               const std::vector<Theta>& theta_set,
                               const std::vector<SamplingScheme>& schemes,
                               double delta1_exp, long mc_size, uint64_t seed);

}  // namespace levylan

#pragma once

// Monte-Carlo harness for the local-asymptotic-normality decomposition of
// the sampled log-likelihood ratio.  Transition densities are cached as
// normalized kernel tables: a fine window at dz resolution for the bulk,
// one 16x wider and coarser f window for stray increments, the fitted power
// tail past that.  Interpolation on both windows is checked against direct
// inversion before use.  The quadratic form uses the information matrix
// completed with the measured score cross moment; parity kills that term for
// symmetric measures, one-sided ones genuinely carry it.

#include <array>
#include <cstdint>
#include <vector>

#include "levylan/densities.hpp"
#include "levylan/levy_model.hpp"
#include "levylan/score_fisher.hpp"
#include "levylan/simulator.hpp"

namespace levylan {

// rate condition n^{-1/2} h^{1/alpha-1} -> 0: automatic at alpha <= 1,
// reported against a configurable quality threshold above it.  Construction
// elsewhere only refuses schemes past kRateHardBound.
struct RateVerdict {
  double value = 0.0;
  double threshold = 0.2;
  bool pass = true;
};
RateVerdict check_rate_condition(double alpha, const SamplingScheme& sch,
                                 double threshold = 0.2);

struct LanThresholds {
  double cov_tol = 0.10;         // Frobenius deviation of cov(Delta_n)
  double uniform_cov_tol = 0.15; // worst case over the nuisance class
  double ks_p_min = 0.01;
  double energy_p_min = 0.01;
  double psi_median_max = 0.15;  // median |Psi_n| at the last scheme
  double rate_threshold = 0.2;   // reporting threshold, not a gate
};

struct LanExperimentConfig {
  LevyMeasureSpec spec;
  Theta theta0;
  std::vector<NuisanceSpec> nuisances{NuisanceSpec{}};  // first is baseline
  std::vector<SamplingScheme> schemes;
  std::vector<std::array<double, 2>> v_list;
  long replications = 1000;
  uint64_t seed = 1;
  double delta1 = 0.25;  // moment surplus of the Lyapunov statistic
  LanThresholds thresholds;

  void validate() const;  // gamma must stay positive under every theta0 + r(n) v
  Theta shifted(const RateMatrices& rm, const std::array<double, 2>& v) const;
};

// normalized-density tables for one theta; local alternatives share one
// LikTable when the nuisance is zero (the normalized law is then theta-free)
struct LikTable {
  DensityTable f;     // fine window
  DensityTable wide;  // 16x window, 16x step; built on demand
  bool wide_built = false;
  double zmax = 0.0, zmax_wide = 0.0, dz = 0.0, dz_wide = 0.0;
  double interp_err = 0.0;  // worst |interp - direct| over the peak
  double interp_rel = 0.0;  // worst relative error where f >= 1e-4 peak

  // log f at normalized z plus the stored log zscale of the caller's map
  double log_f(double z, bool* floored, bool* tail_fit) const;
};

// increment -> normalized coordinate map of one theta
struct IncMap {
  double beta = 0.0, gamma = 1.0, t = 0.0, ct = 0.0;
  double zscale = 1.0, log_zscale = 0.0;
  double z_of(double x) const {
    return zscale * (x - beta * t + gamma * ct);
  }
};

struct LikEval {
  double value = 0.0;
  bool floored = false;  // some increment hit the density floor
  long tail_terms = 0;   // increments evaluated past the wide window
};

// evaluation bundle for one (theta0, nuisance, scheme): rate matrices, the
// completed information matrix, score tables at theta0 and likelihood tables
// for every local alternative theta0 + r(n) v
struct LanContext {
  LevyMeasureSpec spec;
  Theta theta0;
  NuisanceSpec nu;
  SamplingScheme sch;
  RateMatrices rm;
  FisherMatrix fm;
  std::array<std::array<double, 2>, 2> sigma{};       // completed
  std::array<std::array<double, 2>, 2> sigma_diag{};  // limit-display reference
  std::vector<std::array<double, 2>> v_list;
  std::vector<Theta> theta_v;  // aligned with v_list
  ScoreContext sc0;
  std::vector<IncMap> maps;     // [0] = theta0, then per v
  std::vector<LikTable> tabs;   // one shared table when the nuisance is zero
  bool shared_f = false;
  InvertOptions opts;

  const LikTable& table_for(std::size_t map_idx) const {
    return tabs[shared_f ? 0 : map_idx];
  }
  // widens every table once when an increment needs |z| beyond the fine window
  void ensure_range(double zabs);

  // sum over increments of log p_h(theta_v[vi]) - log p_h(theta0)
  LikEval loglik(const PathSample& path, std::size_t vi) const;
  // Delta contribution of one path: sum of r(n)^T g_h(theta0; dx_k); the
  // optional accumulator collects |r_tilde^T g|^{2+delta1} for the Lyapunov
  // statistic and the floor flag
  std::array<double, 2> delta_n(const PathSample& path, double delta1 = 0.0,
                                double* a3_acc = nullptr,
                                bool* floored = nullptr) const;
  double remainder_psi(const PathSample& path, std::size_t vi,
                       LikEval* diag = nullptr) const;
};

LanContext make_lan_context(const LevyMeasureSpec& spec, const Theta& theta0,
                            const NuisanceSpec& nu, const SamplingScheme& sch,
                            const std::vector<std::array<double, 2>>& v_list,
                            const InvertOptions& opts = {});

// convenience one-shot forms; the context form amortizes the table builds
double loglik_ratio(const PathSample& path, const LevyMeasureSpec& spec,
                    const Theta& theta0, const Theta& theta1,
                    const NuisanceSpec& nu, const SamplingScheme& sch);
std::array<double, 2> delta_n(const PathSample& path,
                              const LevyMeasureSpec& spec, const Theta& theta0,
                              const NuisanceSpec& nu,
                              const SamplingScheme& sch);
double remainder_psi(const PathSample& path, const LanExperimentConfig& cfg,
                     const std::array<double, 2>& v);

// n^{-delta1/2} E |r_tilde(n)^T g_h(theta0; X_h)|^{2+delta1} by simulation;
// draws ceil(mc_size / n) paths and uses every increment
struct A3Result {
  double value = 0.0, se = 0.0;
  double moment = 0.0;  // the expectation factor alone
  long draws = 0;
};
A3Result a3_statistic(const LevyMeasureSpec& spec, const Theta& theta0,
                      const NuisanceSpec& nu, const SamplingScheme& sch,
                      double delta1, long mc_size, uint64_t seed);

struct PsiSummary {
  double mean = 0.0, sd = 0.0, median_abs = 0.0;
  double tail_frac = 0.0;  // fraction of |Psi| > 1
  long count = 0;
};

struct LanDeltaCell {
  int scheme_idx = 0, nu_idx = 0;
  std::array<double, 2> mean{}, mean_se{};
  std::array<std::array<double, 2>, 2> cov{};
  double cov_dev = 0.0;       // vs the completed Sigma, Frobenius relative
  double cov_dev_diag = 0.0;  // vs the diagonal display
  double ks_p_beta = 1.0, ks_p_gamma = 1.0;
  double energy_p = 1.0;  // baseline nuisance cells only, else 1
  long flagged = 0;       // replications dropped at the density floor
  long tail_terms = 0;
  double interp_err = 0.0;
  bool pass_cov = true, pass_normal = true;
};

struct LanPsiCell {
  int scheme_idx = 0, v_idx = 0, nu_idx = 0;
  PsiSummary psi;
};

struct LanA3Cell {
  int scheme_idx = 0, nu_idx = 0;
  double value = 0.0, se = 0.0;
};

struct LanReport {
  LanExperimentConfig cfg;
  std::vector<RateVerdict> rate;          // per scheme
  std::vector<LanDeltaCell> delta_cells;  // scheme-major, nuisance-minor
  std::vector<LanPsiCell> psi_cells;      // scheme-major, then v, then nuisance
  std::vector<LanA3Cell> a3_cells;        // scheme-major, nuisance-minor
  // per (v, nuisance), v-major: median |Psi| falls along the scheme list and
  // ends below the threshold
  std::vector<bool> psi_trend_pass;
  std::vector<bool> a3_trend_pass;  // per nuisance: value falls along schemes
  double a3_ratio_dev = 0.0;  // worst |ratio - (n_i/n_j)^{delta1/2}| / se
  double worst_cov_dev = 0.0;
  double worst_psi_median = 0.0;
  double min_delta_corr = 1.0;  // shared-noise coupling across the class
  bool pass_delta = true, pass_psi = true, pass_a3 = true, pass_uniform = true;
  bool pass = true;

  const LanDeltaCell& delta_cell(int si, int ui) const;
  const LanPsiCell& psi_cell(int si, int vi, int ui) const;
};

LanReport uniform_sweep(const LanExperimentConfig& cfg);

}  // namespace levylan

#pragma once

// Fourier inversion of characteristic exponents into density and kernel
// tables.  Uniform lambda grid + trapezoid sum; the discrete sum equals the
// periodization of the true density (Poisson summation), so the grid period
// is padded until the aliased tail images fall below alias_tol of the peak.
// Frequency truncation at |cf(L)| (1+L) < cutoff.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "levylan/char_exponent.hpp"
#include "levylan/common.hpp"
#include "levylan/levy_model.hpp"

namespace levylan {

struct NuisanceSpec {
  enum class Kind { zero, compound_poisson, stable };
  enum class JumpLaw { normal, laplace };
  Kind kind = Kind::zero;
  double rate = 1.0;      // compound_poisson jump intensity
  double jump_std = 1.0;  // compound_poisson jump standard deviation
  JumpLaw jump_law = JumpLaw::normal;
  double alpha_u = 0.5;  // stable activity index
  double scale = 1.0;    // stable scale per unit time

  double bg_index() const;  // 0 for compound_poisson, alpha_u for stable
  // bg_index must stay strictly below the companion alpha or the nuisance
  // part is no longer negligible under the t^{-1/alpha} scaling
  void validate(double companion_alpha) const;
};

// log characteristic function of U_t (exact, no sampling)
cplx nuisance_psi(const NuisanceSpec& nu, double t, double lambda);
// int u e^{i lambda u} P_{U_t}(du); for stable alpha_u this is the
// distributional derivative of the cf (singular |l|^{alpha_u-1} at 0)
cplx nuisance_cf_mean(const NuisanceSpec& nu, double t, double lambda);

// Exact scaling form of the stable exponent with constants extracted from
// two engine evaluations (the closed form stays a test oracle only):
// psi(l) = K l^alpha + i l D per positive side; alpha = 1 carries the log
// drift term instead.
struct StableScaling {
  double alpha = 1.5;
  cplx K{};
  double D = 0.0;
  double E = 0.0;       // alpha = 1: Im psi(l)/l at l = 1
  double c_diff = 0.0;  // alpha = 1: coefficient of -l ln l in Im
};
StableScaling stable_scaling_from_engine(double alpha, double c_plus,
                                         double c_minus);
cplx eval_stable_scaling(const StableScaling& s, double lambda);

// One invertible characteristic function: total exponent plus an optional
// non-exponential prefactor (used by the mean-weighted kernel).  tails holds
// (coef, index) bounds c x^{-1-a} on the density tail for the alias pad;
// extra_pad covers light-tailed components directly.
struct CharExponentHandle {
  std::function<cplx(double)> psi;
  std::function<cplx(double)> prefactor;  // may be empty
  double alpha = 1.5;                     // decay index of Re psi
  std::vector<std::pair<double, double>> tails;
  // per-side density asymptotes c |x|^{-1-a}, only when exact (pure power
  // law, no taper suppression); lets mass sums correct for wrapped images
  std::vector<std::pair<double, double>> tails_lo, tails_hi;
  double extra_pad = 0.0;
  std::string label;

  cplx cf(double l) const {
    cplx v = std::exp(psi(l));
    if (prefactor) v *= prefactor(l);
    return v;
  }
};

CharExponentHandle make_stable_handle(double alpha, double c_plus,
                                      double c_minus);
// exponent of zeta_t = t^{-1/alpha}(Z_t + c_t), measure-scaling route
CharExponentHandle make_zeta_handle(const LevyMeasureSpec& spec, double t);
// full exponent of X_t = beta t + gamma Z_t + U_t
CharExponentHandle make_physical_handle(const LevyMeasureSpec& spec,
                                        const Theta& theta,
                                        const NuisanceSpec& nu, double t);

struct TailFit {
  bool ok = false;
  double log_c = 0.0, slope = 0.0, r2 = 0.0;
  double x_from = 0.0;  // fit window start, absolute value
  double sign = 1.0;    // sign of the kernel on that side
};

struct InvertOptions {
  double alias_tol = 1e-8;  // aliased mass relative to the peak
  double cutoff = 1e-12;    // |cf|(1+l) truncation threshold
  long max_fft = 1 << 23;
  long max_direct = 2000000;  // lambda samples for the per-point path
};

struct DensityTable {
  std::vector<double> x_grid;  // uniform
  std::vector<double> values;
  std::vector<double> dvalues;
  double t = 0.0;
  bool is_limit = false;      // stable limit table, t is meaningless
  bool signed_kernel = false; // derivative kernels skip clipping
  double dx = 0.0;
  double lambda_max = 0.0, period = 0.0;
  double clipped_mass = 0.0;  // negative inversion noise removed
  double alias_est = 0.0;     // alias bound achieved by the pad
  double peak = 0.0;
  TailFit tail_lo, tail_hi;
  // analytic per-side tail terms copied from the handle when exact
  std::vector<std::pair<double, double>> tail_terms_lo, tail_terms_hi;

  // cubic interpolation inside the grid, tail power fit outside
  double eval(double x) const;
  double eval_deriv(double x) const;
  // log density with underflow floor at 1e-300 of the peak
  double log_eval(double x, bool* floored = nullptr) const;
  double trapezoid_mass() const;
  // trapezoid plus tail completion (analytic terms when stamped, the fit
  // otherwise) minus the mass of periodization images inside the window
  double total_mass() const;
};

// direct trapezoid sum at the requested points (no interpolation error)
DensityTable invert_to_density(const CharExponentHandle& handle,
                               const std::vector<double>& x_grid,
                               const InvertOptions& opts = {});

// FFT path on the table's own uniform grid spanning [-xmax, xmax]
DensityTable make_density_table(const CharExponentHandle& handle, double xmax,
                                double dx, const InvertOptions& opts = {});

// p_t(theta; x) through the rescaling identity
// p_t(x) = gamma^{-1} t^{-1/alpha} f_t(gamma^{-1} t^{-1/alpha}(x - beta t + gamma c_t));
// robust for every t because the inversion happens at the zeta scale
DensityTable transition_density(const LevyMeasureSpec& spec,
                                const Theta& theta, const NuisanceSpec& nu,
                                double t, const std::vector<double>& x_grid,
                                const InvertOptions& opts = {});

// cross-check path: direct inversion of the full physical exponent; throws
// when the frequency budget is infeasible (small t with heavy tails)
DensityTable transition_density_direct(const LevyMeasureSpec& spec,
                                       const Theta& theta,
                                       const NuisanceSpec& nu, double t,
                                       const std::vector<double>& x_grid,
                                       const InvertOptions& opts = {});

struct FKernelSet {
  DensityTable f;   // f_t
  DensityTable f1;  // f_t^{(1)} = d/dz f_t
  DensityTable f2;  // f_t^{(2)}(z) = z f1(z) - gamma^{-1} (mean-weighted part)
  double t = 0.0;
  double gamma = 1.0;
};

// exponent of the normalized increment with the nuisance folded in at the
// zeta frequency scale; t <= 0 gives the stable limit.  Feeds both the fft
// and the direct inversion routes, which keeps their comparisons honest.
CharExponentHandle make_f_handle(const LevyMeasureSpec& spec,
                                 const Theta& theta, const NuisanceSpec& nu,
                                 double t, const InvertOptions& opts = {});

// all three kernels on one shared grid and frequency plan; t <= 0 builds the
// stable limit set (f = phi, f1 = phi', f2 = z phi')
FKernelSet f_kernels(const LevyMeasureSpec& spec, const Theta& theta,
                     const NuisanceSpec& nu, double t, double xmax, double dx,
                     const InvertOptions& opts = {});

// in-place iterative radix-2 transform, sign -1 forward (e^{-2pi i jk/n})
void fft_radix2(std::vector<cplx>& a, int sign);

}  // namespace levylan

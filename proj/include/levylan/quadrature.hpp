#pragma once

// Adaptive Gauss-Kronrod (G7,K15) integration, generic over double and
// complex<double>.  Oscillatory integrands are handled by pre-splitting into
// segments short enough for the rule; endpoint singularities by geometric
// refinement toward the endpoint.

#include <algorithm>
#include <cmath>
#include <vector>

#include "levylan/common.hpp"

namespace levylan {

namespace detail {
// QUADPACK abscissae/weights, positive half
inline constexpr double kXGK[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kWGK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::fabs(v); }
inline double magnitude(const cplx& v) { return std::abs(v); }
}  // namespace detail

template <class T>
struct QuadResult {
  T value{};
  double abs_err = 0.0;
  long evals = 0;
  bool converged = false;
};

// One K15 panel; returns (value, error estimate vs embedded G7)
template <class T, class F>
void gk15_panel(F&& f, double a, double b, T& val, double& err, long& evals) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  T fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - h * detail::kXGK[i]);
    fv[14 - i] = f(c + h * detail::kXGK[i]);
  }
  fv[7] = f(c);
  evals += 15;
  T resk = detail::kWGK[7] * fv[7];
  T resg = detail::kWG[3] * fv[7];
  for (int i = 0; i < 7; ++i) resk += detail::kWGK[i] * (fv[i] + fv[14 - i]);
  for (int i = 0; i < 3; ++i)
    resg += detail::kWG[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
  val = resk * h;
  err = std::max(detail::magnitude((resk - resg) * h), 1e-300);
}

// Globally adaptive over an initial segment list.
template <class T, class F>
QuadResult<T> integrate_segments(F&& f, std::vector<double> pts, double abs_tol,
                                 double rel_tol, long max_evals = 1000000) {
  struct Seg {
    double a, b, err;
    T val;
  };
  std::vector<Seg> segs;
  QuadResult<T> out;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    Seg s{pts[i], pts[i + 1], 0.0, T{}};
    if (s.a == s.b) continue;
    gk15_panel(f, s.a, s.b, s.val, s.err, out.evals);
    segs.push_back(s);
  }
  auto total = [&]() {
    T v{};
    double e = 0;
    for (auto& s : segs) {
      v += s.val;
      e += s.err;
    }
    return std::pair<T, double>(v, e);
  };
  for (;;) {
    auto [v, e] = total();
    double tol = std::max(abs_tol, rel_tol * detail::magnitude(v));
    if (e <= tol || out.evals >= max_evals) {
      out.value = v;
      out.abs_err = e;
      out.converged = (e <= tol);
      return out;
    }
    // split the worst segment
    size_t wi = 0;
    for (size_t i = 1; i < segs.size(); ++i)
      if (segs[i].err > segs[wi].err) wi = i;
    Seg s = segs[wi];
    double mid = 0.5 * (s.a + s.b);
    if (mid <= s.a || mid >= s.b) {  // cannot split further
      out.value = v;
      out.abs_err = e;
      out.converged = false;
      return out;
    }
    Seg l{s.a, mid, 0.0, T{}}, r{mid, s.b, 0.0, T{}};
    gk15_panel(f, l.a, l.b, l.val, l.err, out.evals);
    gk15_panel(f, r.a, r.b, r.val, r.err, out.evals);
    segs[wi] = l;
    segs.push_back(r);
  }
}

template <class T, class F>
QuadResult<T> integrate(F&& f, double a, double b, double abs_tol,
                        double rel_tol, long max_evals = 1000000) {
  return integrate_segments<T>(f, {a, b}, abs_tol, rel_tol, max_evals);
}

// Breakpoints geometric toward `a` (handles u^-s style endpoint behavior).
inline std::vector<double> geometric_toward(double a, double b, double first,
                                            double ratio = 2.0) {
  std::vector<double> pts{a};
  double step = first;
  double x = a + step;
  while (x < b) {
    pts.push_back(x);
    step *= ratio;
    x += step;
  }
  pts.push_back(b);
  return pts;
}

// Splits [a,b] so each segment spans at most ~2/3 of an oscillation period of
// e^{i omega u}; keeps K15 accurate per segment.
inline std::vector<double> osc_breakpoints(double a, double b, double omega,
                                           size_t max_segs = 400000) {
  double len = b - a;
  double seg = 4.0 * kPi / std::max(std::fabs(omega), 1e-300);
  size_t n = static_cast<size_t>(std::ceil(len / seg));
  n = std::clamp<size_t>(n, 1, max_segs);
  std::vector<double> pts(n + 1);
  for (size_t i = 0; i <= n; ++i) pts[i] = a + len * double(i) / double(n);
  return pts;
}

// Merge: geometric refinement near `a` plus oscillation-limited segments.
inline std::vector<double> sing_osc_breakpoints(double a, double b,
                                                double omega) {
  std::vector<double> pts = geometric_toward(a, b, std::max(a, 1e-14));
  double seg_len = 4.0 * kPi / std::max(std::fabs(omega), 1e-300);
  std::vector<double> out{pts.front()};
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    double lo = pts[i], hi = pts[i + 1];
    size_t n = static_cast<size_t>(std::ceil((hi - lo) / seg_len));
    n = std::clamp<size_t>(n, 1, 100000);
    for (size_t k = 1; k <= n; ++k) out.push_back(lo + (hi - lo) * double(k) / double(n));
  }
  return out;
}

}  // namespace levylan

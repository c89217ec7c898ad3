#include "levylan/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "levylan/common.hpp"

namespace levylan {

double MeanVar::se() const { return n > 1 ? std::sqrt(var() / double(n)) : 0.0; }

namespace {

// series expansion of P(a,x), valid x < a+1
double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// continued fraction for Q(a,x), valid x >= a+1
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (x < 0 || a <= 0) throw config_error("gamma_q: bad arguments");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi2_sf(double x, double k) { return gamma_q(0.5 * k, 0.5 * x); }

double kolmogorov_sf(double lambda) {
  if (lambda < 0.18) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * ((k % 2) ? 1.0 : -1.0) *
                  std::exp(-2.0 * double(k) * double(k) * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> sample,
                 const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const std::size_t n = sample.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = cdf(sample[i]);
    d = std::max(d, std::fabs(f - double(i) / double(n)));
    d = std::max(d, std::fabs(double(i + 1) / double(n) - f));
  }
  double rn = std::sqrt(double(n));
  // Stephens' small-sample correction
  double lambda = (rn + 0.12 + 0.11 / rn) * d;
  return {d, kolmogorov_sf(lambda), n};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::fabs(double(i) / double(a.size()) -
                              double(j) / double(b.size())));
  }
  double ne = double(a.size()) * double(b.size()) /
              double(a.size() + b.size());
  double rn = std::sqrt(ne);
  double lambda = (rn + 0.12 + 0.11 / rn) * d;
  return {d, kolmogorov_sf(lambda), a.size() + b.size()};
}

Chi2Result chi2_gof(const std::vector<double>& observed,
                    const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw config_error("chi2_gof: size mismatch");
  // pool sparse bins left to right
  std::vector<double> obs, exp;
  double co = 0, ce = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    co += observed[i];
    ce += expected[i];
    if (ce >= 5.0) {
      obs.push_back(co);
      exp.push_back(ce);
      co = ce = 0;
    }
  }
  if (ce > 0 && !exp.empty()) {
    obs.back() += co;
    exp.back() += ce;
  }
  if (exp.size() < 2) return {0.0, 1.0, 0};
  double stat = 0.0;
  for (std::size_t i = 0; i < exp.size(); ++i) {
    double d = obs[i] - exp[i];
    stat += d * d / exp[i];
  }
  long dof = long(exp.size()) - 1;
  return {stat, chi2_sf(stat, double(dof)), dof};
}

FitResult ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw config_error("ols_fit: need >= 2 points");
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
  double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  FitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - (r.intercept + r.slope * x[i]);
    sse += e * e;
  }
  r.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  if (n > 2) r.se_slope = std::sqrt(sse / double(n - 2) / sxx);
  return r;
}

double slope_se_bootstrap(const std::vector<double>& x,
                          const std::vector<std::vector<double>>& batch_means,
                          bool log_y, int resamples, uint64_t seed) {
  if (x.size() != batch_means.size()) throw config_error("slope_se: mismatch");
  MeanVar slopes;
  for (int r = 0; r < resamples; ++r) {
    Stream st = Stream::keyed(seed, uint64_t(r), StreamTag::bootstrap);
    std::vector<double> ys(x.size());
    bool ok = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto& bm = batch_means[i];
      double acc = 0;
      for (std::size_t k = 0; k < bm.size(); ++k)
        acc += bm[size_t(st.uniform() * double(bm.size()))];
      acc /= double(bm.size());
      if (log_y) {
        if (acc <= 0) {
          ok = false;
          break;
        }
        acc = std::log(acc);
      }
      ys[i] = acc;
    }
    if (ok) slopes.add(ols_fit(x, ys).slope);
  }
  return slopes.n > 1 ? std::sqrt(slopes.var()) : 0.0;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw config_error("quantile of empty sample");
  double pos = q * double(sorted.size() - 1);
  std::size_t lo = std::size_t(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double f = pos - double(lo);
  return sorted[lo] * (1.0 - f) + sorted[lo + 1] * f;
}

EnergyResult energy_test_2d(const std::vector<std::array<double, 2>>& a,
                            const std::vector<std::array<double, 2>>& b,
                            int permutations, uint64_t seed) {
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  if (na < 2 || nb < 2) throw config_error("energy test: need >= 2 per sample");
  if (n > 20000) throw config_error("energy test: pooled sample too large");
  if (permutations < 1) throw config_error("energy test: permutations >= 1");

  // condensed distance matrix over the pooled sample, i < j at
  // offset(i) + j - i - 1
  std::vector<std::array<double, 2>> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  std::vector<float> dist(n * (n - 1) / 2);
  std::vector<std::size_t> off(n, 0);
  for (std::size_t i = 1; i < n; ++i)
    off[i] = off[i - 1] + (n - i);  // off[i] indexes pairs (i, i+1..n-1)
  {
    std::size_t q = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++q)
        dist[q] = float(std::hypot(pool[i][0] - pool[j][0],
                                   pool[i][1] - pool[j][1]));
  }

  // U-statistic means of within and between distances under a 0/1 labeling
  std::vector<unsigned char> lab(n, 0);
  auto stat_of = [&]() {
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    std::size_t q = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned char li = lab[i];
      for (std::size_t j = i + 1; j < n; ++j, ++q) {
        const double d = dist[q];
        if (li == lab[j])
          (li ? sbb : saa) += d;
        else
          sab += d;
      }
    }
    const double maa = 2.0 * saa / (double(na) * double(na - 1));
    const double mbb = 2.0 * sbb / (double(nb) * double(nb - 1));
    const double mab = sab / (double(na) * double(nb));
    return 2.0 * mab - maa - mbb;
  };

  for (std::size_t i = na; i < n; ++i) lab[i] = 1;
  EnergyResult res;
  res.stat = stat_of();
  res.permutations = permutations;

  Stream st = Stream::keyed(seed, 0, StreamTag::bootstrap);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  long ge = 1;  // observed labeling belongs to the null set
  for (int r = 0; r < permutations; ++r) {
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = std::size_t(st.uniform() * double(i + 1));
      std::swap(idx[i], idx[j]);
    }
    std::fill(lab.begin(), lab.end(), 0);
    for (std::size_t k = na; k < n; ++k) lab[idx[k]] = 1;
    if (stat_of() >= res.stat - 1e-12) ++ge;
  }
  res.p = double(ge) / double(permutations + 1);
  return res;
}

}  // namespace levylan

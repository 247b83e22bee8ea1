#include "humorfuse/significance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "humorfuse/error.hpp"
#include "humorfuse/metrics.hpp"

namespace humorfuse {

namespace {

double normal_upper_tail(double z) {
  return boost::math::cdf(boost::math::complement(boost::math::normal(), z));
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

// c[0] + c[1] x + c[2] x^2 + ...
template <std::size_t N>
double poly(const double (&c)[N], double x) {
  double r = c[N - 1];
  for (std::size_t j = N - 1; j-- > 0;) r = r * x + c[j];
  return r;
}

}  // namespace

TestResult student_t_independent(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCategory::Validation, "t test needs at least two values per sample");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  double ss = 0.0;
  for (double v : a) ss += (v - ma) * (v - ma);
  for (double v : b) ss += (v - mb) * (v - mb);
  const double df = na + nb - 2.0;
  const double pooled = ss / df;
  if (!(pooled > 0.0)) {
    throw Error(ErrorCategory::Degenerate, "t test: zero pooled variance");
  }
  const double t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  // Two-sided tail: I_{df/(df+t^2)}(df/2, 1/2).
  const double p = boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
  return {t, std::clamp(p, 0.0, 1.0)};
}

std::vector<double> mann_whitney_exact_counts(std::size_t n1, std::size_t n2) {
  // counts[i][j] holds the distribution for i values of a and j values of b.
  std::vector<std::vector<std::vector<double>>> counts(
      n1 + 1, std::vector<std::vector<double>>(n2 + 1));
  for (std::size_t i = 0; i <= n1; ++i) {
    for (std::size_t j = 0; j <= n2; ++j) {
      auto& f = counts[i][j];
      f.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        f[0] = 1.0;
        continue;
      }
      // Largest value from a beats all j values of b; from b it beats none of a.
      const auto& from_a = counts[i - 1][j];
      const auto& from_b = counts[i][j - 1];
      for (std::size_t u = 0; u < from_a.size(); ++u) f[u + j] += from_a[u];
      for (std::size_t u = 0; u < from_b.size(); ++u) f[u] += from_b[u];
    }
  }
  return counts[n1][n2];
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCategory::Validation, "Mann-Whitney U needs two non-empty samples");
  }
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  const std::size_t n = n1 + n2;

  std::vector<std::pair<double, bool>> pooled;  // (value, from a)
  pooled.reserve(n);
  for (double v : a) pooled.emplace_back(v, true);
  for (double v : b) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second) rank_sum_a += midrank;
    }
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double dn1 = static_cast<double>(n1);
  const double dn2 = static_cast<double>(n2);
  const double u = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;

  if (tie_term == 0.0 && n <= kMannWhitneyExactLimit) {
    const auto counts = mann_whitney_exact_counts(n1, n2);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto ui = static_cast<std::size_t>(std::llround(u));
    double lower = 0.0;
    double upper = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (k <= ui) lower += counts[k];
      if (k >= ui) upper += counts[k];
    }
    const double p = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    return {u, p};
  }

  const double mu = dn1 * dn2 / 2.0;
  const double dn = static_cast<double>(n);
  const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) return {u, 1.0};
  const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  return {u, std::min(1.0, 2.0 * normal_upper_tail(z))};
}

TestResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) {
    throw Error(ErrorCategory::Validation, "Shapiro-Wilk needs 3 <= n <= 5000");
  }
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (range < 1e-19) throw Error(ErrorCategory::Degenerate, "Shapiro-Wilk: sample has zero range");

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;

  // Coefficients for the upper half of the order statistics.
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first = 1;
    double fac = 0.0;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  // Full antisymmetric coefficient vector against the ascending sample.
  std::vector<double> coef(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    coef[n - 1 - i] = a[i];
    coef[i] = -a[i];
  }
  // Scaled by range as in the reference algorithm.
  const double cmean = mean(coef);
  double xmean = 0.0;
  for (double v : x) xmean += v / range;
  xmean /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ca = coef[i] - cmean;
    const double cx = x[i] / range - xmean;
    ssa += ca * ca;
    ssx += cx * cx;
    sax += ca * cx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  const double w = 1.0 - w1;

  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;   // 6/pi
    constexpr double stqr = 1.04719755119660;  // pi/3
    return {w, std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr))};
  }

  double y = std::log(w1);
  const double xx = std::log(an);
  double mu = 0.0;
  double sigma = 1.0;
  if (n <= 11) {
    const double gamma = poly(g, an);
    if (y >= gamma) return {w, 1e-99};
    y = -std::log(gamma - y);
    mu = poly(c3, an);
    sigma = std::exp(poly(c4, an));
  } else {
    mu = poly(c5, xx);
    sigma = std::exp(poly(c6, xx));
  }
  return {w, normal_upper_tail((y - mu) / sigma)};
}

double bonferroni(double p_raw, std::size_t m) {
  if (!(p_raw >= 0.0 && p_raw <= 1.0)) throw Error(ErrorCategory::Validation, "p-value outside [0,1]");
  if (m == 0) throw Error(ErrorCategory::Validation, "Bonferroni: m must be at least 1");
  return std::min(1.0, static_cast<double>(m) * p_raw);
}

std::string_view to_string(TestKind kind) {
  return kind == TestKind::StudentT ? "student_t" : "mann_whitney_u";
}

SignificanceResult compare_samples(std::span<const double> a, std::span<const double> b,
                                   std::size_t m) {
  if (a.size() < 3 || b.size() < 3) {
    throw Error(ErrorCategory::Validation, "comparison needs at least 3 fold scores per run");
  }
  SignificanceResult result;
  result.m = m;

  bool normal = true;
  for (auto sample : {a, b}) {
    try {
      if (shapiro_wilk(sample).p_value <= kNormalityAlpha) {
        normal = false;
        result.note = "normality rejected (Shapiro-Wilk p <= 0.05)";
      }
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::Degenerate) throw;
      normal = false;
      result.note = "constant fold scores; normality check not applicable";
    }
  }

  const TestResult r = normal ? student_t_independent(a, b) : mann_whitney_u(a, b);
  result.test = normal ? TestKind::StudentT : TestKind::MannWhitneyU;
  result.statistic = r.statistic;
  result.p_raw = r.p_value;
  result.p_adjusted = bonferroni(r.p_value, m);
  return result;
}

}  // namespace humorfuse

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace humorfuse {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Equal-variance two-sample t test, two-sided. Throws a degenerate-category
// error when the pooled variance is zero.
TestResult student_t_independent(std::span<const double> a, std::span<const double> b);

// U is reported for sample a (midranks for ties). Exact permutation p-value
// for tie-free samples with |a|+|b| <= 16; otherwise the normal approximation
// with tie and continuity corrections.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kMannWhitneyExactLimit = 16;

// Number of a/b arrangements of n1 + n2 distinct values giving each U value.
std::vector<double> mann_whitney_exact_counts(std::size_t n1, std::size_t n2);

// Royston's algorithm (AS R94), 3 <= n <= 5000. W and its p-value.
TestResult shapiro_wilk(std::span<const double> sample);

// min(1, m * p).
double bonferroni(double p_raw, std::size_t m);

enum class TestKind { StudentT, MannWhitneyU };
std::string_view to_string(TestKind kind);

struct SignificanceResult {
  TestKind test = TestKind::StudentT;
  double statistic = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  std::size_t m = 1;
  std::string note;  // why the non-parametric path was taken, if it was
};

inline constexpr double kNormalityAlpha = 0.05;

// Shapiro-Wilk on both samples; Student's t when both look normal, otherwise
// Mann-Whitney U. Bonferroni-adjusted with m comparisons.
SignificanceResult compare_samples(std::span<const double> a, std::span<const double> b,
                                   std::size_t m);

}  // namespace humorfuse

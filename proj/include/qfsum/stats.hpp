#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace qfsum {

/// Per-topic metric values of two systems, paired by position.
struct PairedSample {
  std::vector<double> a;
  std::vector<double> b;
};

struct TTestResult {
  double t_statistic = 0.0;
  std::size_t degrees_of_freedom = 0;
  double p_value = 1.0;  // two-tailed
  std::map<double, bool> significant_at;

  bool significant(double alpha = 0.05) const { return p_value <= alpha; }
};

/// Two-tailed paired t-test on d = a - b: t = mean(d) / (sd(d) / sqrt(n)),
/// sample sd, df = n - 1. Throws TooFewPairs (n < 2) or DegenerateSample
/// (sd(d) = 0). Sizes must match.
TTestResult paired_t_test(const PairedSample& sample, std::span<const double> alphas = {});

/// I_x(a, b) by Lentz's continued fraction; absolute error well under 1e-9.
double regularized_incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// Two-tailed P(|T| >= |t|).
double student_t_two_tailed(double t, double df);

/// 100 * (value - baseline) / baseline. Throws ZeroBaseline.
double relative_change(double value, double baseline);

/// Rounds half away from zero to `decimals` places.
double round_to(double value, int decimals);

/// Two-decimal rendering, e.g. "-2.24". Negative zero prints as "0.00".
std::string format_percent(double percent);

nlohmann::json to_json(const TTestResult& r);

}  // namespace qfsum

#include "qfsum/stats.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "qfsum/error.hpp"

namespace qfsum {

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidConfig("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
  if (!(df > 0.0)) throw InvalidConfig("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double student_t_cdf(double t, double df) {
  const double tail = student_t_two_tailed(t, df) / 2.0;
  return t >= 0.0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(const PairedSample& sample, std::span<const double> alphas) {
  if (sample.a.size() != sample.b.size())
    throw InvalidConfig("paired sample sizes differ: " + std::to_string(sample.a.size()) + " vs " +
                        std::to_string(sample.b.size()));
  const std::size_t n = sample.a.size();
  if (n < 2) throw TooFewPairs(n);

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = sample.a[i] - sample.b[i];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) throw DegenerateSample();

  TTestResult r;
  r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.degrees_of_freedom = n - 1;
  r.p_value = student_t_two_tailed(r.t_statistic, static_cast<double>(r.degrees_of_freedom));
  static constexpr double kDefaultAlphas[] = {0.05};
  if (alphas.empty()) alphas = kDefaultAlphas;
  for (double alpha : alphas) r.significant_at[alpha] = r.p_value <= alpha;
  return r;
}

double relative_change(double value, double baseline) {
  if (baseline == 0.0) throw ZeroBaseline();
  return 100.0 * (value - baseline) / baseline;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

std::string format_percent(double percent) {
  double v = round_to(percent, 2);
  if (v == 0.0) v = 0.0;  // drop the sign of -0.0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

nlohmann::json to_json(const TTestResult& r) {
  nlohmann::json j{{"t", r.t_statistic}, {"df", r.degrees_of_freedom}, {"p", r.p_value}};
  for (const auto& [alpha, sig] : r.significant_at) {
    char key[64];
    std::snprintf(key, sizeof key, "significant_%g", alpha);
    j[key] = sig;
  }
  return j;
}

}  // namespace qfsum

#include "openha/stats.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace openha::stats {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

ZTestResult two_proportion_z(long successes_a, long n_a, long successes_b,
                             long n_b) {
  if (n_a <= 0 || n_b <= 0) throw std::invalid_argument("empty sample");
  if (successes_a < 0 || successes_a > n_a || successes_b < 0 ||
      successes_b > n_b) {
    throw std::invalid_argument("successes out of range");
  }
  ZTestResult r;
  double p1 = static_cast<double>(successes_a) / static_cast<double>(n_a);
  double p2 = static_cast<double>(successes_b) / static_cast<double>(n_b);
  r.delta = p1 - p2;
  double pooled = static_cast<double>(successes_a + successes_b) /
                  static_cast<double>(n_a + n_b);
  double var = pooled * (1.0 - pooled) *
               (1.0 / static_cast<double>(n_a) + 1.0 / static_cast<double>(n_b));
  if (r.delta == 0.0 || var <= 0.0) {
    // Degenerate pooled variance only occurs when both rates are 0 or 1;
    // any remaining nonzero delta is impossible there.
    r.z = 0.0;
    r.p_value = r.delta == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.z = r.delta / std::sqrt(var);
  r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  return r;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string format_pm(double mean_v, double std_v) {
  return format_fixed(mean_v, 1) + "^{±" + format_fixed(std_v, 1) + "}";
}

}  // namespace openha::stats

#pragma once

#include <string>
#include <vector>

namespace openha::stats {

double mean(const std::vector<double>& xs);
double stddev(const std::vector<double>& xs);  // population, 0 for n < 2

// Pooled two-proportion z-test; two-sided p-value. Equal rates give z = 0,
// p = 1 even when the pooled variance degenerates.
struct ZTestResult {
  double delta = 0.0;  // p1 - p2
  double z = 0.0;
  double p_value = 1.0;
};
ZTestResult two_proportion_z(long successes_a, long n_a, long successes_b,
                             long n_b);

// "x.x^{±y.y}" with one decimal place.
std::string format_pm(double mean, double std);

std::string format_fixed(double v, int decimals);

}  // namespace openha::stats

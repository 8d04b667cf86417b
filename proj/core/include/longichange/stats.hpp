#pragma once

#include <span>
#include <vector>

namespace lc {

/// Percentile with linear interpolation between order statistics
/// (rank = p/100 * (n-1)). `values` is copied and sorted internally.
double percentile(std::vector<double> values, double p);
double percentile(std::span<const float> values, double p);

/// Percentile over an already ascending-sorted range.
double percentile_sorted(std::span<const double> sorted, double p);

double mean(std::span<const double> values);

struct QuartileSummary {
  double mean = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

QuartileSummary quartiles(std::vector<double> values);

}  // namespace lc

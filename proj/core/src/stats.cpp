#include "longichange/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lc {

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile: empty range");
  if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p outside [0,100]");
  if (sorted.size() == 1) return sorted[0];
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return percentile_sorted(values, p);
}

double percentile(std::span<const float> values, double p) {
  std::vector<double> tmp(values.begin(), values.end());
  return percentile(std::move(tmp), p);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty range");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

QuartileSummary quartiles(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("quartiles: empty range");
  QuartileSummary s;
  s.mean = mean(values);
  std::sort(values.begin(), values.end());
  s.q1 = percentile_sorted(values, 25.0);
  s.median = percentile_sorted(values, 50.0);
  s.q3 = percentile_sorted(values, 75.0);
  s.min = values.front();
  s.max = values.back();
  return s;
}

}  // namespace lc

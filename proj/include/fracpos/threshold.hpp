#ifndef FRACPOS_THRESHOLD_HPP
#define FRACPOS_THRESHOLD_HPP

// Sign-change search shared by the time (t) and step size (tau) threshold
// detectors: scan a log grid, locate the last point where the smallest
// matrix entry is below -tolerance, then bisect in log scale.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fracpos/errors.hpp"

namespace fracpos {

/// Log-spaced grid over [lo, hi] with `per_decade` points per decade,
/// both ends included.
inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0 && hi > lo) || per_decade < 1) {
    throw InvalidParameter("log_grid: need 0 < lo < hi and per_decade >= 1");
  }
  const double decades = std::log10(hi / lo);
  const int steps = static_cast<int>(std::ceil(decades * per_decade - 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    grid.push_back(lo * std::pow(10.0, decades * k / steps));
  }
  grid.back() = hi;
  return grid;
}

struct ScanSpec {
  double lo = 1e-8;
  double hi = 1e2;
  int per_decade = 25;

  [[nodiscard]] std::vector<double> grid() const { return log_grid(lo, hi, per_decade); }
};

struct ThresholdReport {
  enum class Status {
    Found,            // negative early, nonnegative from `value` on
    HoldsEverywhere,  // never below -tolerance on the scan
    NoneFound,        // still negative at the end of the scan
  };

  Status status = Status::NoneFound;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> grid;
  std::vector<std::pair<double, double>> curve;  // (t, min entry)
  std::pair<double, double> bracket{std::numeric_limits<double>::quiet_NaN(),
                                    std::numeric_limits<double>::quiet_NaN()};
  double tolerance = 0.0;

  [[nodiscard]] bool found() const { return status == Status::Found; }
};

inline std::string_view to_string(ThresholdReport::Status s) {
  switch (s) {
    case ThresholdReport::Status::Found: return "found";
    case ThresholdReport::Status::HoldsEverywhere: return "holds for all sampled t";
    case ThresholdReport::Status::NoneFound: return "none found";
  }
  return "?";
}

/// Supremum of the sign-change points of `min_entry` on `grid`.
///
/// The bracket [lo, hi] keeps min_entry(lo) < -tolerance <= min_entry(hi)
/// and is halved in log scale until hi/lo - 1 < rel_precision. The
/// reported value is hi.
inline ThresholdReport find_threshold(const std::function<double(double)>& min_entry,
                                      std::vector<double> grid, double tolerance,
                                      double rel_precision = 1e-4) {
  if (grid.empty()) throw InvalidParameter("find_threshold: empty grid");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1] && grid[k - 1] > 0.0)) {
      throw InvalidParameter("find_threshold: grid must be positive and ascending");
    }
  }
  ThresholdReport report;
  report.tolerance = tolerance;
  report.curve.reserve(grid.size());
  std::ptrdiff_t last_negative = -1;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double m = min_entry(grid[k]);
    report.curve.emplace_back(grid[k], m);
    if (m < -tolerance) last_negative = static_cast<std::ptrdiff_t>(k);
  }
  report.grid = std::move(grid);

  if (last_negative < 0) {
    report.status = ThresholdReport::Status::HoldsEverywhere;
    return report;
  }
  if (last_negative + 1 == static_cast<std::ptrdiff_t>(report.grid.size())) {
    report.status = ThresholdReport::Status::NoneFound;
    return report;
  }
  double lo = report.grid[static_cast<std::size_t>(last_negative)];
  double hi = report.grid[static_cast<std::size_t>(last_negative) + 1];
  while (hi / lo - 1.0 >= rel_precision) {
    const double mid = std::sqrt(lo * hi);
    if (min_entry(mid) < -tolerance) lo = mid; else hi = mid;
  }
  report.status = ThresholdReport::Status::Found;
  report.bracket = {lo, hi};
  report.value = hi;
  return report;
}

}  // namespace fracpos

#endif  // FRACPOS_THRESHOLD_HPP

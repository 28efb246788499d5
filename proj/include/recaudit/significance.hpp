#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recaudit/core.hpp"
#include "recaudit/stats.hpp"

namespace recaudit::metrics {

inline constexpr std::size_t kMinCellForTest = 16;

// One aggregated table cell after testing against the baseline sample.
struct CellStats {
  double mean = 0.0;
  std::size_t n = 0;
  std::optional<double> delta;  // mean - baseline mean
  std::optional<double> p;      // two-sided Welch p vs baseline
  bool sig_05 = false;          // significantly more aligned, alpha = 0.05
  bool sig_0001 = false;        // significantly more aligned, alpha = 0.0001
  bool insufficient_n = false;  // cell too small for a test
  bool is_baseline = false;
};

// Tests every non-baseline group against the baseline sample. Cells below
// min_cell (on either side) report insufficient_n instead of a p-value.
// Significance flags require the cell mean to exceed the baseline mean,
// matching the "more demographically aligned" criterion.
inline std::map<std::string, CellStats> significance_annotate(
    const std::map<std::string, std::vector<double>>& groups,
    const std::string& baseline_key,
    std::span<const double> alphas = std::span<const double>(),
    std::size_t min_cell = kMinCellForTest) {
  const auto base_it = groups.find(baseline_key);
  if (base_it == groups.end() || base_it->second.empty())
    throw Error("significance_annotate: missing baseline group '" +
                baseline_key + "'");
  const std::vector<double>& baseline = base_it->second;
  const double base_mean = stats::moments(baseline).mean;

  double alpha_low = 0.05, alpha_high = 0.0001;
  if (alphas.size() >= 1) alpha_low = alphas[0];
  if (alphas.size() >= 2) alpha_high = alphas[1];

  std::map<std::string, CellStats> out;
  for (const auto& [key, values] : groups) {
    CellStats cell;
    cell.n = values.size();
    if (!values.empty()) cell.mean = stats::moments(values).mean;
    if (key == baseline_key) {
      cell.is_baseline = true;
      out[key] = cell;
      continue;
    }
    cell.delta = cell.mean - base_mean;
    if (values.size() < min_cell || baseline.size() < min_cell) {
      cell.insufficient_n = true;
      out[key] = cell;
      continue;
    }
    const auto test = stats::welch_t_test(values, baseline);
    cell.p = test.p;
    const bool more_aligned = *cell.delta > 0.0;
    cell.sig_05 = more_aligned && test.p < alpha_low;
    cell.sig_0001 = more_aligned && test.p < alpha_high;
    out[key] = cell;
  }
  return out;
}

}  // namespace recaudit::metrics

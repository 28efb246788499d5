#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "recaudit/core.hpp"
#include "recaudit/demographic_store.hpp"

namespace recaudit::metrics {

inline constexpr double kSmoothingEpsilon = 1e-10;

// Normalized weights over a duplicate-free support.
struct Distribution {
  std::vector<std::string> support;
  std::vector<double> weights;

  static Distribution from_counts(const std::map<std::string, double>& counts) {
    Distribution d;
    double total = 0.0;
    for (const auto& [id, c] : counts) {
      if (c < 0) throw Error("Distribution: negative count for " + id);
      total += c;
    }
    if (total <= 0.0) throw Error("Distribution: all counts are zero");
    d.support.reserve(counts.size());
    d.weights.reserve(counts.size());
    for (const auto& [id, c] : counts) {
      d.support.push_back(id);
      d.weights.push_back(c / total);
    }
    return d;
  }
};

inline double mean_share(std::span<const double> shares) {
  if (shares.empty()) throw Error("mean_share: empty recommendation list");
  double sum = 0.0;
  for (double s : shares) sum += s;
  return sum / static_cast<double>(shares.size());
}

namespace detail {

inline double shannon_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

// add epsilon to every normalized weight, then renormalize
inline std::vector<double> smooth(std::span<const double> weights,
                                  double eps = kSmoothingEpsilon) {
  std::vector<double> out(weights.begin(), weights.end());
  double total = 0.0;
  for (double& w : out) {
    w += eps;
    total += w;
  }
  for (double& w : out) w /= total;
  return out;
}

}  // namespace detail

// Smoothed entropy of the recommendation frequencies over the full support
// of d possible outcomes, normalized to [0, 1] by log d. 1 means uniform.
inline double diversity(std::span<const double> counts) {
  const std::size_t d = counts.size();
  if (d < 2) throw Error("diversity: support must have at least 2 outcomes");
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0) throw Error("diversity: negative count");
    total += c;
  }
  if (total <= 0.0) throw Error("diversity: all counts are zero");
  std::vector<double> weights(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) weights[i] = counts[i] / total;
  const auto smoothed = detail::smooth(weights);
  return detail::shannon_entropy(smoothed) / std::log(static_cast<double>(d));
}

// Jensen-Shannon divergence between two distributions, normalized by log 2
// so it lands in [0, 1]. Supports are unioned with zero fill, then both
// sides are epsilon-smoothed. 0 iff P = Q, 1 for disjoint supports.
inline double representativeness(const Distribution& p,
                                 const Distribution& q) {
  if (p.support.empty() || q.support.empty())
    throw Error("representativeness: empty support");
  std::map<std::string, std::pair<double, double>> joined;
  for (std::size_t i = 0; i < p.support.size(); ++i)
    joined[p.support[i]].first += p.weights[i];
  for (std::size_t i = 0; i < q.support.size(); ++i)
    joined[q.support[i]].second += q.weights[i];
  std::vector<double> pw, qw;
  pw.reserve(joined.size());
  qw.reserve(joined.size());
  for (const auto& [id, w] : joined) {
    pw.push_back(w.first);
    qw.push_back(w.second);
  }
  const auto ps = detail::smooth(pw);
  const auto qs = detail::smooth(qw);
  std::vector<double> m(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) m[i] = 0.5 * (ps[i] + qs[i]);
  const double jsd = detail::shannon_entropy(m) -
                     0.5 * (detail::shannon_entropy(ps) +
                            detail::shannon_entropy(qs));
  const double norm = jsd / std::log(2.0);
  // clamp tiny negative/overshoot from rounding
  if (norm < 0.0) return 0.0;
  if (norm > 1.0) return 1.0;
  return norm;
}

// Fraction of a group's population, across the given cities, that lives in
// (or attends) a recommended entity.
inline double coverage(const std::set<std::string>& recommended_ids,
                       RaceGroup group, const stores::DemographicStore& store,
                       std::span<const City> cities) {
  double covered = 0.0;
  double total = 0.0;
  for (City c : cities) {
    for (const auto* e : store.in_city(c)) {
      const auto it = e->group_counts.find(group);
      const double pop =
          it == e->group_counts.end() ? 0.0 : static_cast<double>(it->second);
      total += pop;
      if (recommended_ids.count(e->id)) covered += pop;
    }
  }
  if (total <= 0.0)
    throw Error("coverage: zero population for group in the given cities");
  return covered / total;
}

}  // namespace recaudit::metrics

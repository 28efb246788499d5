#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "recaudit/metrics.hpp"
#include "recaudit/significance.hpp"
#include "test_helpers.hpp"

using namespace recaudit;
using metrics::Distribution;

namespace {

// -- independent direct-definition oracles, long double accumulation ------

long double oracle_entropy(const std::vector<long double>& p) {
  long double h = 0.0L;
  for (const long double x : p) {
    if (x > 0.0L) h -= x * std::log(x);
  }
  return h;
}

std::vector<long double> oracle_smooth(const std::vector<long double>& w) {
  std::vector<long double> out = w;
  long double total = 0.0L;
  for (auto& x : out) {
    x += 1e-10L;
    total += x;
  }
  for (auto& x : out) x /= total;
  return out;
}

double oracle_diversity(const std::vector<double>& counts) {
  long double total = 0.0L;
  for (double c : counts) total += c;
  std::vector<long double> w;
  for (double c : counts) w.push_back(c / total);
  const auto sm = oracle_smooth(w);
  return static_cast<double>(oracle_entropy(sm) /
                             std::log(static_cast<long double>(counts.size())));
}

// JSD straight from the KL-divergence definition (the implementation goes
// through entropies instead).
double oracle_jsd_normalized(const std::vector<double>& p_in,
                             const std::vector<double>& q_in) {
  std::vector<long double> p(p_in.begin(), p_in.end());
  std::vector<long double> q(q_in.begin(), q_in.end());
  const auto ps = oracle_smooth(p);
  const auto qs = oracle_smooth(q);
  auto kl = [](const std::vector<long double>& a,
               const std::vector<long double>& b) {
    long double total = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > 0.0L) total += a[i] * std::log(a[i] / b[i]);
    }
    return total;
  };
  std::vector<long double> m(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) m[i] = (ps[i] + qs[i]) / 2.0L;
  const long double jsd = kl(ps, m) / 2.0L + kl(qs, m) / 2.0L;
  return static_cast<double>(jsd / std::log(2.0L));
}

Distribution dist_from(const std::vector<double>& weights) {
  std::map<std::string, double> counts;
  for (std::size_t i = 0; i < weights.size(); ++i)
    counts["e" + std::to_string(i)] = weights[i];
  return Distribution::from_counts(counts);
}

}  // namespace

TEST_CASE("mean_share basics") {
  CHECK(metrics::mean_share(std::vector<double>{0.10, 0.30}) ==
        Catch::Approx(0.20));
  CHECK(metrics::mean_share(std::vector<double>{0.5}) == 0.5);
  CHECK_THROWS_AS(metrics::mean_share(std::vector<double>{}), Error);
}

TEST_CASE("mean_share of a constant list is exactly that share") {
  const std::vector<double> same(17, 0.3125);
  CHECK(metrics::mean_share(same) == 0.3125);
}

TEST_CASE("diversity anchors") {
  SECTION("uniform distribution is maximally diverse") {
    for (std::size_t d : {2u, 5u, 50u}) {
      const std::vector<double> uniform(d, 3.0);
      CHECK(std::fabs(metrics::diversity(uniform) - 1.0) < 1e-9);
    }
  }
  SECTION("point mass on a large support is near zero") {
    std::vector<double> point(100, 0.0);
    point[42] = 1.0;
    CHECK(metrics::diversity(point) < 1e-7);
    CHECK(metrics::diversity(point) ==
          Catch::Approx(oracle_diversity(point)).margin(1e-12));
  }
  SECTION("tiny or empty supports are rejected") {
    CHECK_THROWS_AS(metrics::diversity(std::vector<double>{1.0}), Error);
    CHECK_THROWS_AS(metrics::diversity(std::vector<double>{}), Error);
    CHECK_THROWS_AS(metrics::diversity(std::vector<double>{0.0, 0.0}), Error);
  }
}

TEST_CASE("diversity decreases when mass moves to a heavier bin") {
  std::mt19937 gen(7);
  std::uniform_int_distribution<std::size_t> d_d(3, 30);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = d_d(gen);
    std::vector<double> counts(d);
    std::uniform_real_distribution<double> c_d(1.0, 50.0);
    for (auto& c : counts) c = c_d(gen);
    // pick a lighter and a heavier bin, move some mass light -> heavy
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < d; ++i) {
      if (counts[i] < counts[lo]) lo = i;
      if (counts[i] > counts[hi]) hi = i;
    }
    if (counts[lo] == counts[hi]) continue;
    const double before = metrics::diversity(counts);
    const double moved = counts[lo] / 2.0;
    counts[lo] -= moved;
    counts[hi] += moved;
    const double after = metrics::diversity(counts);
    CHECK(after < before);
  }
}

TEST_CASE("diversity matches the oracle on random instances") {
  std::mt19937 gen(42);
  std::uniform_int_distribution<std::size_t> d_d(2, 50);
  std::uniform_real_distribution<double> c_d(0.0, 20.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = d_d(gen);
    std::vector<double> counts(d);
    double total = 0.0;
    for (auto& c : counts) {
      c = c_d(gen);
      total += c;
    }
    if (total == 0.0) counts[0] = 1.0;
    CHECK(std::fabs(metrics::diversity(counts) - oracle_diversity(counts)) <
          1e-9);
  }
}

TEST_CASE("representativeness anchors") {
  SECTION("identical distributions have zero divergence") {
    const auto p = dist_from({0.2, 0.3, 0.5});
    CHECK(metrics::representativeness(p, p) ==
          Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("disjoint supports reach one") {
    Distribution p = Distribution::from_counts({{"a", 1.0}, {"b", 1.0}});
    Distribution q = Distribution::from_counts({{"c", 1.0}, {"d", 1.0}});
    CHECK(std::fabs(metrics::representativeness(p, q) - 1.0) < 1e-6);
  }
  SECTION("known two-point case matches the KL oracle") {
    const auto p = dist_from({0.5, 0.5});
    const auto q = dist_from({0.9, 0.1});
    CHECK(metrics::representativeness(p, q) ==
          Catch::Approx(oracle_jsd_normalized({0.5, 0.5}, {0.9, 0.1}))
              .margin(1e-12));
  }
  SECTION("symmetry") {
    const auto p = dist_from({0.1, 0.2, 0.7});
    const auto q = dist_from({0.3, 0.3, 0.4});
    CHECK(metrics::representativeness(p, q) ==
          Catch::Approx(metrics::representativeness(q, p)).margin(1e-15));
  }
}

TEST_CASE("representativeness matches the KL oracle on random instances") {
  std::mt19937 gen(4242);
  std::uniform_int_distribution<std::size_t> d_d(2, 50);
  std::uniform_real_distribution<double> w_d(0.0, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = d_d(gen);
    std::vector<double> pw(d), qw(d);
    for (std::size_t i = 0; i < d; ++i) {
      pw[i] = w_d(gen);
      qw[i] = w_d(gen);
    }
    double pt = 0.0, qt = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      pt += pw[i];
      qt += qw[i];
    }
    if (pt == 0.0) {
      pw[0] = 1.0;
      pt = 1.0;
    }
    if (qt == 0.0) {
      qw[0] = 1.0;
      qt = 1.0;
    }
    std::vector<double> pn = pw, qn = qw;
    for (auto& x : pn) x /= pt;
    for (auto& x : qn) x /= qt;
    const double got =
        metrics::representativeness(dist_from(pn), dist_from(qn));
    const double expected = oracle_jsd_normalized(pn, qn);
    CHECK(std::fabs(got - expected) < 1e-9);
  }
}

TEST_CASE("coverage over the shipped neighborhood store") {
  const auto store = testutil::shipped_neighborhood_store();
  const std::vector<City> cities(kAllCities.begin(), kAllCities.end());

  SECTION("recommending everything covers everyone exactly") {
    std::set<std::string> all;
    for (const auto& e : store.entities()) all.insert(e.id);
    for (RaceGroup g : kAllRaces)
      CHECK(metrics::coverage(all, g, store, cities) == 1.0);
  }
  SECTION("recommending nothing covers nobody") {
    CHECK(metrics::coverage({}, RaceGroup::Black, store, cities) == 0.0);
  }
  SECTION("monotone under set inclusion") {
    std::mt19937 gen(5);
    std::vector<std::string> ids;
    for (const auto& e : store.entities()) ids.push_back(e.id);
    for (int trial = 0; trial < 50; ++trial) {
      std::shuffle(ids.begin(), ids.end(), gen);
      std::set<std::string> small(ids.begin(), ids.begin() + 10);
      std::set<std::string> large(ids.begin(), ids.begin() + 25);
      for (RaceGroup g : kAllRaces) {
        CHECK(metrics::coverage(small, g, store, cities) <=
              metrics::coverage(large, g, store, cities) + 1e-15);
      }
    }
  }
  SECTION("matches a direct-summation oracle on random subsets") {
    std::mt19937 gen(6);
    std::vector<std::string> ids;
    for (const auto& e : store.entities()) ids.push_back(e.id);
    for (int trial = 0; trial < 200; ++trial) {
      std::shuffle(ids.begin(), ids.end(), gen);
      const std::size_t k = 1 + gen() % ids.size();
      const std::set<std::string> chosen(ids.begin(), ids.begin() + k);
      for (RaceGroup g : kAllRaces) {
        long double covered = 0.0L, total = 0.0L;
        for (const auto& e : store.entities()) {
          const long double pop = e.group_counts.at(g);
          total += pop;
          if (chosen.count(e.id)) covered += pop;
        }
        CHECK(std::fabs(metrics::coverage(chosen, g, store, cities) -
                        static_cast<double>(covered / total)) < 1e-12);
      }
    }
  }
}

TEST_CASE("significance_annotate flags against the baseline") {
  std::map<std::string, std::vector<double>> groups;
  groups["baseline"] = std::vector<double>(20, 0.2);
  for (int i = 0; i < 20; ++i) groups["baseline"][i] += 0.001 * i;
  groups["same"] = groups["baseline"];
  std::vector<double> shifted;
  for (int i = 0; i < 20; ++i) shifted.push_back(0.8 + 0.001 * i);
  groups["shifted"] = shifted;
  groups["tiny"] = {0.9, 0.95};

  const std::vector<double> alphas = {0.05, 0.0001};
  const auto cells =
      metrics::significance_annotate(groups, "baseline", alphas, 16);
  CHECK(cells.at("baseline").is_baseline);
  CHECK_FALSE(cells.at("same").sig_05);
  CHECK(cells.at("same").p.value() == Catch::Approx(1.0));
  CHECK(cells.at("shifted").sig_05);
  CHECK(cells.at("shifted").sig_0001);
  CHECK(cells.at("tiny").insufficient_n);
  CHECK_FALSE(cells.at("tiny").p.has_value());

  SECTION("alpha monotonicity: 0.0001 flags are a subset of 0.05 flags") {
    for (const auto& [key, cell] : cells) {
      if (cell.sig_0001) CHECK(cell.sig_05);
    }
  }
  SECTION("missing baseline is an error") {
    CHECK_THROWS_AS(
        metrics::significance_annotate(groups, "nope", alphas, 16), Error);
  }
}

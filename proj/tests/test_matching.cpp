#include <catch_amalgamated.hpp>

#include <random>
#include <string>

#include "recaudit/entity_matching.hpp"
#include "test_helpers.hpp"

using namespace recaudit;
using stores::MatchMethod;

namespace {

// Brute-force Ratcliff-Obershelp: triple-loop longest common substring
// (leftmost on ties), recursing on both sides.
struct BruteBlock {
  std::size_t a = 0, b = 0, len = 0;
};

BruteBlock brute_longest(const std::string& a, const std::string& b) {
  BruteBlock best;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      std::size_t len = 0;
      while (i + len < a.size() && j + len < b.size() &&
             a[i + len] == b[j + len])
        ++len;
      if (len > best.len) best = {i, j, len};
    }
  }
  return best;
}

std::size_t brute_matches(const std::string& a, const std::string& b) {
  const auto blk = brute_longest(a, b);
  if (blk.len == 0) return 0;
  return blk.len + brute_matches(a.substr(0, blk.a), b.substr(0, blk.b)) +
         brute_matches(a.substr(blk.a + blk.len), b.substr(blk.b + blk.len));
}

double brute_ratcliff(std::string a, std::string b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  // same canonical argument order as the implementation under test
  if (b.size() < a.size() || (b.size() == a.size() && b < a)) std::swap(a, b);
  return 2.0 * static_cast<double>(brute_matches(a, b)) /
         static_cast<double>(a.size() + b.size());
}

std::string random_word(std::mt19937& gen, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len_d(0, max_len);
  std::uniform_int_distribution<int> ch_d(0, 3);  // tiny alphabet: collisions
  const char alphabet[] = {'a', 'b', 'c', 'd'};
  std::string s;
  const std::size_t n = len_d(gen);
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[ch_d(gen)]);
  return s;
}

}  // namespace

TEST_CASE("ratcliff similarity fundamentals") {
  CHECK(stores::ratcliff_obershelp("harlem", "harlem") == 1.0);
  CHECK(stores::ratcliff_obershelp("", "") == 1.0);
  CHECK(stores::ratcliff_obershelp("abc", "") == 0.0);
  CHECK(stores::ratcliff_obershelp("abcd", "wxyz") == 0.0);
  SECTION("classic worked pair matches the direct definition") {
    CHECK(stores::ratcliff_obershelp("WIKIMEDIA", "WIKIMANIA") ==
          Catch::Approx(brute_ratcliff("WIKIMEDIA", "WIKIMANIA")));
  }
}

TEST_CASE("ratcliff similarity matches brute force on random strings") {
  std::mt19937 gen(77);
  for (int trial = 0; trial < 400; ++trial) {
    const std::string a = random_word(gen, 14);
    const std::string b = random_word(gen, 14);
    CHECK(stores::ratcliff_obershelp(a, b) ==
          Catch::Approx(brute_ratcliff(a, b)).margin(1e-15));
  }
}

TEST_CASE("ratcliff similarity is symmetric and bounded") {
  std::mt19937 gen(78);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string a = random_word(gen, 12);
    const std::string b = random_word(gen, 12);
    const double ab = stores::ratcliff_obershelp(a, b);
    const double ba = stores::ratcliff_obershelp(b, a);
    CHECK(ab == Catch::Approx(ba).margin(1e-15));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(stores::ratcliff_obershelp(a, a) == (a.empty() ? 1.0 : 1.0));
  }
}

TEST_CASE("strip_extraneous removes parentheticals and dash suffixes") {
  CHECK(stores::strip_extraneous("New York University (NYU)") ==
        "New York University");
  CHECK(stores::strip_extraneous(
            "Riverton State University\xE2\x80\x94Main Campus") ==
        "Riverton State University");
  CHECK(stores::strip_extraneous("Foo University - Downtown") ==
        "Foo University");
  CHECK(stores::strip_extraneous("Bedford-Stuyvesant") ==
        "Bedford-Stuyvesant");  // tight hyphen survives
}

TEST_CASE("university matching cascade") {
  const auto store = testutil::shipped_university_store();

  SECTION("exact case-insensitive match comes first") {
    const auto res = stores::match_university("new york university", store);
    REQUIRE(res.resolved());
    CHECK(res.entity_id == "u012");
    CHECK(*res.method == MatchMethod::Exact);
  }
  SECTION("stripped match fires only after exact fails") {
    const auto res =
        stores::match_university("New York University (Manhattan)", store);
    REQUIRE(res.resolved());
    CHECK(res.entity_id == "u012");
    CHECK(*res.method == MatchMethod::Stripped);
  }
  SECTION("alias lookup fires only after exact and stripped fail") {
    const auto res = stores::match_university("NYU", store);
    REQUIRE(res.resolved());
    CHECK(res.entity_id == "u012");
    CHECK(*res.method == MatchMethod::Alias);
  }
  SECTION("ambiguous stripped names pick the largest population") {
    const auto res =
        stores::match_university("Riverton State University", store);
    REQUIRE(res.resolved());
    CHECK(res.entity_id == "u027");  // main campus, 30000 > 8000
    CHECK(*res.method == MatchMethod::Stripped);
  }
  SECTION("unknown names come back unresolved, not as an error") {
    const auto res = stores::match_university("Hogwarts", store);
    CHECK_FALSE(res.resolved());
    CHECK_FALSE(res.method.has_value());
  }
}

TEST_CASE("neighborhood fuzzy matching") {
  const auto store = testutil::shipped_neighborhood_store();

  SECTION("identical name matches with similarity 1") {
    const auto res =
        stores::match_neighborhood("Harlem", City::NewYorkCity, store);
    REQUIRE(res.resolved());
    CHECK(res.entity_id == "n001");
    CHECK(*res.similarity == 1.0);
  }
  SECTION("borough qualifiers after a comma are stripped") {
    const auto res = stores::match_neighborhood("Bed-Stuy, Brooklyn",
                                                City::NewYorkCity, store);
    REQUIRE(res.resolved());
    CHECK(res.entity_id == "n002");  // Bedford-Stuyvesant
  }
  SECTION("close misspellings resolve through fuzz") {
    const auto res =
        stores::match_neighborhood("Washington Hights", City::NewYorkCity,
                                   store);
    REQUIRE(res.resolved());
    CHECK(res.entity_id == "n006");
    CHECK(*res.method == MatchMethod::Fuzzy);
    CHECK(*res.similarity < 1.0);
  }
  SECTION("sub-threshold best matches stay unresolved with the score kept") {
    const auto res =
        stores::match_neighborhood("Xyzzyplugh", City::NewYorkCity, store);
    CHECK_FALSE(res.resolved());
    REQUIRE(res.similarity.has_value());
    CHECK(*res.similarity < 0.6);
  }
  SECTION("city scoping keeps the same name apart") {
    const auto nyc =
        stores::match_neighborhood("Chinatown", City::NewYorkCity, store);
    const auto chi =
        stores::match_neighborhood("Chinatown", City::Chicago, store);
    REQUIRE(nyc.resolved());
    REQUIRE(chi.resolved());
    CHECK(nyc.entity_id == "n010");
    CHECK(chi.entity_id == "n051");
  }
  SECTION("threshold is configurable") {
    const auto strict = stores::match_neighborhood(
        "Washington Hights", City::NewYorkCity, store, 0.99);
    CHECK_FALSE(strict.resolved());
  }
}

TEST_CASE("normalization is case-, punctuation-, and spacing-insensitive") {
  CHECK(stores::normalize_name("  Bed-Stuy!  ") == "bed-stuy");
  CHECK(stores::normalize_name("UPPER   east SIDE.") == "upper east side");
  CHECK(stores::normalize_name("O'Hare") == "ohare");
}

#include <catch_amalgamated.hpp>

#include <filesystem>

#include "recaudit/demographic_store.hpp"
#include "test_helpers.hpp"

using namespace recaudit;
using stores::DemographicStore;

TEST_CASE("a valid two-row file ingests into a two-entity store") {
  const auto dir = testutil::unique_temp_dir("ingest");
  const auto file = testutil::write_file(
      dir / "two.csv",
      "id,canonical_name,kind,city,total_population,count_white,count_black,"
      "count_hispanic,count_asian,aliases\n"
      "a,Alpha University,university,,100,40,30,20,5,\n"
      "b,Beta College,university,,50,10,20,10,5,BC\n");
  const auto store = DemographicStore::ingest(file, Task::University);
  CHECK(store.entities().size() == 2);
  REQUIRE(store.by_id("a") != nullptr);
  CHECK(store.by_id("a")->canonical_name == "Alpha University");
  CHECK(store.by_id("b")->aliases == std::vector<std::string>{"BC"});
}

TEST_CASE("group counts exceeding the total are rejected") {
  const auto dir = testutil::unique_temp_dir("overflow");
  const auto file = testutil::write_file(
      dir / "bad.csv",
      "id,canonical_name,kind,city,total_population,count_white,count_black,"
      "count_hispanic,count_asian,aliases\n"
      "a,Alpha University,university,,100,90,90,0,0,\n");
  CHECK_THROWS_AS(DemographicStore::ingest(file, Task::University),
                  DataError);
}

TEST_CASE("schema violations are rejected") {
  const auto dir = testutil::unique_temp_dir("schema");
  SECTION("negative count") {
    const auto file = testutil::write_file(
        dir / "neg.csv",
        "id,canonical_name,kind,city,total_population,count_white,"
        "count_black,count_hispanic,count_asian,aliases\n"
        "a,Alpha,university,,100,-5,0,0,0,\n");
    CHECK_THROWS_AS(DemographicStore::ingest(file, Task::University),
                    DataError);
  }
  SECTION("duplicate ids") {
    const auto file = testutil::write_file(
        dir / "dup.csv",
        "id,canonical_name,kind,city,total_population,count_white,"
        "count_black,count_hispanic,count_asian,aliases\n"
        "a,Alpha,university,,100,1,1,1,1,\n"
        "a,Beta,university,,100,1,1,1,1,\n");
    CHECK_THROWS_AS(DemographicStore::ingest(file, Task::University),
                    DataError);
  }
  SECTION("duplicate canonical name within a (kind, city) scope") {
    const auto file = testutil::write_file(
        dir / "dupname.csv",
        "id,canonical_name,kind,city,total_population,count_white,"
        "count_black,count_hispanic,count_asian,aliases\n"
        "a,Harlem,neighborhood,New York City,100,1,1,1,1,\n"
        "b,Harlem,neighborhood,New York City,100,1,1,1,1,\n");
    CHECK_THROWS_AS(DemographicStore::ingest(file, Task::Neighborhood),
                    DataError);
  }
  SECTION("same name in different cities is fine") {
    const auto file = testutil::write_file(
        dir / "twocities.csv",
        "id,canonical_name,kind,city,total_population,count_white,"
        "count_black,count_hispanic,count_asian,aliases\n"
        "a,Chinatown,neighborhood,New York City,100,1,1,1,1,\n"
        "b,Chinatown,neighborhood,Chicago,100,1,1,1,1,\n");
    CHECK(DemographicStore::ingest(file, Task::Neighborhood)
              .entities()
              .size() == 2);
  }
  SECTION("wrong kind for the dataset") {
    const auto file = testutil::write_file(
        dir / "kind.csv",
        "id,canonical_name,kind,city,total_population,count_white,"
        "count_black,count_hispanic,count_asian,aliases\n"
        "a,Alpha,neighborhood,Chicago,100,1,1,1,1,\n");
    CHECK_THROWS_AS(DemographicStore::ingest(file, Task::University),
                    DataError);
  }
  SECTION("bad header") {
    const auto file = testutil::write_file(dir / "hdr.csv", "id,name\n");
    CHECK_THROWS_AS(DemographicStore::ingest(file, Task::University),
                    DataError);
  }
}

TEST_CASE("ingest then dump round-trips field by field") {
  const auto store = testutil::shipped_university_store();
  const auto dir = testutil::unique_temp_dir("roundtrip");

  SECTION("via CSV") {
    store.dump_csv(dir / "dump.csv");
    const auto again =
        DemographicStore::ingest(dir / "dump.csv", Task::University);
    REQUIRE(again.entities().size() == store.entities().size());
    for (std::size_t i = 0; i < store.entities().size(); ++i) {
      const auto& a = store.entities()[i];
      const auto& b = again.entities()[i];
      CHECK(a.id == b.id);
      CHECK(a.canonical_name == b.canonical_name);
      CHECK(a.total_population == b.total_population);
      CHECK(a.group_counts == b.group_counts);
      CHECK(a.aliases == b.aliases);
    }
  }
  SECTION("via JSON") {
    store.dump_json(dir / "dump.json");
    const auto again =
        DemographicStore::ingest(dir / "dump.json", Task::University);
    REQUIRE(again.entities().size() == store.entities().size());
    for (std::size_t i = 0; i < store.entities().size(); ++i) {
      const auto& a = store.entities()[i];
      const auto& b = again.entities()[i];
      CHECK(a.id == b.id);
      CHECK(a.canonical_name == b.canonical_name);
      CHECK(a.group_counts == b.group_counts);
    }
  }
}

TEST_CASE("group_share") {
  const auto store = testutil::small_university_store();
  const auto* alpha = store.by_id("t1");
  REQUIRE(alpha);
  SECTION("hand-computed ratios") {
    CHECK(stores::group_share(*alpha, RaceGroup::White) == 0.5);
    CHECK(stores::group_share(*alpha, RaceGroup::Black) == 0.25);
    CHECK(stores::group_share(*alpha, RaceGroup::Hispanic) == 0.15);
    CHECK(stores::group_share(*alpha, RaceGroup::Asian) == 0.05);
  }
  SECTION("share bounds and sum over groups") {
    for (const auto& e : store.entities()) {
      double total = 0.0;
      for (RaceGroup g : kAllRaces) {
        const double s = stores::group_share(e, g);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        total += s;
      }
      CHECK(total <= 1.0 + 1e-12);
    }
  }
  SECTION("missing group count reads as zero") {
    stores::DemographicEntity e;
    e.id = "x";
    e.total_population = 10;
    CHECK(stores::group_share(e, RaceGroup::Asian) == 0.0);
  }
  SECTION("zero population is an error") {
    stores::DemographicEntity e;
    e.id = "zero";
    e.total_population = 0;
    CHECK_THROWS_AS(stores::group_share(e, RaceGroup::White), DataError);
  }
}

TEST_CASE("alias files must reference known canonical names") {
  const auto dir = testutil::unique_temp_dir("alias");
  const auto dataset =
      testutil::write_file(dir / "u.csv", testutil::small_university_csv());
  const auto aliases = testutil::write_file(
      dir / "aliases.json",
      R"({"schema_version":1,"aliases":{"Ghost":"No Such University"}})");
  CHECK_THROWS_AS(
      DemographicStore::ingest(dataset, Task::University, aliases),
      DataError);
}

TEST_CASE("repeated lookups return identical results") {
  const auto store = testutil::shipped_neighborhood_store();
  const auto first = store.in_city(City::Chicago);
  const auto second = store.in_city(City::Chicago);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i)
    CHECK(first[i] == second[i]);
  CHECK(store.by_id("n001") == store.by_id("n001"));
}

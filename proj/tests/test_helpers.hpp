#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>

#include "recaudit/core.hpp"
#include "recaudit/demographic_store.hpp"

namespace testutil {

inline std::filesystem::path unique_temp_dir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("recaudit_" + tag + "_" + std::to_string(::getpid()) +
                    "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path,
                                        const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << content;
  return path;
}

inline std::filesystem::path data_dir() { return RECAUDIT_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return RECAUDIT_FIXTURE_DIR; }

// Four-entity university store with easy hand-checkable shares.
inline std::string small_university_csv() {
  return "id,canonical_name,kind,city,total_population,count_white,"
         "count_black,count_hispanic,count_asian,aliases\n"
         "t1,Alpha University,university,,100,50,25,15,5,AU\n"
         "t2,Beta College,university,,200,20,120,40,10,\n"
         "t3,Gamma Institute,university,,400,100,40,200,40,GI;Gamma\n"
         "t4,Delta State University,university,,1000,600,100,150,100,\n";
}

inline recaudit::stores::DemographicStore small_university_store() {
  const auto dir = unique_temp_dir("store");
  const auto file = write_file(dir / "u.csv", small_university_csv());
  return recaudit::stores::DemographicStore::ingest(
      file, recaudit::Task::University);
}

inline recaudit::stores::DemographicStore shipped_neighborhood_store() {
  return recaudit::stores::DemographicStore::ingest(
      data_dir() / "datasets/neighborhoods.csv",
      recaudit::Task::Neighborhood);
}

inline recaudit::stores::DemographicStore shipped_university_store() {
  return recaudit::stores::DemographicStore::ingest(
      data_dir() / "datasets/universities.csv", recaudit::Task::University,
      data_dir() / "aliases/university_aliases.json");
}

}  // namespace testutil

#include "recaudit/lexicon.hpp"
#include "recaudit/prompt_template.hpp"
#include "recaudit/slot_domains.hpp"

namespace testutil {

inline recaudit::prompts::PromptTemplate shipped_template(
    recaudit::Task task) {
  const auto name = task == recaudit::Task::University
                        ? "templates/university.json"
                        : "templates/neighborhood.json";
  return recaudit::prompts::load_template(data_dir() / name);
}

inline recaudit::prompts::LexiconSet shipped_lexicon() {
  return recaudit::prompts::load_lexicon(data_dir() /
                                         "lexicons/example_lexicon.json");
}

inline recaudit::prompts::SlotDomains shipped_slots() {
  return recaudit::prompts::load_slot_domains(data_dir() /
                                              "slots/default_slots.json");
}

}  // namespace testutil

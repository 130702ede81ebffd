#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "upms/env.hpp"
#include "upms/instance.hpp"
#include "upms/rng.hpp"

namespace upms_test {

// Small randomized instances for property suites.
inline upms::GeneratorConfig tiny_config(std::uint64_t seed) {
  upms::Rng rng(upms::splitmix64(seed));
  upms::GeneratorConfig cfg;
  cfg.job_count = rng.uniform_int(2, 5);
  cfg.machine_count = rng.uniform_int(1, 2);
  cfg.worker_count = rng.uniform_int(2, 4);
  cfg.job_slot_size = 3;
  cfg.processing_time_range = {1, 8};
  cfg.setup_time_range = {0, 3};
  cfg.workforce_range = {1, 2};
  cfg.eligibility_probability = 0.75;
  cfg.compatibility_probability = 0.7;
  cfg.seed = seed;
  return cfg;
}

// Some tiny configs are legitimately unsatisfiable (for example a single
// machine that drew no compatible worker); the generator reports those, so
// deterministically walk seeds until one succeeds.
inline std::pair<upms::ProblemInstance, upms::GeneratorConfig> tiny_instance(
    std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    auto cfg = tiny_config(upms::sub_seed(seed, "tiny", attempt));
    try {
      return {upms::generate(cfg), cfg};
    } catch (const upms::GenerationError&) {
      if (attempt > 50) throw;
    }
  }
}

inline upms::GeneratorConfig small_config(std::uint64_t seed) {
  upms::GeneratorConfig cfg;
  cfg.job_count = 10;
  cfg.machine_count = 3;
  cfg.worker_count = 8;
  cfg.job_slot_size = 5;
  cfg.processing_time_range = {10, 30};
  cfg.setup_time_range = {10, 20};
  cfg.workforce_range = {1, 3};
  cfg.seed = seed;
  return cfg;
}

// Uniformly random action, feasible-biased half the time so walks make
// progress while still exercising invalid branches.
inline upms::Action random_walk_action(upms::SchedulingEnv& env, upms::Rng& rng) {
  const auto mask = env.action_mask();
  if (rng.bernoulli(0.5)) {
    std::vector<int> valid;
    for (int i = 0; i < static_cast<int>(mask.size()); ++i)
      if (mask[i]) valid.push_back(i);
    return {valid[rng.uniform_index(valid.size())]};
  }
  return {rng.uniform_int(0, static_cast<int>(mask.size()) - 1)};
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("upms_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace upms_test

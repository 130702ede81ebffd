#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "upms/env.hpp"
#include "test_helpers.hpp"

using namespace upms;

namespace {

EnvConfig golden_config(int slot = 5) {
  EnvConfig cfg;
  cfg.job_slot_size = slot;
  cfg.seed = 9;
  return cfg;
}

SchedulingEnv golden_env(int slot = 5) {
  return SchedulingEnv(illustrative_instance(), golden_config(slot));
}

}  // namespace

TEST_CASE("reset fills the slot FIFO and zeroes the clock") {
  auto env = golden_env(5);
  const auto& st = env.state();
  CHECK(st.clock == 0);
  CHECK(st.slot == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(st.backlog.empty());
  for (const auto& m : st.machines) {
    CHECK_FALSE(m.busy);
    CHECK_FALSE(m.last_completed.has_value());
    CHECK(m.total_scheduled_time == 0);
  }

  auto env3 = golden_env(3);
  CHECK(env3.state().slot == std::vector<int>{0, 1, 2});
  CHECK(env3.state().backlog == std::deque<int>{3, 4});

  // J < S pads with empties.
  auto env6 = golden_env(6);
  CHECK(env6.state().slot == std::vector<int>{0, 1, 2, 3, 4, -1});
}

TEST_CASE("feasibility on the golden instance at t=0") {
  auto env = golden_env();
  CHECK(env.feasible(2, 0));        // j3 on m1: both workers free and compatible
  CHECK_FALSE(env.feasible(3, 1));  // j4 on m2 needs 2 workers, only w1 compatible
  CHECK_FALSE(env.feasible(0, 1));  // ineligible pair

  env.step(Action::assign(1, 1, 5));  // j2 -> m2
  CHECK_FALSE(env.feasible(1, 1));    // busy machine
}

TEST_CASE("total_time adds the sequence-dependent setup") {
  auto env = golden_env();
  CHECK(env.total_time(1, 1) == 3);  // fresh machine: no setup

  env.step(Action::assign(0, 0, 5));  // j1 -> m1 (pt 2)
  env.step(Action::do_nothing(5, 2));
  REQUIRE(env.state().machines[0].last_completed == 0);
  CHECK(env.total_time(2, 0) == 2);  // pt 1 + setup 1 after j1

  CHECK_THROWS_AS(env.total_time(0, 1), UsageError);  // ineligible
}

TEST_CASE("total_time is zero for pt=0 on a fresh machine") {
  ProblemInstance inst;
  inst.machine_count = 1;
  inst.job_count = 1;
  inst.worker_count = 1;
  inst.processing_time = {0};
  inst.required_workforce = {1};
  inst.setup_time = {5};
  inst.compatibility = {1};
  SchedulingEnv env(inst, golden_config(1));
  CHECK(env.total_time(0, 0) == 0);
}

TEST_CASE("action mask enumerates exactly the feasible pairs") {
  auto env = golden_env(5);
  auto mask = env.action_mask();
  REQUIRE(mask.size() == 11);

  std::set<int> expected_true = {0, 2, 3, 4,   // m1: j1, j3, j4, j5
                                 6, 7, 9,      // m2: j2, j3, j5
                                 10};          // do-nothing
  for (int i = 0; i < 11; ++i) CHECK(static_cast<bool>(mask[i]) == expected_true.count(i));
  CHECK(SchedulingEnv::popcount(mask) == 8);
}

TEST_CASE("mask collapses to do-nothing when nothing is assignable") {
  auto env = golden_env();
  env.step(Action::assign(0, 2, 5));  // j3 -> m1 takes both workers
  auto mask = env.action_mask();
  // m1 busy; m2 idle but starved of workers.
  for (int i = 0; i < 10; ++i) CHECK_FALSE(mask[i]);
  CHECK(mask[10]);

  SECTION("slot entirely empty also masks everything") {
    ProblemInstance inst = illustrative_instance();
    SchedulingEnv small(inst, golden_config(5));
    // Drain all jobs, then the slot is empty while machines run.
    small.step(Action::assign(0, 2, 5));  // j3 -> m1
    small.step(Action::do_nothing(5, 2));
    small.step(Action::assign(1, 1, 5));  // j2 -> m2 takes w1
    small.step(Action::assign(0, 0, 5));  // j1 -> m1 takes w2
    small.step(Action::do_nothing(5, 2)); // both complete at t=4
    small.step(Action::assign(1, 4, 5));  // j5 -> m2 takes w1
    small.step(Action::assign(0, 3, 5));  // j4 -> m1 takes w2
    auto m = small.action_mask();
    for (int i = 0; i < 10; ++i) CHECK_FALSE(m[i]);
    CHECK(m[10]);
  }
}

TEST_CASE("reward ledger: assignment components") {
  auto env = golden_env();

  SECTION("time- and resource-minimal assignment earns +5") {
    auto [rc, v] = env.compute_reward(Action::assign(1, 4, 5));  // j5 -> m2
    CHECK(v == Verdict::Feasible);
    CHECK(rc.base == 1.0);
    CHECK(rc.time_bonus == 2.0);
    CHECK(rc.resource_bonus == 2.0);
    CHECK(rc.total() == 5.0);
  }
  SECTION("non-minimal workforce pays difference/4") {
    auto [rc, v] = env.compute_reward(Action::assign(0, 2, 5));  // j3 -> m1
    CHECK(v == Verdict::Feasible);
    CHECK(rc.time_bonus == 2.0);
    CHECK(rc.resource_penalty == -0.25);
    CHECK(rc.total() == 2.75);
  }
  SECTION("infeasible pair costs -1") {
    auto [rc, v] = env.compute_reward(Action::assign(1, 3, 5));  // j4 -> m2
    CHECK(v == Verdict::Infeasible);
    CHECK(rc.total() == -1.0);
  }
  SECTION("ineligible pair is a null action") {
    auto [rc, v] = env.compute_reward(Action::assign(1, 0, 5));  // j1 -> m2
    CHECK(v == Verdict::Null);
    CHECK(rc.total() == -0.5);
  }
}

TEST_CASE("reward ledger: worked difference example") {
  // One job, two eligible machines with total times 12 and 8, equal
  // workforce: picking the slow machine earns 1 + 2 - (12-8)/4 = +2.
  ProblemInstance inst;
  inst.machine_count = 2;
  inst.job_count = 1;
  inst.worker_count = 2;
  inst.processing_time = {12, 8};
  inst.required_workforce = {1, 1};
  inst.setup_time = {0, 0};
  inst.compatibility = {1, 1, 1, 1};
  SchedulingEnv env(inst, golden_config(1));
  auto [rc, v] = env.compute_reward(Action::assign(0, 0, 1));
  CHECK(v == Verdict::Feasible);
  CHECK(rc.time_penalty == -1.0);
  CHECK(rc.resource_bonus == 2.0);
  CHECK(rc.total() == 2.0);
}

TEST_CASE("reward ledger: do-nothing and corrective penalties") {
  SECTION("do-nothing with viable alternatives costs -0.5, then -10 beyond the threshold") {
    auto env = golden_env();
    std::vector<double> rewards;
    for (int i = 0; i < 4; ++i) rewards.push_back(env.step(Action::do_nothing(5, 2)).reward);
    CHECK(rewards == std::vector<double>{-0.5, -0.5, -0.5, -10.5});
  }
  SECTION("do-nothing with no viable action earns +0.5") {
    auto env = golden_env();
    env.step(Action::assign(0, 2, 5));  // j3 -> m1 starves everything else
    auto out = env.step(Action::do_nothing(5, 2));
    CHECK(out.reward == 0.5);
    CHECK(env.state().clock == 1);
  }
  SECTION("second consecutive empty-slot pick adds -1") {
    auto env = golden_env();
    env.step(Action::assign(0, 2, 5));  // empties slot position 2 (backlog empty)
    REQUIRE(env.state().slot[2] == -1);
    auto first = env.step(Action::assign(0, 2, 5));
    auto second = env.step(Action::assign(1, 2, 5));
    CHECK(first.reward == -0.5);
    CHECK(second.reward == -1.5);
    CHECK(second.info.verdict == Verdict::Null);
  }
  SECTION("a real action resets the inaction counter") {
    auto env = golden_env();
    env.step(Action::do_nothing(5, 2));
    env.step(Action::do_nothing(5, 2));
    env.step(Action::assign(1, 4, 5));  // j5 -> m2
    env.step(Action::do_nothing(5, 2));
    auto out = env.step(Action::do_nothing(5, 2));
    CHECK(out.reward == -0.5);  // counter restarted, no malus yet
  }
}

TEST_CASE("step applies assignments and refills the slot from the backlog") {
  auto env = golden_env(3);  // slot [j1 j2 j3], backlog [j4 j5]
  auto out = env.step(Action::assign(1, 1, 3));  // j2 -> m2
  CHECK(out.info.verdict == Verdict::Feasible);

  const auto& st = env.state();
  CHECK(st.slot == std::vector<int>{0, 3, 2});
  CHECK(st.backlog == std::deque<int>{4});
  const auto& m2 = st.machines[1];
  CHECK(m2.busy);
  CHECK(m2.current_job == 1);
  CHECK(m2.occupancy_end == 3);
  CHECK(m2.total_scheduled_time == 3);
  CHECK(m2.assigned_workers == std::vector<int>{0});  // only w1 operates m2
  CHECK_FALSE(st.worker_free[0]);
  CHECK(st.worker_free[1]);
  REQUIRE(st.schedule.assignments.size() == 1);
  CHECK(st.schedule.assignments[0] ==
        Assignment{1, 1, 0, 0, 3, {0}});
}

TEST_CASE("do-nothing advances the clock to the next completion") {
  auto env = golden_env();
  env.step(Action::assign(1, 1, 5));  // j2 -> m2 until t=3
  auto out = env.step(Action::do_nothing(5, 2));
  const auto& st = env.state();
  CHECK(st.clock == 3);
  CHECK(st.worker_free[0]);
  CHECK_FALSE(st.machines[1].busy);
  CHECK(st.machines[1].last_completed == 1);
  CHECK(st.finished[1]);
  CHECK_FALSE(out.terminated);
}

TEST_CASE("infeasible and null actions leave the state unchanged") {
  auto env = golden_env();
  const auto before = env.state();
  auto out = env.step(Action::assign(1, 3, 5));  // j4 -> m2: infeasible
  CHECK(out.reward == -1.0);
  auto after = env.state();
  CHECK(after.decision_step == before.decision_step + 1);
  auto normalized = after;
  normalized.decision_step = before.decision_step;
  CHECK(normalized == before);
}

TEST_CASE("episodes terminate once every job finished and refuse further steps") {
  auto env = golden_env();
  // Deterministic playout: greedy over the mask.
  int guard = 0;
  while (!env.done()) {
    REQUIRE(++guard < 200);
    auto mask = env.action_mask();
    int pick = static_cast<int>(mask.size()) - 1;
    for (int i = 0; i < static_cast<int>(mask.size()) - 1; ++i)
      if (mask[i]) {
        pick = i;
        break;
      }
    env.step({pick});
  }
  CHECK(env.terminated());
  CHECK_FALSE(env.truncated());
  CHECK(env.state().finished_count == 5);
  CHECK(env.state().schedule.assignments.size() == 5);
  CHECK_THROWS_AS(env.step(Action::do_nothing(5, 2)), UsageError);
}

TEST_CASE("episodes truncate at the decision-step limit") {
  auto cfg = golden_config();
  cfg.max_decision_steps = 3;
  SchedulingEnv env(illustrative_instance(), cfg);
  env.step(Action::do_nothing(5, 2));
  env.step(Action::do_nothing(5, 2));
  auto out = env.step(Action::do_nothing(5, 2));
  CHECK(out.truncated);
  CHECK_FALSE(out.terminated);
}

TEST_CASE("observation layout and normalization") {
  auto env = golden_env();
  CHECK(env.time_scale() == 4.0);  // max pt 3 + max setup 1
  auto obs = env.observe();
  REQUIRE(obs.size() == 50);

  auto at = [&obs](int m, int s, int k) { return obs[(m * 5 + s) * 5 + k]; };
  for (int m = 0; m < 2; ++m)
    for (int s = 0; s < 5; ++s) CHECK(at(m, s, 0) == 0.0);  // RT zero at reset
  CHECK(at(1, 0, 1) == 0.5);   // AR(m2) = 1 of 2 workers
  CHECK(at(0, 0, 1) == 1.0);   // AR(m1) = 2 of 2
  CHECK(at(0, 2, 3) == 0.25);  // total_time(j3,m1)=1 over time_scale 4
  CHECK(at(0, 2, 4) == 1.0);   // r(j3,m1)=2 of 2 workers
  CHECK(at(1, 0, 3) == 0.0);   // ineligible pair contributes zeros
  CHECK(at(1, 0, 4) == 0.0);

  SECTION("busy machine reports remaining time and scheduled time") {
    env.step(Action::assign(1, 1, 5));  // j2 -> m2 until 3
    auto o2 = env.observe();
    CHECK(o2[(1 * 5 + 0) * 5 + 0] == 0.75);  // RT = 3 / 4
    CHECK(o2[(1 * 5 + 0) * 5 + 2] == 0.75);  // T(m2) = 3 / 4
    CHECK(o2[(1 * 5 + 0) * 5 + 1] == 0.0);   // w1 captured
  }
  SECTION("empty slot position contributes zero job features") {
    auto env6 = golden_env(6);
    auto o = env6.observe();
    CHECK(o[(0 * 6 + 5) * 5 + 3] == 0.0);
    CHECK(o[(0 * 6 + 5) * 5 + 4] == 0.0);
  }
}

TEST_CASE("trajectories are deterministic given seed") {
  auto run = [](std::uint64_t seed) {
    auto cfg = golden_config();
    cfg.seed = seed;
    SchedulingEnv env(illustrative_instance(), cfg);
    Rng rng(seed + 77);
    std::vector<double> rewards;
    while (!env.done()) {
      auto a = upms_test::random_walk_action(env, rng);
      rewards.push_back(env.step(a).reward);
    }
    return std::pair(rewards, env.state());
  };
  auto [r1, s1] = run(5);
  auto [r2, s2] = run(5);
  CHECK(r1 == r2);
  CHECK(s1 == s2);
}

TEST_CASE("conservation and mask soundness over random walks") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto [inst, gcfg] = upms_test::tiny_instance(seed);
    EnvConfig cfg;
    cfg.job_slot_size = 3;
    cfg.seed = seed;
    SchedulingEnv env(inst, cfg);
    Rng rng(seed * 31 + 1);

    long long prev_clock = 0;
    while (!env.done()) {
      auto mask = env.action_mask();
      auto action = upms_test::random_walk_action(env, rng);
      const bool masked_true = mask[action.index] != 0;
      auto out = env.step(action);

      // Mask soundness.
      const bool is_assign = action.index < static_cast<int>(mask.size()) - 1;
      if (is_assign && masked_true) CHECK(out.info.verdict == Verdict::Feasible);
      if (is_assign && !masked_true)
        CHECK((out.info.verdict == Verdict::Infeasible || out.info.verdict == Verdict::Null));

      const auto& st = env.state();
      CHECK(st.clock >= prev_clock);
      prev_clock = st.clock;

      // Job partition: slot + backlog + in-process + finished covers each job once.
      std::vector<int> where(inst.job_count, 0);
      for (int j : st.slot)
        if (j >= 0) where[j] += 1;
      for (int j : st.backlog) where[j] += 1;
      for (const auto& m : st.machines)
        if (m.busy) where[m.current_job] += 1;
      for (int j = 0; j < inst.job_count; ++j) where[j] += st.finished[j];
      for (int j = 0; j < inst.job_count; ++j) CHECK(where[j] == 1);

      // Worker conservation.
      std::vector<int> uses(inst.worker_count, 0);
      for (int m = 0; m < inst.machine_count; ++m) {
        const auto& ms = st.machines[m];
        if (!ms.busy) {
          CHECK(ms.assigned_workers.empty());
          continue;
        }
        CHECK(static_cast<int>(ms.assigned_workers.size()) ==
              *inst.workforce(ms.current_job, m));
        for (int w : ms.assigned_workers) {
          uses[w] += 1;
          CHECK(inst.can_operate(w, m));
        }
      }
      for (int w = 0; w < inst.worker_count; ++w)
        CHECK(st.worker_free[w] == (uses[w] == 0 ? 1 : 0));
    }
    if (env.terminated())
      CHECK(env.state().schedule.assignments.size() ==
            static_cast<std::size_t>(inst.job_count));
  }
}

TEST_CASE("a simultaneously time- and resource-minimal machine maximizes the reward") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    auto [inst, gcfg] = upms_test::tiny_instance(seed);
    EnvConfig cfg;
    cfg.job_slot_size = 3;
    cfg.seed = seed;
    SchedulingEnv env(inst, cfg);
    Rng rng(seed);
    for (int step = 0; step < 30 && !env.done(); ++step) {
      for (int s = 0; s < env.slot_size(); ++s) {
        const int job = env.state().slot[s];
        if (job < 0) continue;
        long long best_tt = std::numeric_limits<long long>::max();
        int best_r = std::numeric_limits<int>::max();
        for (int m = 0; m < inst.machine_count; ++m) {
          if (!inst.eligible(job, m)) continue;
          best_tt = std::min(best_tt, env.total_time(job, m));
          best_r = std::min(best_r, *inst.workforce(job, m));
        }
        double best_reward = -1e18;
        double ideal_reward = -1e18;
        for (int m = 0; m < inst.machine_count; ++m) {
          if (!env.feasible(job, m)) continue;
          auto rc = env.feasible_components(job, m);
          best_reward = std::max(best_reward, rc.total());
          if (env.total_time(job, m) == best_tt && *inst.workforce(job, m) == best_r)
            ideal_reward = std::max(ideal_reward, rc.total());
        }
        if (ideal_reward > -1e18) CHECK(ideal_reward == best_reward);
      }
      env.step(upms_test::random_walk_action(env, rng));
    }
  }
}

TEST_CASE("incremental metric accumulators match the schedule record") {
  for (std::uint64_t seed = 300; seed < 310; ++seed) {
    auto [inst, gcfg] = upms_test::tiny_instance(seed);
    EnvConfig cfg;
    cfg.job_slot_size = 3;
    cfg.seed = seed;
    SchedulingEnv env(inst, cfg);
    Rng rng(seed);
    while (!env.done()) env.step(upms_test::random_walk_action(env, rng));
    const auto& st = env.state();
    CHECK(st.utilization_accum == utilization(st.schedule));
    CHECK(st.latest_completion == makespan(st.schedule));
    CHECK(st.performed_accum == performed(st.schedule));
    if (env.terminated()) CHECK(st.clock == makespan(st.schedule));
  }
}

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "upms/errors.hpp"
#include "upms/instance.hpp"
#include "upms/rng.hpp"
#include "upms/schedule.hpp"

namespace upms {

enum class WorkerAllocation {
  Random,  // uniform over free compatible workers (single-agent default)
  Greedy,  // least-flexible workers first (multi-agent default)
};

struct EnvConfig {
  int job_slot_size = 10;
  int max_decision_steps = 0;   // 0: defaults to 50 * job_count
  int inaction_threshold = 3;   // consecutive do-nothing choices before the -10 malus
  double time_scale = 0.0;      // 0: derived as max processing + max setup of the instance
  WorkerAllocation allocation = WorkerAllocation::Random;
  std::uint64_t seed = 0;
};

// Action index layout: m*S + s selects slot s for machine m; index S*M is
// do-nothing.
struct Action {
  int index = 0;

  static Action do_nothing(int slot_size, int machine_count) {
    return {slot_size * machine_count};
  }
  static Action assign(int machine, int slot, int slot_size) {
    return {machine * slot_size + slot};
  }
  bool is_do_nothing(int slot_size, int machine_count) const {
    return index == slot_size * machine_count;
  }
  int machine(int slot_size) const { return index / slot_size; }
  int slot(int slot_size) const { return index % slot_size; }
};

enum class Verdict { DoNothing, Feasible, Infeasible, Null };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::DoNothing: return "do_nothing";
    case Verdict::Feasible: return "feasible";
    case Verdict::Infeasible: return "infeasible";
    case Verdict::Null: return "null";
  }
  return "?";
}

struct RewardComponents {
  double base = 0;
  double time_bonus = 0;
  double resource_bonus = 0;
  double time_penalty = 0;
  double resource_penalty = 0;
  double inaction_malus = 0;
  double empty_slot_malus = 0;
  double conflict_malus = 0;

  double total() const {
    return base + time_bonus + resource_bonus + time_penalty + resource_penalty +
           inaction_malus + empty_slot_malus + conflict_malus;
  }
};

struct MachineStatus {
  bool busy = false;
  int current_job = -1;
  long long occupancy_end = 0;
  std::vector<int> assigned_workers;
  std::optional<int> last_completed;
  long long total_scheduled_time = 0;

  bool operator==(const MachineStatus&) const = default;
};

struct EnvState {
  long long clock = 0;
  std::vector<MachineStatus> machines;
  std::vector<std::uint8_t> worker_free;
  std::vector<int> slot;  // -1 marks an empty position
  std::deque<int> backlog;
  std::vector<std::uint8_t> finished;
  int finished_count = 0;
  int consecutive_do_nothing = 0;
  int consecutive_empty_slot = 0;
  int decision_step = 0;
  ScheduleRecord schedule;
  // Metrics accumulated as assignments happen; must stay equal to the values
  // recomputed from `schedule`.
  long long utilization_accum = 0;
  long long latest_completion = 0;
  int performed_accum = 0;

  bool operator==(const EnvState&) const = default;
};

using ObservationVector = std::vector<double>;
using ActionMask = std::vector<std::uint8_t>;

struct StepInfo {
  Verdict verdict = Verdict::DoNothing;
  int machine = -1;  // decoded pair; -1 for do-nothing
  int slot = -1;
  int job = -1;  // job in the selected slot, -1 if empty / do-nothing
  RewardComponents components;
  int mask_popcount = 0;  // of the mask the policy acted on
};

struct StepOutcome {
  ObservationVector observation;
  ActionMask mask;
  double reward = 0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

// Single-agent decision environment over a fixed job-slot. Event-driven: the
// clock only moves on do-nothing, jumping to the next machine completion.
class SchedulingEnv {
 public:
  SchedulingEnv(ProblemInstance instance, EnvConfig config)
      : inst_(std::move(instance)), cfg_(config) {
    auto report = validate(inst_);
    if (!report.ok())
      throw ValidationError("invalid instance:\n" + report.to_string());
    if (cfg_.job_slot_size <= 0 || cfg_.inaction_threshold <= 0)
      throw ConfigError("job_slot_size and inaction_threshold must be positive");
    max_steps_ = cfg_.max_decision_steps > 0 ? cfg_.max_decision_steps
                                             : 50 * inst_.job_count;
    time_scale_ = cfg_.time_scale > 0
                      ? cfg_.time_scale
                      : static_cast<double>(inst_.max_processing_time() +
                                            inst_.max_setup_time());
    if (time_scale_ <= 0) time_scale_ = 1.0;
    reset();
  }

  const ProblemInstance& instance() const { return inst_; }
  const EnvConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }
  int slot_size() const { return cfg_.job_slot_size; }
  int action_space_size() const { return cfg_.job_slot_size * inst_.machine_count + 1; }
  int observation_size() const { return 5 * cfg_.job_slot_size * inst_.machine_count; }
  int max_decision_steps() const { return max_steps_; }
  double time_scale() const { return time_scale_; }
  bool terminated() const { return terminated_; }
  bool truncated() const { return truncated_; }
  bool done() const { return terminated_ || truncated_; }
  Rng& rng() { return rng_; }

  StepOutcome reset() {
    state_ = EnvState{};
    state_.machines.assign(inst_.machine_count, MachineStatus{});
    state_.worker_free.assign(inst_.worker_count, 1);
    state_.slot.assign(cfg_.job_slot_size, -1);
    state_.finished.assign(inst_.job_count, 0);
    for (int j = 0; j < inst_.job_count; ++j) {
      if (j < cfg_.job_slot_size)
        state_.slot[j] = j;
      else
        state_.backlog.push_back(j);
    }
    rng_ = Rng(cfg_.seed);
    terminated_ = false;
    truncated_ = false;

    StepOutcome out;
    out.observation = observe();
    out.mask = action_mask();
    out.info.mask_popcount = popcount(out.mask);
    return out;
  }

  // Feasibility of assigning the given job to the given machine right now.
  bool feasible(int job, int machine) const {
    if (job < 0 || machine < 0 || machine >= inst_.machine_count) return false;
    const auto& ms = state_.machines[machine];
    if (ms.busy) return false;
    if (!inst_.eligible(job, machine)) return false;
    return free_compatible_count(machine) >= *inst_.workforce(job, machine);
  }

  // The job a setup transition would come from: the running job while busy,
  // the last completed job otherwise.
  int last_job_on(int machine) const {
    const auto& ms = state_.machines[machine];
    if (ms.busy) return ms.current_job;
    return ms.last_completed.value_or(-1);
  }

  // Setup + processing for the pair; the setup term is 0 on a machine that
  // has never run a job.
  long long total_time(int job, int machine) const {
    if (!inst_.eligible(job, machine))
      throw UsageError("total_time: job " + std::to_string(job) +
                       " is not eligible on machine " + std::to_string(machine));
    const int last = last_job_on(machine);
    const int setup = last >= 0 ? inst_.st(last, job, machine) : 0;
    return setup + *inst_.pt(job, machine);
  }

  ActionMask action_mask() const {
    ActionMask mask(action_space_size(), 0);
    const int S = cfg_.job_slot_size;
    for (int m = 0; m < inst_.machine_count; ++m)
      for (int s = 0; s < S; ++s) {
        const int job = state_.slot[s];
        if (job >= 0 && feasible(job, m)) mask[m * S + s] = 1;
      }
    mask.back() = 1;  // do-nothing is always available
    return mask;
  }

  bool any_feasible_assignment() const {
    for (int m = 0; m < inst_.machine_count; ++m)
      if (any_feasible_for_machine(m)) return true;
    return false;
  }

  bool any_feasible_for_machine(int machine) const {
    for (int s = 0; s < cfg_.job_slot_size; ++s) {
      const int job = state_.slot[s];
      if (job >= 0 && feasible(job, machine)) return true;
    }
    return false;
  }

  Verdict classify(Action a) const {
    if (a.index < 0 || a.index >= action_space_size())
      throw UsageError("action index out of range: " + std::to_string(a.index));
    if (a.is_do_nothing(cfg_.job_slot_size, inst_.machine_count)) return Verdict::DoNothing;
    const int m = a.machine(cfg_.job_slot_size);
    const int s = a.slot(cfg_.job_slot_size);
    const int job = state_.slot[s];
    if (job < 0 || !inst_.eligible(job, m)) return Verdict::Null;
    return feasible(job, m) ? Verdict::Feasible : Verdict::Infeasible;
  }

  // Reward ledger for taking `a` in the current state; pure, does not mutate.
  std::pair<RewardComponents, Verdict> compute_reward(Action a) const {
    RewardComponents rc;
    const Verdict v = classify(a);
    switch (v) {
      case Verdict::DoNothing: {
        const bool alternatives = any_feasible_assignment();
        rc.base = alternatives ? -0.5 : 0.5;
        if (alternatives &&
            state_.consecutive_do_nothing + 1 > cfg_.inaction_threshold)
          rc.inaction_malus = -10.0;
        break;
      }
      case Verdict::Null: {
        rc.base = -0.5;
        if (state_.consecutive_empty_slot + 1 > 1) rc.empty_slot_malus = -1.0;
        break;
      }
      case Verdict::Infeasible: {
        rc.base = -1.0;
        break;
      }
      case Verdict::Feasible: {
        const int m = a.machine(cfg_.job_slot_size);
        const int job = state_.slot[a.slot(cfg_.job_slot_size)];
        rc = feasible_components(job, m);
        break;
      }
    }
    return {rc, v};
  }

  // The assignment part of the ledger: +1 for a feasible pair, +2 bonuses for
  // picking the machine with the minimum total time / minimum workforce among
  // all machines eligible for the job (busy ones included, judged by their
  // current last job), -difference/4 otherwise.
  RewardComponents feasible_components(int job, int machine) const {
    RewardComponents rc;
    rc.base = 1.0;
    long long min_tt = std::numeric_limits<long long>::max();
    int min_r = std::numeric_limits<int>::max();
    for (int m = 0; m < inst_.machine_count; ++m) {
      if (!inst_.eligible(job, m)) continue;
      min_tt = std::min(min_tt, total_time(job, m));
      min_r = std::min(min_r, *inst_.workforce(job, m));
    }
    const long long tt = total_time(job, machine);
    const int r = *inst_.workforce(job, machine);
    if (tt == min_tt)
      rc.time_bonus = 2.0;
    else
      rc.time_penalty = -static_cast<double>(tt - min_tt) / 4.0;
    if (r == min_r)
      rc.resource_bonus = 2.0;
    else
      rc.resource_penalty = -static_cast<double>(r - min_r) / 4.0;
    return rc;
  }

  StepOutcome step(Action a) {
    if (done()) throw UsageError("step called on a finished episode");

    ActionMask pre_mask = action_mask();
    auto [rc, verdict] = compute_reward(a);

    StepInfo info;
    info.verdict = verdict;
    info.components = rc;
    info.mask_popcount = popcount(pre_mask);
    if (!a.is_do_nothing(cfg_.job_slot_size, inst_.machine_count)) {
      info.machine = a.machine(cfg_.job_slot_size);
      info.slot = a.slot(cfg_.job_slot_size);
      info.job = state_.slot[info.slot];
    }

    switch (verdict) {
      case Verdict::DoNothing: {
        const bool alternatives = any_feasible_assignment();
        state_.consecutive_do_nothing =
            alternatives ? state_.consecutive_do_nothing + 1 : 0;
        state_.consecutive_empty_slot = 0;
        advance_to_next_completion();
        break;
      }
      case Verdict::Null: {
        state_.consecutive_empty_slot += 1;
        state_.consecutive_do_nothing = 0;
        break;
      }
      case Verdict::Infeasible: {
        state_.consecutive_do_nothing = 0;
        state_.consecutive_empty_slot = 0;
        break;
      }
      case Verdict::Feasible: {
        state_.consecutive_do_nothing = 0;
        state_.consecutive_empty_slot = 0;
        apply_assignment(info.job, info.slot, info.machine,
                         pick_workers(info.job, info.machine));
        break;
      }
    }

    state_.decision_step += 1;
    terminated_ = state_.finished_count == inst_.job_count;
    truncated_ = !terminated_ && state_.decision_step >= max_steps_;

    StepOutcome out;
    out.observation = observe();
    out.mask = action_mask();
    out.reward = rc.total();
    out.terminated = terminated_;
    out.truncated = truncated_;
    out.info = info;
    return out;
  }

  ObservationVector observe() const {
    ObservationVector obs(static_cast<std::size_t>(observation_size()), 0.0);
    const int S = cfg_.job_slot_size;
    for (int m = 0; m < inst_.machine_count; ++m) {
      const auto& ms = state_.machines[m];
      const double rt =
          ms.busy ? static_cast<double>(std::max<long long>(ms.occupancy_end - state_.clock, 0))
                  : 0.0;
      const double ar = free_compatible_count(m);
      const double ts = static_cast<double>(ms.total_scheduled_time);
      for (int s = 0; s < S; ++s) {
        double job_tt = 0.0, job_r = 0.0;
        const int job = state_.slot[s];
        if (job >= 0 && inst_.eligible(job, m)) {
          job_tt = static_cast<double>(total_time(job, m));
          job_r = static_cast<double>(*inst_.workforce(job, m));
        }
        double* f = &obs[(static_cast<std::size_t>(m) * S + s) * 5];
        f[0] = rt / time_scale_;
        f[1] = ar / inst_.worker_count;
        f[2] = ts / time_scale_;
        f[3] = job_tt / time_scale_;
        f[4] = job_r / inst_.worker_count;
      }
    }
    return obs;
  }

  // --- low-level pieces shared with the multi-agent coordinator ---

  int free_compatible_count(int machine) const {
    int n = 0;
    for (int w = 0; w < inst_.worker_count; ++w)
      if (state_.worker_free[w] && inst_.can_operate(w, machine)) ++n;
    return n;
  }

  std::vector<int> free_compatible_workers(int machine) const {
    std::vector<int> ws;
    for (int w = 0; w < inst_.worker_count; ++w)
      if (state_.worker_free[w] && inst_.can_operate(w, machine)) ws.push_back(w);
    return ws;
  }

  // Worker selection per the configured allocation rule.
  std::vector<int> pick_workers(int job, int machine) {
    if (cfg_.allocation == WorkerAllocation::Greedy) return pick_workers_greedy(job, machine);
    const int need = *inst_.workforce(job, machine);
    auto pool = free_compatible_workers(machine);
    if (static_cast<int>(pool.size()) < need)
      throw UsageError("insufficient free compatible workers for job " +
                       std::to_string(job));
    auto chosen = rng_.sample_without_replacement(pool, static_cast<std::size_t>(need));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  // Least flexible workers first (fewest operable machines), ties by id.
  std::vector<int> pick_workers_greedy(int job, int machine) const {
    const int need = *inst_.workforce(job, machine);
    auto pool = free_compatible_workers(machine);
    if (static_cast<int>(pool.size()) < need)
      throw UsageError("insufficient free compatible workers for job " +
                       std::to_string(job));
    std::sort(pool.begin(), pool.end(), [this](int a, int b) {
      const int fa = inst_.worker_flexibility(a), fb = inst_.worker_flexibility(b);
      return fa != fb ? fa < fb : a < b;
    });
    pool.resize(static_cast<std::size_t>(need));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  // Occupies the machine and workers, records the assignment and refills the
  // slot position from the backlog. Caller guarantees feasibility.
  void apply_assignment(int job, int slot_pos, int machine, std::vector<int> workers) {
    auto& ms = state_.machines[machine];
    const int last = last_job_on(machine);
    const int setup = last >= 0 ? inst_.st(last, job, machine) : 0;
    const int processing = *inst_.pt(job, machine);
    const long long tt = setup + processing;

    ms.busy = true;
    ms.current_job = job;
    ms.occupancy_end = state_.clock + tt;
    ms.assigned_workers = workers;
    ms.total_scheduled_time += tt;
    state_.utilization_accum += static_cast<long long>(workers.size()) * tt;
    state_.latest_completion = std::max(state_.latest_completion, ms.occupancy_end);
    state_.performed_accum += 1;
    for (int w : workers) state_.worker_free[w] = 0;

    state_.slot[slot_pos] = -1;
    if (!state_.backlog.empty()) {
      state_.slot[slot_pos] = state_.backlog.front();
      state_.backlog.pop_front();
    }
    state_.schedule.assignments.push_back(
        {job, machine, state_.clock, setup, processing, std::move(workers)});
  }

  // Jump the clock to the earliest occupancy end; machines completing there
  // release their workers and become idle. No busy machine: the clock stays.
  void advance_to_next_completion() {
    long long next = std::numeric_limits<long long>::max();
    for (const auto& ms : state_.machines)
      if (ms.busy) next = std::min(next, ms.occupancy_end);
    if (next == std::numeric_limits<long long>::max()) return;
    state_.clock = next;
    for (auto& ms : state_.machines) {
      if (!ms.busy || ms.occupancy_end != next) continue;
      for (int w : ms.assigned_workers) state_.worker_free[w] = 1;
      ms.last_completed = ms.current_job;
      state_.finished[ms.current_job] = 1;
      state_.finished_count += 1;
      ms.busy = false;
      ms.current_job = -1;
      ms.assigned_workers.clear();
    }
  }

  void bump_decision_step() {
    state_.decision_step += 1;
    terminated_ = state_.finished_count == inst_.job_count;
    truncated_ = !terminated_ && state_.decision_step >= max_steps_;
  }

  static int popcount(const ActionMask& mask) {
    int n = 0;
    for (auto b : mask) n += b != 0;
    return n;
  }

  // Coordinator-only access: the multi-agent joint step owns the state while
  // it resolves claims.
  EnvState& mutable_state() { return state_; }

 private:
  ProblemInstance inst_;
  EnvConfig cfg_;
  EnvState state_;
  Rng rng_;
  int max_steps_ = 0;
  double time_scale_ = 1.0;
  bool terminated_ = false;
  bool truncated_ = false;
};

}  // namespace upms

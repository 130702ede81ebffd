#pragma once

#include <algorithm>
#include <vector>

#include "upms/env.hpp"

namespace upms {

struct ConflictEntry {
  int job = -1;
  int winner = -1;  // machine id; -1 when no claimant was feasible
  std::vector<int> claimants;
};

struct ConflictReport {
  std::vector<ConflictEntry> contested;

  int involved_agents() const {
    int n = 0;
    for (const auto& e : contested) n += static_cast<int>(e.claimants.size());
    return n;
  }
};

struct AgentOutcome {
  int action_index = 0;  // in [0, S]; S is the agent's do-nothing
  Verdict verdict = Verdict::DoNothing;
  int job = -1;  // job targeted at the pre-step slot, -1 otherwise
  bool in_conflict = false;
  bool won_conflict = false;
  double reward = 0;
  RewardComponents components;
};

struct JointStepOutcome {
  std::vector<AgentOutcome> agents;
  ConflictReport conflicts;
  ObservationVector global_observation;
  bool terminated = false;
  bool truncated = false;

  double reward_sum() const {
    double r = 0;
    for (const auto& a : agents) r += a.reward;
    return r;
  }
};

// Per-machine agent decomposition over the single-agent environment. Each
// agent picks one of its machine's slot positions (or do-nothing); claims are
// resolved against the pre-step slot, applied sequentially in machine order,
// and overlapping claims cost every involved agent a -1 malus.
class MultiAgentEnv {
 public:
  MultiAgentEnv(ProblemInstance instance, EnvConfig config)
      : env_(std::move(instance), with_greedy_allocation(config)) {
    reset_counters();
  }

  SchedulingEnv& env() { return env_; }
  const SchedulingEnv& env() const { return env_; }
  const ProblemInstance& instance() const { return env_.instance(); }
  const EnvState& state() const { return env_.state(); }
  int agent_count() const { return instance().machine_count; }
  int slot_size() const { return env_.slot_size(); }
  int agent_action_space_size() const { return slot_size() + 1; }
  int agent_observation_size() const { return 5 * slot_size(); }
  bool terminated() const { return env_.terminated(); }
  bool truncated() const { return env_.truncated(); }
  bool done() const { return env_.done(); }

  JointStepOutcome reset() {
    env_.reset();
    reset_counters();
    JointStepOutcome out;
    out.global_observation = env_.observe();
    return out;
  }

  // Global observation shares the single-agent layout; an agent's view is the
  // contiguous block for its machine.
  ObservationVector global_observation() const { return env_.observe(); }

  ObservationVector agent_observation(int machine) const {
    const auto global = env_.observe();
    const std::size_t n = static_cast<std::size_t>(agent_observation_size());
    const std::size_t off = static_cast<std::size_t>(machine) * n;
    return ObservationVector(global.begin() + off, global.begin() + off + n);
  }

  ActionMask per_agent_mask(int machine) const {
    ActionMask mask(static_cast<std::size_t>(agent_action_space_size()), 0);
    for (int s = 0; s < slot_size(); ++s) {
      const int job = state().slot[s];
      if (job >= 0 && env_.feasible(job, machine)) mask[s] = 1;
    }
    mask.back() = 1;
    return mask;
  }

  // Exactly required_workforce free compatible workers, least flexible first.
  std::vector<int> allocate_workers_greedy(int job, int machine) const {
    return env_.pick_workers_greedy(job, machine);
  }

  JointStepOutcome joint_step(const std::vector<int>& actions) {
    if (done()) throw UsageError("joint_step called on a finished episode");
    const int M = agent_count();
    const int S = slot_size();
    if (static_cast<int>(actions.size()) != M)
      throw UsageError("joint action size must equal machine count");

    // Phase 1: bind every claim to the pre-step slot contents and find jobs
    // targeted by more than one agent.
    const std::vector<int> pre_slot = state().slot;
    std::vector<int> claimed_job(M, -1);
    std::vector<int> claim_count(instance().job_count, 0);
    for (int m = 0; m < M; ++m) {
      const int a = actions[m];
      if (a < 0 || a > S) throw UsageError("agent action index out of range");
      if (a < S && pre_slot[a] >= 0) {
        claimed_job[m] = pre_slot[a];
        claim_count[pre_slot[a]] += 1;
      }
    }

    JointStepOutcome out;
    out.agents.resize(M);
    std::vector<int> winner_of(instance().job_count, -1);
    const bool global_alternatives = env_.any_feasible_assignment();
    bool any_assignment = false;
    bool any_null = false;

    // Phase 2: apply in machine-index order, re-evaluating feasibility so
    // worker exhaustion from earlier agents is visible to later ones.
    for (int m = 0; m < M; ++m) {
      AgentOutcome& ao = out.agents[m];
      ao.action_index = actions[m];
      ao.job = claimed_job[m];
      RewardComponents rc;

      if (actions[m] == S) {  // agent's do-nothing
        ao.verdict = Verdict::DoNothing;
        const bool alternatives = env_.any_feasible_for_machine(m);
        rc.base = alternatives ? -0.5 : 0.5;
        if (alternatives) {
          dn_counter_[m] += 1;
          if (dn_counter_[m] > env_.config().inaction_threshold) rc.inaction_malus = -10.0;
        } else {
          dn_counter_[m] = 0;
        }
        null_counter_[m] = 0;
      } else if (ao.job < 0) {  // empty pre-step slot
        ao.verdict = Verdict::Null;
        rc.base = -0.5;
        null_counter_[m] += 1;
        if (null_counter_[m] > 1) rc.empty_slot_malus = -1.0;
        dn_counter_[m] = 0;
        any_null = true;
      } else {
        const int job = ao.job;
        const bool contested = claim_count[job] >= 2;
        ao.in_conflict = contested;
        if (contested) rc.conflict_malus = -1.0;

        if (winner_of[job] >= 0) {
          // Lost to a lower-index machine: treated as a null action.
          ao.verdict = Verdict::Null;
          rc.base = -0.5;
          dn_counter_[m] = 0;
          null_counter_[m] = 0;
        } else if (!instance().eligible(job, m)) {
          ao.verdict = Verdict::Null;
          rc.base = -0.5;
          null_counter_[m] += 1;
          if (null_counter_[m] > 1) rc.empty_slot_malus = -1.0;
          dn_counter_[m] = 0;
          any_null = true;
        } else if (env_.feasible(job, m)) {
          ao.verdict = Verdict::Feasible;
          ao.won_conflict = contested;
          RewardComponents fc = env_.feasible_components(job, m);
          fc.conflict_malus = rc.conflict_malus;
          rc = fc;
          const int slot_pos =
              static_cast<int>(std::find(state().slot.begin(), state().slot.end(), job) -
                               state().slot.begin());
          env_.apply_assignment(job, slot_pos, m, env_.pick_workers_greedy(job, m));
          winner_of[job] = m;
          any_assignment = true;
          dn_counter_[m] = 0;
          null_counter_[m] = 0;
        } else {
          ao.verdict = Verdict::Infeasible;
          rc.base = -1.0;
          dn_counter_[m] = 0;
          null_counter_[m] = 0;
        }
      }
      ao.components = rc;
      ao.reward = rc.total();
    }

    for (int j = 0; j < instance().job_count; ++j) {
      if (claim_count[j] < 2) continue;
      ConflictEntry e;
      e.job = j;
      e.winner = winner_of[j];
      for (int m = 0; m < M; ++m)
        if (claimed_job[m] == j) e.claimants.push_back(m);
      out.conflicts.contested.push_back(std::move(e));
    }

    // Phase 3: with no assignment this step the joint action behaves like a
    // single-agent do-nothing.
    if (!any_assignment) env_.advance_to_next_completion();

    // Keep the shared counters meaningful for state-equivalence with the
    // single-agent step.
    auto& st = mutable_state();
    if (any_assignment) {
      st.consecutive_do_nothing = 0;
      st.consecutive_empty_slot = 0;
    } else {
      st.consecutive_do_nothing =
          global_alternatives ? st.consecutive_do_nothing + 1 : 0;
      st.consecutive_empty_slot = any_null ? st.consecutive_empty_slot + 1 : 0;
    }

    env_.bump_decision_step();
    out.terminated = env_.terminated();
    out.truncated = env_.truncated();
    out.global_observation = env_.observe();
    return out;
  }

 private:
  static EnvConfig with_greedy_allocation(EnvConfig c) {
    c.allocation = WorkerAllocation::Greedy;
    return c;
  }

  EnvState& mutable_state() { return env_.mutable_state(); }

  void reset_counters() {
    dn_counter_.assign(static_cast<std::size_t>(agent_count()), 0);
    null_counter_.assign(static_cast<std::size_t>(agent_count()), 0);
  }

  SchedulingEnv env_;
  std::vector<int> dn_counter_;    // per-agent consecutive do-nothing
  std::vector<int> null_counter_;  // per-agent consecutive empty/ineligible picks
};

}  // namespace upms

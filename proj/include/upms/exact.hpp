#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "upms/errors.hpp"
#include "upms/instance.hpp"
#include "upms/schedule.hpp"

namespace upms {

enum class ObjectiveMode { Makespan, FullObjective };

struct OracleResult {
  ScheduleRecord schedule;
  double value = 0;
};

namespace detail {

// Exhaustive solver over "left-shifted" schedules: every assignment starts at
// the maximum free time of its chosen machine and worker set. Any feasible
// schedule can be shifted into this form without increasing any completion,
// so the enumeration contains an optimum for makespan-type objectives.
// Waiting strategies are covered by choosing worker subsets that free up
// later.
class ExactSolver {
 public:
  ExactSolver(const ProblemInstance& inst, const ObjectiveWeights& w, ObjectiveMode mode)
      : inst_(inst), weights_(w), mode_(mode) {}

  OracleResult solve() {
    const int J = inst_.job_count;
    machine_free_.assign(inst_.machine_count, 0);
    machine_last_.assign(inst_.machine_count, -1);
    worker_free_.assign(inst_.worker_count, 0);
    partial_.clear();
    scheduled_mask_ = 0;
    utilization_ = 0;
    best_value_ = std::numeric_limits<double>::infinity();
    memo_.clear();

    // Worker interchangeability groups: same compatibility row.
    group_of_.assign(inst_.worker_count, 0);
    std::vector<std::vector<std::uint8_t>> rows;
    for (int w = 0; w < inst_.worker_count; ++w) {
      std::vector<std::uint8_t> row(inst_.machine_count);
      for (int m = 0; m < inst_.machine_count; ++m) row[m] = inst_.can_operate(w, m);
      auto it = std::find(rows.begin(), rows.end(), row);
      if (it == rows.end()) {
        rows.push_back(row);
        group_of_[w] = static_cast<int>(rows.size()) - 1;
      } else {
        group_of_[w] = static_cast<int>(it - rows.begin());
      }
    }
    group_count_ = static_cast<int>(rows.size());

    pair_pool_.assign(static_cast<std::size_t>(J) * inst_.machine_count, {});
    for (int j = 0; j < J; ++j)
      for (int m = 0; m < inst_.machine_count; ++m)
        if (inst_.eligible(j, m)) {
          std::vector<int> pool;
          for (int w = 0; w < inst_.worker_count; ++w)
            if (inst_.can_operate(w, m)) pool.push_back(w);
          pair_pool_[static_cast<std::size_t>(j) * inst_.machine_count + m] = pool;
        }

    dfs();
    OracleResult out;
    out.schedule = best_schedule_;
    out.value = best_value_;
    return out;
  }

 private:
  struct Candidate {
    long long start;
    int machine;
    int job;
    std::vector<int> workers;
    int setup;
    int processing;
  };

  double lower_bound() const {
    long long cur_max = 0;
    for (long long f : machine_free_) cur_max = std::max(cur_max, f);
    long long time_lb = cur_max;
    long long util_lb = utilization_;
    for (int j = 0; j < inst_.job_count; ++j) {
      if (scheduled_mask_ & (1u << j)) continue;
      long long best_c = std::numeric_limits<long long>::max();
      long long best_u = std::numeric_limits<long long>::max();
      for (int m = 0; m < inst_.machine_count; ++m) {
        if (!inst_.eligible(j, m)) continue;
        best_c = std::min(best_c, machine_free_[m] + *inst_.pt(j, m));
        best_u = std::min<long long>(
            best_u, static_cast<long long>(*inst_.workforce(j, m)) * *inst_.pt(j, m));
      }
      time_lb = std::max(time_lb, best_c);
      util_lb += best_u;
    }
    if (mode_ == ObjectiveMode::Makespan) return static_cast<double>(time_lb);
    return weights_.w1 * static_cast<double>(time_lb) +
           weights_.w2 * static_cast<double>(util_lb) - weights_.w3 * inst_.job_count;
  }

  std::string state_key() const {
    std::string key;
    key.reserve(64);
    auto put = [&key](long long v) {
      key.append(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    put(scheduled_mask_);
    for (int m = 0; m < inst_.machine_count; ++m) {
      put(machine_free_[m]);
      put(machine_last_[m]);
    }
    // Workers in the same compatibility group are interchangeable; only the
    // multiset of their free times matters.
    for (int g = 0; g < group_count_; ++g) {
      std::vector<long long> frees;
      for (int w = 0; w < inst_.worker_count; ++w)
        if (group_of_[w] == g) frees.push_back(worker_free_[w]);
      std::sort(frees.begin(), frees.end());
      for (long long f : frees) put(f);
    }
    return key;
  }

  void dfs() {
    if (scheduled_mask_ == (1u << inst_.job_count) - 1) {
      double value;
      if (mode_ == ObjectiveMode::Makespan) {
        long long mk = 0;
        for (long long f : machine_free_) mk = std::max(mk, f);
        value = static_cast<double>(mk);
      } else {
        ScheduleRecord rec{partial_};
        value = objective(rec, weights_);
      }
      if (value < best_value_) {
        best_value_ = value;
        best_schedule_.assignments = partial_;
      }
      return;
    }
    if (lower_bound() >= best_value_) return;

    // Identical resource states reach identical subtrees; in full-objective
    // mode a higher accumulated utilization is dominated.
    const long long memo_cost = mode_ == ObjectiveMode::Makespan ? 0 : utilization_;
    const std::string key = state_key();
    auto [it, inserted] = memo_.try_emplace(key, memo_cost);
    if (!inserted) {
      if (it->second <= memo_cost) return;
      it->second = memo_cost;
    }

    std::vector<Candidate> candidates;
    for (int j = 0; j < inst_.job_count; ++j) {
      if (scheduled_mask_ & (1u << j)) continue;
      for (int m = 0; m < inst_.machine_count; ++m) {
        if (!inst_.eligible(j, m)) continue;
        const int need = *inst_.workforce(j, m);
        const auto& pool =
            pair_pool_[static_cast<std::size_t>(j) * inst_.machine_count + m];
        const int setup =
            machine_last_[m] >= 0 ? inst_.st(static_cast<int>(machine_last_[m]), j, m) : 0;
        const int processing = *inst_.pt(j, m);
        std::vector<int> combo(static_cast<std::size_t>(need));
        enumerate_subsets(pool, need, 0, 0, combo, [&](const std::vector<int>& workers) {
          long long start = machine_free_[m];
          for (int w : workers) start = std::max(start, worker_free_[w]);
          candidates.push_back({start, m, j, workers, setup, processing});
        });
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.start != b.start) return a.start < b.start;
      if (a.machine != b.machine) return a.machine < b.machine;
      if (a.job != b.job) return a.job < b.job;
      return a.workers < b.workers;
    });

    for (const auto& c : candidates) {
      const long long duration = c.setup + c.processing;
      const long long completion = c.start + duration;
      const long long prev_mfree = machine_free_[c.machine];
      const long long prev_mlast = machine_last_[c.machine];
      std::vector<long long> prev_wfree;
      prev_wfree.reserve(c.workers.size());
      for (int w : c.workers) prev_wfree.push_back(worker_free_[w]);

      machine_free_[c.machine] = completion;
      machine_last_[c.machine] = c.job;
      for (int w : c.workers) worker_free_[w] = completion;
      scheduled_mask_ |= 1u << c.job;
      utilization_ += static_cast<long long>(c.workers.size()) * duration;
      partial_.push_back({c.job, c.machine, c.start, c.setup, c.processing, c.workers});

      dfs();

      partial_.pop_back();
      utilization_ -= static_cast<long long>(c.workers.size()) * duration;
      scheduled_mask_ &= ~(1u << c.job);
      for (std::size_t i = 0; i < c.workers.size(); ++i)
        worker_free_[c.workers[i]] = prev_wfree[i];
      machine_last_[c.machine] = prev_mlast;
      machine_free_[c.machine] = prev_mfree;
    }
  }

  template <typename Fn>
  void enumerate_subsets(const std::vector<int>& pool, int need, int from, int depth,
                         std::vector<int>& combo, Fn&& emit) {
    if (depth == need) {
      emit(combo);
      return;
    }
    for (int i = from; i <= static_cast<int>(pool.size()) - (need - depth); ++i) {
      combo[static_cast<std::size_t>(depth)] = pool[static_cast<std::size_t>(i)];
      enumerate_subsets(pool, need, i + 1, depth + 1, combo, emit);
    }
  }

  const ProblemInstance& inst_;
  ObjectiveWeights weights_;
  ObjectiveMode mode_;

  std::vector<long long> machine_free_;
  std::vector<long long> machine_last_;
  std::vector<long long> worker_free_;
  std::vector<int> group_of_;
  int group_count_ = 0;
  std::vector<std::vector<int>> pair_pool_;
  std::vector<Assignment> partial_;
  unsigned scheduled_mask_ = 0;
  long long utilization_ = 0;

  double best_value_ = 0;
  ScheduleRecord best_schedule_;
  std::unordered_map<std::string, long long> memo_;
};

}  // namespace detail

// Provably optimal schedule for tiny instances; refuses anything beyond the
// guard so callers cannot accidentally run an exponential search.
inline OracleResult brute_force_optimal(const ProblemInstance& inst,
                                        const ObjectiveWeights& weights = {},
                                        ObjectiveMode mode = ObjectiveMode::Makespan) {
  if (inst.job_count > 6 || inst.machine_count > 3)
    throw GuardError("instance too large for the exact solver (guard: jobs <= 6, machines <= 3); got " +
                     std::to_string(inst.job_count) + " jobs, " +
                     std::to_string(inst.machine_count) + " machines");
  auto report = validate(inst);
  if (!report.ok()) throw ValidationError("invalid instance:\n" + report.to_string());
  detail::ExactSolver solver(inst, weights, mode);
  return solver.solve();
}

}  // namespace upms

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "upms/errors.hpp"
#include "upms/rng.hpp"

namespace upms {

struct Interval {
  int lo = 0;
  int hi = 0;
  bool contains(int v) const { return v >= lo && v <= hi; }
  bool operator==(const Interval&) const = default;
};

// Unrelated-parallel-machine instance: machine-specific processing times,
// sequence-dependent setup times, worker-machine compatibility and per-pair
// workforce requirements. An absent processing_time entry means the job
// cannot run on that machine at all.
class ProblemInstance {
 public:
  int machine_count = 0;
  int job_count = 0;
  int worker_count = 0;

  // Flat row-major tables; see accessors for the index layout.
  std::vector<std::optional<int>> processing_time;    // [j*M + m]
  std::vector<int> setup_time;                        // [(i*J + k)*M + m]
  std::vector<std::uint8_t> compatibility;            // [w*M + m]
  std::vector<std::optional<int>> required_workforce; // [j*M + m]

  const std::optional<int>& pt(int job, int machine) const {
    return processing_time[static_cast<std::size_t>(job) * machine_count + machine];
  }
  int st(int from_job, int to_job, int machine) const {
    return setup_time[(static_cast<std::size_t>(from_job) * job_count + to_job) *
                          machine_count + machine];
  }
  bool can_operate(int worker, int machine) const {
    return compatibility[static_cast<std::size_t>(worker) * machine_count + machine] != 0;
  }
  const std::optional<int>& workforce(int job, int machine) const {
    return required_workforce[static_cast<std::size_t>(job) * machine_count + machine];
  }
  bool eligible(int job, int machine) const { return pt(job, machine).has_value(); }

  int compatible_worker_count(int machine) const {
    int n = 0;
    for (int w = 0; w < worker_count; ++w)
      if (can_operate(w, machine)) ++n;
    return n;
  }

  // Number of machines a worker can operate; the greedy allocator prefers
  // low-flexibility workers.
  int worker_flexibility(int worker) const {
    int n = 0;
    for (int m = 0; m < machine_count; ++m)
      if (can_operate(worker, m)) ++n;
    return n;
  }

  std::vector<int> eligible_machines(int job) const {
    std::vector<int> ms;
    for (int m = 0; m < machine_count; ++m)
      if (eligible(job, m)) ms.push_back(m);
    return ms;
  }

  int max_processing_time() const {
    int v = 0;
    for (const auto& e : processing_time)
      if (e && *e > v) v = *e;
    return v;
  }
  int max_setup_time() const {
    int v = 0;
    for (int s : setup_time)
      if (s > v) v = s;
    return v;
  }

  bool operator==(const ProblemInstance&) const = default;
};

struct GeneratorConfig {
  int job_count = 30;
  int machine_count = 12;
  int worker_count = 60;
  int job_slot_size = 10;
  Interval processing_time_range{10, 30};
  Interval setup_time_range{10, 20};
  Interval workforce_range{1, 5};
  double eligibility_probability = 0.8;
  double compatibility_probability = 0.5;
  std::uint64_t seed = 0;
};

// Structurally infeasible pairs (workforce demand no compatible crew can
// meet) are findings, not errors: such a pair simply can never be assigned.
// The worked example contains one and is still a legal instance.
struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
  bool clean() const { return errors.empty() && warnings.empty(); }
  std::string to_string() const {
    std::string s;
    for (const auto& i : errors) {
      s += i;
      s += '\n';
    }
    for (const auto& i : warnings) {
      s += "warning: ";
      s += i;
      s += '\n';
    }
    return s;
  }
};

inline ValidationReport validate(const ProblemInstance& inst) {
  ValidationReport report;
  auto flag = [&report](const std::string& msg) { report.errors.push_back(msg); };
  auto warn = [&report](const std::string& msg) { report.warnings.push_back(msg); };

  const std::size_t jm = static_cast<std::size_t>(inst.job_count) * inst.machine_count;
  if (inst.machine_count <= 0 || inst.job_count <= 0 || inst.worker_count <= 0) {
    flag("counts must be positive");
    return report;
  }
  if (inst.processing_time.size() != jm || inst.required_workforce.size() != jm ||
      inst.setup_time.size() != jm * inst.job_count ||
      inst.compatibility.size() !=
          static_cast<std::size_t>(inst.worker_count) * inst.machine_count) {
    flag("table sizes do not match machine/job/worker counts");
    return report;
  }

  for (int j = 0; j < inst.job_count; ++j) {
    bool any = false;
    for (int m = 0; m < inst.machine_count; ++m) {
      const auto& p = inst.pt(j, m);
      const auto& r = inst.workforce(j, m);
      if (p.has_value() != r.has_value())
        flag("pairing: processing_time and required_workforce disagree at job " +
             std::to_string(j) + ", machine " + std::to_string(m));
      if (p) {
        any = true;
        if (*p < 0)
          flag("negative processing_time at job " + std::to_string(j) + ", machine " +
               std::to_string(m));
      }
      if (r) {
        if (*r < 1)
          flag("required_workforce < 1 at job " + std::to_string(j) + ", machine " +
               std::to_string(m));
        else if (inst.compatible_worker_count(m) < *r)
          warn("structurally infeasible: job " + std::to_string(j) + " on machine " +
               std::to_string(m) + " needs " + std::to_string(*r) + " workers but only " +
               std::to_string(inst.compatible_worker_count(m)) + " are compatible");
      }
    }
    if (!any) flag("eligibility: job " + std::to_string(j) + " has no eligible machine");
  }
  for (std::size_t idx = 0; idx < inst.setup_time.size(); ++idx)
    if (inst.setup_time[idx] < 0) {
      flag("negative setup_time entry");
      break;
    }
  return report;
}

// Random instance per the configured uniform ranges. Structurally infeasible
// entries and jobs without any eligible machine are resampled in place so the
// instance shape (J, M, W) stays exactly as configured.
inline ProblemInstance generate(const GeneratorConfig& cfg) {
  if (cfg.job_count <= 0 || cfg.machine_count <= 0 || cfg.worker_count <= 0 ||
      cfg.job_slot_size <= 0)
    throw GenerationError("generator counts must be positive");
  for (const auto& [name, r] :
       {std::pair<const char*, Interval>{"processing_time_range", cfg.processing_time_range},
        {"setup_time_range", cfg.setup_time_range},
        {"workforce_range", cfg.workforce_range}}) {
    if (r.lo > r.hi)
      throw GenerationError(std::string(name) + ": lower bound exceeds upper bound");
  }
  if (cfg.processing_time_range.lo < 0 || cfg.setup_time_range.lo < 0)
    throw GenerationError("durations must be non-negative");
  if (cfg.workforce_range.lo < 1)
    throw GenerationError("workforce_range lower bound must be at least 1");
  if (cfg.workforce_range.lo > cfg.worker_count)
    throw GenerationError("workforce_range lower bound exceeds worker_count");
  if (cfg.eligibility_probability < 0 || cfg.eligibility_probability > 1 ||
      cfg.compatibility_probability < 0 || cfg.compatibility_probability > 1)
    throw GenerationError("probabilities must lie in [0, 1]");

  Rng rng(cfg.seed);
  ProblemInstance inst;
  inst.machine_count = cfg.machine_count;
  inst.job_count = cfg.job_count;
  inst.worker_count = cfg.worker_count;
  const int M = cfg.machine_count, J = cfg.job_count, W = cfg.worker_count;

  inst.compatibility.assign(static_cast<std::size_t>(W) * M, 0);
  for (int w = 0; w < W; ++w)
    for (int m = 0; m < M; ++m)
      inst.compatibility[static_cast<std::size_t>(w) * M + m] =
          rng.bernoulli(cfg.compatibility_probability) ? 1 : 0;

  inst.setup_time.resize(static_cast<std::size_t>(J) * J * M);
  for (std::size_t idx = 0; idx < inst.setup_time.size(); ++idx)
    inst.setup_time[idx] = rng.uniform_int(cfg.setup_time_range.lo, cfg.setup_time_range.hi);

  inst.processing_time.assign(static_cast<std::size_t>(J) * M, std::nullopt);
  inst.required_workforce.assign(static_cast<std::size_t>(J) * M, std::nullopt);

  constexpr int kMaxRetries = 100;
  auto draw_entry = [&](int j, int m) {
    const std::size_t idx = static_cast<std::size_t>(j) * M + m;
    if (rng.bernoulli(cfg.eligibility_probability)) {
      inst.processing_time[idx] =
          rng.uniform_int(cfg.processing_time_range.lo, cfg.processing_time_range.hi);
      inst.required_workforce[idx] =
          rng.uniform_int(cfg.workforce_range.lo, cfg.workforce_range.hi);
    } else {
      inst.processing_time[idx] = std::nullopt;
      inst.required_workforce[idx] = std::nullopt;
    }
  };
  auto entry_ok = [&](int j, int m) {
    return !inst.eligible(j, m) ||
           *inst.workforce(j, m) <= inst.compatible_worker_count(m);
  };

  for (int j = 0; j < J; ++j) {
    for (int row_try = 0;; ++row_try) {
      for (int m = 0; m < M; ++m) {
        draw_entry(j, m);
        int entry_try = 0;
        while (!entry_ok(j, m)) {
          if (++entry_try > kMaxRetries)
            throw GenerationError(
                "cannot satisfy workforce requirement for job " + std::to_string(j) +
                " on machine " + std::to_string(m) +
                ": too few compatible workers for the configured workforce_range");
          draw_entry(j, m);
        }
      }
      bool any = false;
      for (int m = 0; m < M; ++m) any = any || inst.eligible(j, m);
      if (any) break;
      if (row_try >= kMaxRetries)
        throw GenerationError("cannot give job " + std::to_string(j) +
                              " an eligible machine: eligibility_probability too low");
    }
  }
  return inst;
}

// The worked example instance: two machines, five jobs, two workers, a
// uniform setup time of 1 for every transition.
inline ProblemInstance illustrative_instance() {
  ProblemInstance inst;
  inst.machine_count = 2;
  inst.job_count = 5;
  inst.worker_count = 2;
  const int A = -1;  // absent
  // Rows are jobs, columns machines (m1, m2).
  const int pt[5][2] = {{2, A}, {A, 3}, {1, 2}, {3, 2}, {2, 2}};
  const int rw[5][2] = {{1, A}, {A, 1}, {2, 1}, {1, 2}, {2, 1}};
  inst.processing_time.assign(10, std::nullopt);
  inst.required_workforce.assign(10, std::nullopt);
  for (int j = 0; j < 5; ++j)
    for (int m = 0; m < 2; ++m)
      if (pt[j][m] != A) {
        inst.processing_time[static_cast<std::size_t>(j) * 2 + m] = pt[j][m];
        inst.required_workforce[static_cast<std::size_t>(j) * 2 + m] = rw[j][m];
      }
  inst.setup_time.assign(5 * 5 * 2, 1);
  inst.compatibility = {1, 1,   // w1 operates both machines
                        1, 0};  // w2 operates only m1
  return inst;
}

namespace detail {

inline nlohmann::json optional_table_to_json(const std::vector<std::optional<int>>& t,
                                             int rows, int cols) {
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < cols; ++c) {
      const auto& e = t[static_cast<std::size_t>(r) * cols + c];
      if (e)
        row.push_back(*e);
      else
        row.push_back(nullptr);
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<std::optional<int>> optional_table_from_json(const nlohmann::json& j,
                                                                int rows, int cols,
                                                                const char* field) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw ParseError(std::string(field) + ": expected " + std::to_string(rows) + " rows");
  std::vector<std::optional<int>> t(static_cast<std::size_t>(rows) * cols, std::nullopt);
  for (int r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw ParseError(std::string(field) + " row " + std::to_string(r) + ": expected " +
                       std::to_string(cols) + " columns");
    for (int c = 0; c < cols; ++c)
      if (!row[c].is_null()) t[static_cast<std::size_t>(r) * cols + c] = row[c].get<int>();
  }
  return t;
}

}  // namespace detail

inline void save(const ProblemInstance& inst, const std::string& path) {
  auto report = validate(inst);
  if (!report.ok())
    throw ValidationError("refusing to save an invalid instance:\n" + report.to_string());

  nlohmann::json j;
  j["format_version"] = 1;
  j["machines"] = inst.machine_count;
  j["jobs"] = inst.job_count;
  j["workers"] = inst.worker_count;
  j["processing_time"] =
      detail::optional_table_to_json(inst.processing_time, inst.job_count, inst.machine_count);
  j["required_workforce"] = detail::optional_table_to_json(
      inst.required_workforce, inst.job_count, inst.machine_count);

  nlohmann::json st = nlohmann::json::array();
  for (int i = 0; i < inst.job_count; ++i) {
    nlohmann::json from = nlohmann::json::array();
    for (int k = 0; k < inst.job_count; ++k) {
      nlohmann::json per_machine = nlohmann::json::array();
      for (int m = 0; m < inst.machine_count; ++m) per_machine.push_back(inst.st(i, k, m));
      from.push_back(std::move(per_machine));
    }
    st.push_back(std::move(from));
  }
  j["setup_time"] = std::move(st);

  nlohmann::json comp = nlohmann::json::array();
  for (int w = 0; w < inst.worker_count; ++w) {
    nlohmann::json row = nlohmann::json::array();
    for (int m = 0; m < inst.machine_count; ++m) row.push_back(inst.can_operate(w, m));
    comp.push_back(std::move(row));
  }
  j["compatibility"] = std::move(comp);

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

inline ProblemInstance load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }

  ProblemInstance inst;
  try {
    if (j.at("format_version").get<int>() != 1)
      throw ParseError(path + ": unsupported format_version");
    inst.machine_count = j.at("machines").get<int>();
    inst.job_count = j.at("jobs").get<int>();
    inst.worker_count = j.at("workers").get<int>();
    inst.processing_time = detail::optional_table_from_json(
        j.at("processing_time"), inst.job_count, inst.machine_count, "processing_time");
    inst.required_workforce = detail::optional_table_from_json(
        j.at("required_workforce"), inst.job_count, inst.machine_count, "required_workforce");

    const auto& st = j.at("setup_time");
    if (static_cast<int>(st.size()) != inst.job_count)
      throw ParseError("setup_time: wrong outer dimension");
    inst.setup_time.resize(static_cast<std::size_t>(inst.job_count) * inst.job_count *
                           inst.machine_count);
    for (int i = 0; i < inst.job_count; ++i)
      for (int k = 0; k < inst.job_count; ++k)
        for (int m = 0; m < inst.machine_count; ++m)
          inst.setup_time[(static_cast<std::size_t>(i) * inst.job_count + k) *
                              inst.machine_count + m] = st.at(i).at(k).at(m).get<int>();

    const auto& comp = j.at("compatibility");
    if (static_cast<int>(comp.size()) != inst.worker_count)
      throw ParseError("compatibility: wrong outer dimension");
    inst.compatibility.assign(
        static_cast<std::size_t>(inst.worker_count) * inst.machine_count, 0);
    for (int w = 0; w < inst.worker_count; ++w)
      for (int m = 0; m < inst.machine_count; ++m)
        inst.compatibility[static_cast<std::size_t>(w) * inst.machine_count + m] =
            comp.at(w).at(m).get<bool>() ? 1 : 0;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }

  auto report = validate(inst);
  if (!report.ok())
    throw ValidationError(path + ": instance violates invariants:\n" + report.to_string());
  return inst;
}

}  // namespace upms

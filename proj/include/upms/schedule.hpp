#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "upms/errors.hpp"
#include "upms/instance.hpp"

namespace upms {

struct Assignment {
  int job = -1;
  int machine = -1;
  long long start = 0;
  int setup = 0;
  int processing = 0;
  std::vector<int> workers;

  long long end() const { return start + setup + processing; }
  bool operator==(const Assignment&) const = default;
};

// The realized schedule; one entry per job-machine assignment in the order
// the assignments were made.
struct ScheduleRecord {
  std::vector<Assignment> assignments;
  bool operator==(const ScheduleRecord&) const = default;
};

// T(x): completion time of the last assignment.
inline long long makespan(const ScheduleRecord& s) {
  long long v = 0;
  for (const auto& a : s.assignments) v = std::max(v, a.end());
  return v;
}

// U(x): total worker-time consumed, r * (setup + processing) per assignment.
inline long long utilization(const ScheduleRecord& s) {
  long long v = 0;
  for (const auto& a : s.assignments)
    v += static_cast<long long>(a.workers.size()) * (a.setup + a.processing);
  return v;
}

// P(x): number of jobs performed.
inline int performed(const ScheduleRecord& s) {
  return static_cast<int>(s.assignments.size());
}

struct ObjectiveWeights {
  double w1 = 1.0;  // completion time
  double w2 = 1.0;  // resource utilization
  double w3 = 1.0;  // jobs performed
};

// f(x) = w1*T(x) + w2*U(x) - w3*P(x)
inline double objective(const ScheduleRecord& s, const ObjectiveWeights& w = {}) {
  return w.w1 * static_cast<double>(makespan(s)) +
         w.w2 * static_cast<double>(utilization(s)) - w.w3 * performed(s);
}

// Shortest round-trip decimal text for a double; keeps every emitted file
// byte-reproducible.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// CSV with one row per occupancy interval, machine-job lanes first, then
// worker-machine lanes.
inline void export_gantt(const ScheduleRecord& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "resource_kind,resource_id,job,start,end\n";
  for (const auto& a : s.assignments)
    out << "machine," << a.machine << ',' << a.job << ',' << a.start << ',' << a.end()
        << '\n';
  for (const auto& a : s.assignments)
    for (int w : a.workers)
      out << "worker," << w << ',' << a.job << ',' << a.start << ',' << a.end() << '\n';
  if (!out) throw IoError("failed writing " + path);
}

// Structural checks used by tests and the exact solver: per-machine intervals
// must not overlap, jobs appear at most once, worker sets respect size and
// compatibility.
inline ValidationReport validate_schedule(const ScheduleRecord& s,
                                          const ProblemInstance& inst) {
  ValidationReport report;
  auto flag = [&report](const std::string& m) { report.errors.push_back(m); };
  std::vector<int> seen(inst.job_count, 0);
  for (const auto& a : s.assignments) {
    if (a.job < 0 || a.job >= inst.job_count || a.machine < 0 ||
        a.machine >= inst.machine_count) {
      flag("assignment references unknown job or machine");
      continue;
    }
    if (++seen[a.job] > 1) flag("job " + std::to_string(a.job) + " assigned more than once");
    if (!inst.eligible(a.job, a.machine))
      flag("job " + std::to_string(a.job) + " not eligible on machine " +
           std::to_string(a.machine));
    else {
      if (static_cast<int>(a.workers.size()) != *inst.workforce(a.job, a.machine))
        flag("worker set size mismatch for job " + std::to_string(a.job));
      if (a.processing != *inst.pt(a.job, a.machine))
        flag("processing duration mismatch for job " + std::to_string(a.job));
    }
    for (int w : a.workers)
      if (w < 0 || w >= inst.worker_count || !inst.can_operate(w, a.machine))
        flag("incompatible worker " + std::to_string(w) + " on machine " +
             std::to_string(a.machine));
  }
  // Overlap on machines and workers.
  for (std::size_t i = 0; i < s.assignments.size(); ++i)
    for (std::size_t k = i + 1; k < s.assignments.size(); ++k) {
      const auto& a = s.assignments[i];
      const auto& b = s.assignments[k];
      const bool overlap = a.start < b.end() && b.start < a.end();
      if (!overlap) continue;
      if (a.machine == b.machine)
        flag("machine " + std::to_string(a.machine) + " double-booked");
      for (int w : a.workers)
        for (int v : b.workers)
          if (w == v) flag("worker " + std::to_string(w) + " double-booked");
    }
  return report;
}

}  // namespace upms

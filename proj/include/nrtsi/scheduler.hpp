#pragma once
#include <string>
#include <vector>

#include "nrtsi/series.hpp"

namespace nrtsi {

enum class ScheduleMode { Deterministic, Irregular, Stochastic, PartialDims };

struct SchedulerConfig {
  int max_level = 4;                  // L; largest schedulable gap is 2^L
  double band_width = 1.0;            // Delta, irregular mode
  double stochastic_threshold = 4.0;  // gaps above this are imputed one by one
  ScheduleMode mode = ScheduleMode::Deterministic;
  // When set, gaps above 2^L are served by the coarsest level instead of
  // raising. Off by default; sparse masks (e.g. 195 of 200 hidden) cannot be
  // scheduled at all without it.
  bool allow_gap_overflow = false;
};

struct ScheduleStep {
  int level = 0;
  std::vector<double> target_times;  // ascending
  int model_id = 0;
};

struct SchedulePlan {
  std::vector<ScheduleStep> steps;

  std::size_t total_targets() const;
};

// Level l serves gaps in (floor(2^(L-l-1)), 2^(L-l)]. Throws "gap exceeds
// model capacity" above 2^L unless allow_overflow maps those to level 0.
int level_of(double gap, int max_level, bool allow_overflow = false);

// Lower edge of the level band, floor(2^(L-l-1)).
double level_floor(int level, int max_level);

SchedulePlan plan_deterministic(const SeriesSet& observed, const SeriesSet& targets,
                                const SchedulerConfig& cfg);
SchedulePlan plan_irregular(const SeriesSet& observed, const SeriesSet& targets,
                            const SchedulerConfig& cfg);
SchedulePlan plan_stochastic(const SeriesSet& observed, const SeriesSet& targets,
                             const SchedulerConfig& cfg);
SchedulePlan plan_partial_dims(const SeriesSet& points, const SchedulerConfig& cfg);

// Dispatch on cfg.mode (PartialDims expects observed+targets merged in `targets`).
SchedulePlan plan(const SeriesSet& observed, const SeriesSet& targets, const SchedulerConfig& cfg);

// Time-based variants used internally and by tests.
SchedulePlan plan_times(const std::vector<double>& observed_times,
                        const std::vector<double>& target_times, const SchedulerConfig& cfg);

// One {"level":l,"targets":[...],"model":id} object per line.
std::string plan_to_jsonl(const SchedulePlan& plan);
SchedulePlan plan_from_jsonl(const std::string& text);

}  // namespace nrtsi

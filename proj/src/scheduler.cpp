#include "nrtsi/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace nrtsi {

std::size_t SchedulePlan::total_targets() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.target_times.size();
  return n;
}

double level_floor(int level, int max_level) {
  const int e = max_level - level - 1;
  return e >= 0 ? std::exp2(e) : 0.0;  // floor(2^-1) = 0
}

int level_of(double gap, int max_level, bool allow_overflow) {
  if (!(gap > 0.0)) throw std::invalid_argument("gap must be positive");
  const double cap = std::exp2(max_level);
  if (gap > cap) {
    if (allow_overflow) return 0;
    throw std::invalid_argument("gap exceeds model capacity: gap " + std::to_string(gap) +
                                " > 2^" + std::to_string(max_level));
  }
  for (int l = 0; l <= max_level; ++l) {
    if (gap > level_floor(l, max_level) && gap <= std::exp2(max_level - l)) return l;
  }
  throw std::logic_error("no level for gap " + std::to_string(gap));
}

namespace {

std::vector<double> times_of(const SeriesSet& s) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& p : s.points) out.push_back(p.time);
  return out;
}

// Repeatedly impute the current-maximum-gap batch with the model of the
// level that gap falls in; the maximum never grows, so levels are
// non-decreasing across steps. `band` > 0 widens a step to all gaps in
// (max - band, max], clipped at the level's lower edge.
void greedy_steps(GapTable& gaps, const SchedulerConfig& cfg, double band,
                  std::vector<ScheduleStep>& out) {
  while (!gaps.empty()) {
    const double m = gaps.max_gap();
    const int lvl = level_of(m, cfg.max_level, cfg.allow_gap_overflow);
    const double lo = band > 0.0 ? std::max(m - band, level_floor(lvl, cfg.max_level))
                                 : 0.0;
    ScheduleStep step;
    step.level = lvl;
    step.model_id = lvl;
    for (const auto& [t, g] : gaps.entries) {
      if (band > 0.0 ? (g > lo && g <= m) : (g == m)) step.target_times.push_back(t);
    }
    gaps = update_gaps(gaps, step.target_times);
    out.push_back(std::move(step));
  }
}

}  // namespace

SchedulePlan plan_times(const std::vector<double>& observed_times,
                        const std::vector<double>& target_times, const SchedulerConfig& cfg) {
  SchedulePlan plan;
  if (target_times.empty()) return plan;
  GapTable gaps = compute_gaps(observed_times, target_times);

  if (cfg.mode == ScheduleMode::Stochastic) {
    // Large-gap targets one by one, largest first, ties by earliest time.
    while (!gaps.empty() && gaps.max_gap() > cfg.stochastic_threshold) {
      const double m = gaps.max_gap();
      double pick = 0.0;
      bool found = false;
      for (const auto& [t, g] : gaps.entries) {
        if (g == m) { pick = t; found = true; break; }  // map is time-ordered
      }
      if (!found) break;
      ScheduleStep step;
      step.level = level_of(m, cfg.max_level, cfg.allow_gap_overflow);
      step.model_id = step.level;
      step.target_times = {pick};
      gaps = update_gaps(gaps, step.target_times);
      plan.steps.push_back(std::move(step));
    }
    greedy_steps(gaps, cfg, 0.0, plan.steps);
    return plan;
  }

  const double band = cfg.mode == ScheduleMode::Irregular ? cfg.band_width : 0.0;
  if (cfg.mode == ScheduleMode::Irregular && !(band > 0.0))
    throw std::invalid_argument("band_width must be positive in irregular mode");
  greedy_steps(gaps, cfg, band, plan.steps);
  return plan;
}

SchedulePlan plan_deterministic(const SeriesSet& observed, const SeriesSet& targets,
                                const SchedulerConfig& cfg) {
  SchedulerConfig c = cfg;
  c.mode = ScheduleMode::Deterministic;
  return plan_times(times_of(observed), times_of(targets), c);
}

SchedulePlan plan_irregular(const SeriesSet& observed, const SeriesSet& targets,
                            const SchedulerConfig& cfg) {
  SchedulerConfig c = cfg;
  c.mode = ScheduleMode::Irregular;
  return plan_times(times_of(observed), times_of(targets), c);
}

SchedulePlan plan_stochastic(const SeriesSet& observed, const SeriesSet& targets,
                             const SchedulerConfig& cfg) {
  SchedulerConfig c = cfg;
  c.mode = ScheduleMode::Stochastic;
  return plan_times(times_of(observed), times_of(targets), c);
}

SchedulePlan plan_partial_dims(const SeriesSet& points, const SchedulerConfig& cfg) {
  (void)cfg;
  // Most missing dimensions first; equal counts form one step; points with
  // nothing missing are skipped. A single model serves every step.
  std::map<int, std::vector<double>, std::greater<int>> by_count;
  for (const auto& p : points.points) {
    const int n = count_missing_dims(p);
    if (n > 0) by_count[n].push_back(p.time);
  }
  SchedulePlan plan;
  for (auto& [n, ts] : by_count) {
    std::sort(ts.begin(), ts.end());
    ScheduleStep step;
    step.level = 0;
    step.model_id = 0;
    step.target_times = std::move(ts);
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

SchedulePlan plan(const SeriesSet& observed, const SeriesSet& targets,
                  const SchedulerConfig& cfg) {
  switch (cfg.mode) {
    case ScheduleMode::Deterministic: return plan_deterministic(observed, targets, cfg);
    case ScheduleMode::Irregular: return plan_irregular(observed, targets, cfg);
    case ScheduleMode::Stochastic: return plan_stochastic(observed, targets, cfg);
    case ScheduleMode::PartialDims: return plan_partial_dims(targets, cfg);
  }
  throw std::logic_error("unknown schedule mode");
}

std::string plan_to_jsonl(const SchedulePlan& plan) {
  std::ostringstream out;
  for (const auto& s : plan.steps) {
    nlohmann::json j;
    j["level"] = s.level;
    j["targets"] = s.target_times;
    j["model"] = s.model_id;
    out << j.dump() << '\n';
  }
  return out.str();
}

SchedulePlan plan_from_jsonl(const std::string& text) {
  SchedulePlan plan;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    ScheduleStep s;
    s.level = j.at("level").get<int>();
    s.target_times = j.at("targets").get<std::vector<double>>();
    s.model_id = j.at("model").get<int>();
    plan.steps.push_back(std::move(s));
  }
  return plan;
}

}  // namespace nrtsi

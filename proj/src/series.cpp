#include "nrtsi/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace nrtsi {

TimedPoint::TimedPoint(double t, std::vector<double> x, bool obs)
    : time(t), data(std::move(x)), dim_mask(data.size(), obs ? 1 : 0), observed(obs) {}

TimedPoint::TimedPoint(double t, std::vector<double> x, std::vector<uint8_t> mask, bool obs)
    : time(t), data(std::move(x)), dim_mask(std::move(mask)), observed(obs) {}

void SeriesSet::add(TimedPoint p) {
  if (dim == 0) dim = static_cast<int>(p.data.size());
  points.push_back(std::move(p));
}

void SeriesSet::validate(bool partial_mode) const {
  std::set<double> seen;
  for (const auto& p : points) {
    if (!std::isfinite(p.time) || p.time < 0.0)
      throw std::invalid_argument("point time must be finite and non-negative");
    if (static_cast<int>(p.data.size()) != dim || static_cast<int>(p.dim_mask.size()) != dim)
      throw std::invalid_argument("point dimensionality does not match series dim");
    if (!p.observed) {
      bool any_missing = false;
      for (auto m : p.dim_mask) any_missing |= (m == 0);
      if (!any_missing)
        throw std::invalid_argument("target point must mark at least one missing dimension");
    }
    if (!partial_mode && !seen.insert(p.time).second)
      throw std::invalid_argument("duplicate time value in fully-missing mode");
  }
}

double GapTable::max_gap() const {
  double m = 0.0;
  for (const auto& [t, g] : entries) m = std::max(m, g);
  return m;
}

GapTable compute_gaps(const std::vector<double>& observed_times,
                      const std::vector<double>& target_times) {
  if (observed_times.empty()) throw std::invalid_argument("no anchors");
  if (target_times.empty()) throw std::invalid_argument("empty target set");

  std::vector<double> obs = observed_times;
  std::sort(obs.begin(), obs.end());

  GapTable table;
  for (double t : target_times) {
    auto it = std::lower_bound(obs.begin(), obs.end(), t);
    double gap = std::numeric_limits<double>::infinity();
    if (it != obs.end()) gap = std::min(gap, *it - t);
    if (it != obs.begin()) gap = std::min(gap, t - *(it - 1));
    if (gap == 0.0) throw std::invalid_argument("target coincides with observation");
    table.entries[t] = gap;
  }
  return table;
}

GapTable compute_gaps(const SeriesSet& observed, const SeriesSet& targets) {
  std::vector<double> obs, tgt;
  obs.reserve(observed.size());
  tgt.reserve(targets.size());
  for (const auto& p : observed.points) obs.push_back(p.time);
  for (const auto& p : targets.points) tgt.push_back(p.time);
  return compute_gaps(obs, tgt);
}

GapTable update_gaps(const GapTable& table, const std::vector<double>& newly_observed) {
  GapTable out = table;
  for (double t : newly_observed) {
    if (out.entries.erase(t) == 0)
      throw std::invalid_argument("newly observed time was not a target in the table");
  }
  for (auto& [t, g] : out.entries) {
    for (double n : newly_observed) g = std::min(g, std::abs(t - n));
  }
  return out;
}

std::vector<TimedPoint> to_sequence(const SeriesSet& set) {
  std::vector<TimedPoint> seq = set.points;
  std::stable_sort(seq.begin(), seq.end(),
                   [](const TimedPoint& a, const TimedPoint& b) { return a.time < b.time; });
  return seq;
}

int count_missing_dims(const TimedPoint& point) {
  int n = 0;
  for (auto m : point.dim_mask) n += (m == 0);
  return n;
}

}  // namespace nrtsi

#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nrtsi {

// One element of the set representation: a timestamped data vector with a
// per-dimension observation mask. observed=false marks an imputation target.
struct TimedPoint {
  double time = 0.0;
  std::vector<double> data;
  std::vector<uint8_t> dim_mask;  // 1 = dimension observed
  bool observed = true;

  TimedPoint() = default;
  TimedPoint(double t, std::vector<double> x, bool obs = true);
  TimedPoint(double t, std::vector<double> x, std::vector<uint8_t> mask, bool obs);
};

// Unordered collection of TimedPoints. Iteration order of `points` carries no
// meaning; every operation on a SeriesSet must be insensitive to it.
struct SeriesSet {
  std::vector<TimedPoint> points;
  int dim = 0;

  SeriesSet() = default;
  explicit SeriesSet(int d) : dim(d) {}

  void add(TimedPoint p);
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  // Throws if a point violates the set invariants (dim mismatch, non-finite
  // or negative time, duplicate time in fully-missing mode, empty mask on a
  // target point).
  void validate(bool partial_mode = false) const;
};

// Missing-gap bookkeeping: target time -> distance to the nearest currently
// observed time. Keyed map so iteration is deterministic.
struct GapTable {
  std::map<double, double> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  double max_gap() const;
};

// Exact minimum |t_i - t_hat_j| over observed times, one entry per target.
GapTable compute_gaps(const SeriesSet& observed, const SeriesSet& targets);
GapTable compute_gaps(const std::vector<double>& observed_times,
                      const std::vector<double>& target_times);

// Incremental form: newly observed times leave the table; remaining gaps are
// tightened against the new times. Equals a recompute on the enlarged set.
GapTable update_gaps(const GapTable& table, const std::vector<double>& newly_observed);

// Time-ordered view of a set (stable, lossless).
std::vector<TimedPoint> to_sequence(const SeriesSet& set);

int count_missing_dims(const TimedPoint& point);

}  // namespace nrtsi

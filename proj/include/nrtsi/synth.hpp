#pragma once
#include <cstdint>
#include <vector>

#include "nrtsi/series.hpp"

namespace nrtsi {

enum class BilliardsSampling { RegularGrid, IrregularUniform };
enum class SpeedDistribution { GaussianNorm, Uniform };

struct BilliardsConfig {
  double side = 0.8828;
  double speed_min = 0.0018;
  double speed_max = 0.1075;
  // Velocity components are drawn N(0, speed_sigma^2) and redrawn until the
  // speed lands inside [speed_min, speed_max]; this reproduces the reference
  // trajectory statistics that a flat speed draw misses. Uniform remains
  // available as an option.
  double speed_sigma = 0.03;
  SpeedDistribution speed_dist = SpeedDistribution::GaussianNorm;
  int horizon = 200;
  int n_train = 4000;
  int n_test = 1000;
  uint64_t seed = 0;
  BilliardsSampling sampling = BilliardsSampling::RegularGrid;
};

struct SinusoidConfig {
  int n_series = 1000;
  int points_per_series = 100;
  int hidden_per_series = 90;
  double amplitude_min = 0.5, amplitude_max = 1.5;
  double frequency_min = 0.5, frequency_max = 2.0;
  double phase_min = 0.0, phase_max = 6.283185307179586;
  // Span of the sampled time window; sized so masked instances stay inside
  // the scheduler's 2^L gap capacity.
  double time_span = 32.0;
  uint64_t seed = 0;
};

struct BilliardsCorpus {
  std::vector<SeriesSet> train;
  std::vector<SeriesSet> test;
};

// Single ball on a square table, constant speed, exact specular reflections.
BilliardsCorpus gen_billiards(const BilliardsConfig& cfg);
SeriesSet gen_billiards_series(const BilliardsConfig& cfg, uint64_t series_seed);

std::vector<SeriesSet> gen_sinusoid(const SinusoidConfig& cfg);
SeriesSet gen_sinusoid_series(const SinusoidConfig& cfg, uint64_t series_seed);

enum class MaskMode { FullyMissing, PartialDims };

struct MaskPolicy {
  int min_hidden = 0;
  int max_hidden = 0;
  MaskMode mode = MaskMode::FullyMissing;
  double partial_rate = 0.5;  // per-entry missing probability in partial mode
  // When positive, masks whose largest missing gap exceeds this are redrawn
  // (bounded retries) so the instance stays schedulable.
  double max_gap_cap = 0.0;
  int max_retries = 200;
};

struct MaskedSeries {
  SeriesSet observed;
  SeriesSet targets;  // data zeroed at hidden entries, observed=false
  SeriesSet truth;    // hidden points with ground-truth data, aligned with targets
};

MaskedSeries mask_series(const SeriesSet& series, const MaskPolicy& policy, uint64_t seed);

}  // namespace nrtsi

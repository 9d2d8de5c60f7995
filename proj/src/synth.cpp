#include "nrtsi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nrtsi/rng.hpp"

namespace nrtsi {

namespace {

struct BallState {
  double px, py, vx, vy;
};

// Advance by dt with exact event-time wall handling; speed is conserved.
void advance(BallState& s, double dt, double side) {
  while (dt > 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    const double tx = s.vx > 0.0 ? (side - s.px) / s.vx : (s.vx < 0.0 ? s.px / -s.vx : inf);
    const double ty = s.vy > 0.0 ? (side - s.py) / s.vy : (s.vy < 0.0 ? s.py / -s.vy : inf);
    const double tmin = std::min(tx, ty);
    if (tmin >= dt) {
      s.px += s.vx * dt;
      s.py += s.vy * dt;
      return;
    }
    s.px += s.vx * tmin;
    s.py += s.vy * tmin;
    dt -= tmin;
    if (tx <= ty) s.vx = -s.vx;
    if (ty <= tx) s.vy = -s.vy;
  }
}

BallState init_ball(const BilliardsConfig& cfg, Rng& rng) {
  BallState s;
  s.px = rng.uniform(0.0, cfg.side);
  s.py = rng.uniform(0.0, cfg.side);
  if (cfg.speed_dist == SpeedDistribution::GaussianNorm) {
    while (true) {
      const double vx = cfg.speed_sigma * rng.gauss();
      const double vy = cfg.speed_sigma * rng.gauss();
      const double sp = std::hypot(vx, vy);
      if (sp >= cfg.speed_min && sp <= cfg.speed_max) {
        s.vx = vx;
        s.vy = vy;
        return s;
      }
    }
  }
  const double theta = rng.uniform(0.0, 6.283185307179586476925286766559);
  const double sp = rng.uniform(cfg.speed_min, cfg.speed_max);
  s.vx = sp * std::cos(theta);
  s.vy = sp * std::sin(theta);
  return s;
}

}  // namespace

SeriesSet gen_billiards_series(const BilliardsConfig& cfg, uint64_t series_seed) {
  if (!(cfg.speed_min > 0.0) || cfg.speed_min > cfg.speed_max)
    throw std::invalid_argument("invalid speed range");
  if (cfg.horizon <= 0) throw std::invalid_argument("horizon must be positive");
  Rng rng(series_seed);
  BallState ball = init_ball(cfg, rng);

  std::vector<double> times;
  times.reserve(cfg.horizon);
  if (cfg.sampling == BilliardsSampling::RegularGrid) {
    for (int i = 0; i < cfg.horizon; ++i) times.push_back(static_cast<double>(i));
  } else {
    for (int i = 0; i < cfg.horizon; ++i)
      times.push_back(rng.uniform(0.0, static_cast<double>(cfg.horizon)));
    std::sort(times.begin(), times.end());
  }

  SeriesSet series(2);
  double prev = 0.0;
  for (double t : times) {
    advance(ball, t - prev, cfg.side);
    prev = t;
    series.add(TimedPoint(t, {ball.px, ball.py}));
  }
  return series;
}

BilliardsCorpus gen_billiards(const BilliardsConfig& cfg) {
  BilliardsCorpus corpus;
  corpus.train.reserve(cfg.n_train);
  corpus.test.reserve(cfg.n_test);
  for (int i = 0; i < cfg.n_train; ++i)
    corpus.train.push_back(gen_billiards_series(cfg, derive_seed(cfg.seed, 0, i)));
  for (int i = 0; i < cfg.n_test; ++i)
    corpus.test.push_back(gen_billiards_series(cfg, derive_seed(cfg.seed, 1, i)));
  return corpus;
}

SeriesSet gen_sinusoid_series(const SinusoidConfig& cfg, uint64_t series_seed) {
  Rng rng(series_seed);
  const double a = rng.uniform(cfg.amplitude_min, cfg.amplitude_max);
  const double omega = rng.uniform(cfg.frequency_min, cfg.frequency_max);
  const double phase = rng.uniform(cfg.phase_min, cfg.phase_max);
  std::vector<double> times;
  times.reserve(cfg.points_per_series);
  for (int i = 0; i < cfg.points_per_series; ++i)
    times.push_back(rng.uniform(0.0, cfg.time_span));
  std::sort(times.begin(), times.end());
  SeriesSet series(1);
  for (double t : times) series.add(TimedPoint(t, {a * std::sin(omega * t + phase)}));
  return series;
}

std::vector<SeriesSet> gen_sinusoid(const SinusoidConfig& cfg) {
  if (cfg.hidden_per_series >= cfg.points_per_series)
    throw std::invalid_argument("hidden_per_series must be below points_per_series");
  std::vector<SeriesSet> out;
  out.reserve(cfg.n_series);
  for (int i = 0; i < cfg.n_series; ++i)
    out.push_back(gen_sinusoid_series(cfg, derive_seed(cfg.seed, 2, i)));
  return out;
}

MaskedSeries mask_series(const SeriesSet& series, const MaskPolicy& policy, uint64_t seed) {
  const int n = static_cast<int>(series.size());
  if (n == 0) throw std::invalid_argument("cannot mask an empty series");
  Rng rng(seed);

  if (policy.mode == MaskMode::PartialDims) {
    MaskedSeries out;
    out.observed = SeriesSet(series.dim);  // merged set lives in `targets`
    out.targets = SeriesSet(series.dim);
    out.truth = SeriesSet(series.dim);
    for (const auto& p : series.points) {
      TimedPoint masked = p;
      int missing = 0;
      for (int d = 0; d < series.dim; ++d) {
        if (rng.uniform() < policy.partial_rate) {
          masked.dim_mask[d] = 0;
          masked.data[d] = 0.0;
          ++missing;
        } else {
          masked.dim_mask[d] = 1;
        }
      }
      masked.observed = missing == 0;
      out.targets.add(masked);
      out.truth.add(p);
    }
    return out;
  }

  if (policy.max_hidden >= n) throw std::invalid_argument("no anchors");
  if (policy.min_hidden > policy.max_hidden || policy.min_hidden < 0)
    throw std::invalid_argument("invalid hidden range");

  for (int attempt = 0;; ++attempt) {
    const int hidden = policy.min_hidden +
                       static_cast<int>(rng.below(policy.max_hidden - policy.min_hidden + 1));
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    // partial Fisher-Yates: first `hidden` entries are the hidden indices
    for (int i = 0; i < hidden; ++i) {
      const int j = i + static_cast<int>(rng.below(n - i));
      std::swap(idx[i], idx[j]);
    }
    std::vector<uint8_t> hide(n, 0);
    for (int i = 0; i < hidden; ++i) hide[idx[i]] = 1;

    MaskedSeries out;
    out.observed = SeriesSet(series.dim);
    out.targets = SeriesSet(series.dim);
    out.truth = SeriesSet(series.dim);
    for (int i = 0; i < n; ++i) {
      const auto& p = series.points[i];
      if (hide[i]) {
        TimedPoint target(p.time, std::vector<double>(series.dim, 0.0), false);
        target.dim_mask.assign(series.dim, 0);
        out.targets.add(target);
        out.truth.add(p);
      } else {
        out.observed.add(p);
      }
    }

    if (policy.max_gap_cap > 0.0 && !out.targets.empty()) {
      const double mg = compute_gaps(out.observed, out.targets).max_gap();
      if (mg > policy.max_gap_cap) {
        if (attempt >= policy.max_retries)
          throw std::runtime_error("mask_series: no schedulable mask found within retry budget");
        continue;
      }
    }
    return out;
  }
}

}  // namespace nrtsi

#include "nrtsi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace nrtsi {

double mse(const std::vector<std::vector<double>>& predictions,
           const std::vector<std::vector<double>>& truth) {
  if (predictions.size() != truth.size())
    throw std::invalid_argument("mse: prediction/truth count mismatch");
  if (predictions.empty()) throw std::invalid_argument("mse: empty inputs");
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != truth[i].size())
      throw std::invalid_argument("mse: dimension mismatch at row " + std::to_string(i));
    for (std::size_t d = 0; d < predictions[i].size(); ++d) {
      const double e = predictions[i][d] - truth[i][d];
      total += e * e;
    }
  }
  return total / static_cast<double>(predictions.size());
}

namespace {

struct Vec2 {
  double x, y;
};

double wall_distance(const Vec2& p, double side) {
  return std::min(std::min(p.x, side - p.x), std::min(p.y, side - p.y));
}

// Intersection of the line through p0 with direction d0 and the line through
// p1 with direction d1; nullopt-ish via bool when near parallel.
bool line_intersection(const Vec2& p0, const Vec2& d0, const Vec2& p1, const Vec2& d1,
                       Vec2& out) {
  const double den = d0.x * d1.y - d0.y * d1.x;
  if (std::abs(den) < 1e-12) return false;
  const double t = ((p1.x - p0.x) * d1.y - (p1.y - p0.y) * d1.x) / den;
  out = {p0.x + t * d0.x, p0.y + t * d0.y};
  return true;
}

}  // namespace

TrajectoryStats trajectory_stats(const std::vector<std::array<double, 2>>& traj,
                                 const TrajectoryStatsConfig& cfg) {
  const int n = static_cast<int>(traj.size());
  if (n < 3) throw std::invalid_argument("trajectory_stats needs at least 3 points");

  std::vector<Vec2> disp(n - 1);
  std::vector<double> mags(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    disp[i] = {traj[i + 1][0] - traj[i][0], traj[i + 1][1] - traj[i][1]};
    mags[i] = std::hypot(disp[i].x, disp[i].y);
  }

  TrajectoryStats st;

  // sinuosity: median over width-`window` sliding windows; zero-chord windows skipped
  std::vector<double> window_ratios;
  const int w = cfg.window;
  if (n >= w) {
    double arc = 0.0;
    for (int i = 0; i < w - 1; ++i) arc += mags[i];
    for (int i = 0; i + w <= n; ++i) {
      const double chord = std::hypot(traj[i + w - 1][0] - traj[i][0],
                                      traj[i + w - 1][1] - traj[i][1]);
      if (chord > 0.0) window_ratios.push_back(arc / chord);
      if (i + w < n) arc += mags[i + w - 1] - mags[i];
    }
  }
  if (!window_ratios.empty()) {
    std::sort(window_ratios.begin(), window_ratios.end());
    st.sinuosity = window_ratios[window_ratios.size() / 2];
  }

  double sc = 0.0;
  for (int i = 0; i + 1 < n - 1; ++i) sc += std::abs(mags[i + 1] - mags[i]);
  st.step_change = sc / static_cast<double>(n - 2);

  double total = 0.0;
  for (double m : mags) total += m;
  st.avg_length = total / static_cast<double>(n - 1);

  // turn vertices
  const double cos_thresh = std::cos(cfg.turn_angle_deg * 3.14159265358979323846 / 180.0);
  std::vector<uint8_t> turn(n, 0);
  for (int i = 1; i < n - 1; ++i) {
    if (mags[i - 1] == 0.0 || mags[i] == 0.0) continue;
    const double c = (disp[i - 1].x * disp[i].x + disp[i - 1].y * disp[i].y) /
                     (mags[i - 1] * mags[i]);
    if (c < cos_thresh) turn[i] = 1;
  }

  const double tol = cfg.wall_tol_factor * cfg.side;
  int events = 0, away = 0;
  for (int i = 1; i < n - 1;) {
    if (!turn[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n - 1 && turn[j + 1]) ++j;
    const Vec2 pin{traj[i - 1][0], traj[i - 1][1]};
    const Vec2 pout{traj[j + 1][0], traj[j + 1][1]};
    Vec2 loc{traj[(i + j) / 2][0], traj[(i + j) / 2][1]};
    Vec2 ix;
    if (line_intersection(pin, disp[i - 1], pout, disp[j], ix)) loc = ix;
    ++events;
    if (wall_distance(loc, cfg.side) > tol) ++away;
    i = j + 1;
  }
  st.reflection_to_wall = events > 0 ? static_cast<double>(away) / events : 0.0;
  return st;
}

StochasticScores stochastic_scores(
    const std::vector<std::vector<std::vector<double>>>& samples,
    const std::vector<std::vector<double>>& truth) {
  if (samples.empty()) throw std::invalid_argument("stochastic_scores: no samples");
  StochasticScores s;
  s.min_mse = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& sample : samples) {
    const double m = mse(sample, truth);
    s.min_mse = std::min(s.min_mse, m);
    total += m;
  }
  s.avg_mse = total / static_cast<double>(samples.size());
  s.ratio = s.min_mse > 0.0 ? s.avg_mse / s.min_mse
                            : std::numeric_limits<double>::infinity();
  return s;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  for (const auto& [k, v] : values) j["metrics"][k] = v;
  for (const auto& [k, v] : config) j["config"][k] = v;
  return j.dump(2);
}

std::string MetricReport::to_csv_row() const {
  std::ostringstream header, row;
  bool first = true;
  for (const auto& [k, v] : values) {
    if (!first) {
      header << ',';
      row << ',';
    }
    first = false;
    header << k;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    row << buf;
  }
  return header.str() + "\n" + row.str() + "\n";
}

}  // namespace nrtsi

#pragma once
#include <array>
#include <map>
#include <string>
#include <vector>

namespace nrtsi {

// Mean over targets of the squared Euclidean error.
double mse(const std::vector<std::vector<double>>& predictions,
           const std::vector<std::vector<double>>& truth);

struct TrajectoryStatsConfig {
  double side = 0.8828;
  double wall_tol_factor = 0.02;  // wall_tol = factor * side
  int window = 10;
  double turn_angle_deg = 15.0;
};

struct TrajectoryStats {
  double sinuosity = 1.0;
  double step_change = 0.0;
  double reflection_to_wall = 0.0;
  double avg_length = 0.0;
};

// Realism statistics of one ordered 2-d trajectory.
//  - sinuosity: median over sliding windows of arc length / chord length.
//  - step_change: mean |difference of consecutive step magnitudes|.
//  - reflection_to_wall: direction changes above the turn angle are grouped
//    into maximal runs; each run is located at the intersection of its
//    bounding straight directions and counts as "away" when that point is
//    farther than wall_tol from every wall.
//  - avg_length: mean step magnitude.
TrajectoryStats trajectory_stats(const std::vector<std::array<double, 2>>& trajectory,
                                 const TrajectoryStatsConfig& cfg);

struct StochasticScores {
  double min_mse = 0.0;
  double avg_mse = 0.0;
  double ratio = 0.0;  // +inf sentinel when min_mse == 0
};

StochasticScores stochastic_scores(
    const std::vector<std::vector<std::vector<double>>>& samples,
    const std::vector<std::vector<double>>& truth);

// Named metric values plus the evaluation configuration that produced them.
struct MetricReport {
  std::map<std::string, double> values;
  std::map<std::string, double> config;

  std::string to_json() const;
  std::string to_csv_row() const;  // header line + value line
};

}  // namespace nrtsi

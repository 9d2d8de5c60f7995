#pragma once
#include <array>
#include <vector>

namespace nrtsi {

// Sinusoidal time embedding: component 2k is sin(t / nu^(2k/tau)), component
// 2k+1 is cos of the same argument, k = 0 .. tau/2 - 1.
struct TimeCodecConfig {
  int tau = 8;        // embedding width, must be even
  double nu = 100.0;  // expected maximum time scale

  TimeCodecConfig() = default;
  TimeCodecConfig(int tau_, double nu_);
};

std::vector<double> encode_time(double t, const TimeCodecConfig& cfg);

// Writes the encoding into out[0..tau-1]; out must have room.
void encode_time_into(double t, const TimeCodecConfig& cfg, double* out);

// Rotation taking the k-th sine-cosine pair of encode_time(t) to the k-th
// pair of encode_time(t + delta_t); row-major [[c, s], [-s, c]].
std::array<double, 4> shift_matrix(double delta_t, int k, const TimeCodecConfig& cfg);

}  // namespace nrtsi

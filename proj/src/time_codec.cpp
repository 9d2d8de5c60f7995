#include "nrtsi/time_codec.hpp"

#include <cmath>
#include <stdexcept>

namespace nrtsi {

TimeCodecConfig::TimeCodecConfig(int tau_, double nu_) : tau(tau_), nu(nu_) {
  if (tau <= 0 || tau % 2 != 0) throw std::invalid_argument("tau must be a positive even integer");
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
}

void encode_time_into(double t, const TimeCodecConfig& cfg, double* out) {
  if (!std::isfinite(t)) throw std::invalid_argument("time must be finite");
  for (int k = 0; k < cfg.tau / 2; ++k) {
    const double omega = std::pow(cfg.nu, -2.0 * k / cfg.tau);
    out[2 * k] = std::sin(t * omega);
    out[2 * k + 1] = std::cos(t * omega);
  }
}

std::vector<double> encode_time(double t, const TimeCodecConfig& cfg) {
  std::vector<double> z(cfg.tau);
  encode_time_into(t, cfg, z.data());
  return z;
}

std::array<double, 4> shift_matrix(double delta_t, int k, const TimeCodecConfig& cfg) {
  if (k < 0 || k >= cfg.tau / 2) throw std::invalid_argument("frequency index out of range");
  const double omega = std::pow(cfg.nu, -2.0 * k / cfg.tau);
  const double c = std::cos(omega * delta_t);
  const double s = std::sin(omega * delta_t);
  return {c, s, -s, c};
}

}  // namespace nrtsi

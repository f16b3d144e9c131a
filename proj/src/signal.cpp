#include "waveinv/signal.hpp"

#include <cmath>
#include <numbers>

namespace waveinv {

Signal::Signal(std::vector<double> samples, double dt) : samples_(std::move(samples)), dt_(dt) {
  if (samples_.size() < 2 || !is_power_of_two(samples_.size())) {
    throw std::invalid_argument("signal length must be a power of two >= 2, got " +
                                std::to_string(samples_.size()));
  }
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
    throw std::invalid_argument("signal sample interval must be positive and finite");
  }
}

double Spectrum::omega(std::size_t k) const {
  return 2.0 * std::numbers::pi * static_cast<double>(k) * df;
}

void require_same_grid(const Signal& a, const Signal& b) {
  if (a.size() != b.size() || a.dt() != b.dt()) {
    throw std::invalid_argument("signals are sampled on different grids");
  }
}

}  // namespace waveinv

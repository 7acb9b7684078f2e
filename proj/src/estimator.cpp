#include "candlekit/estimator.hpp"

namespace candlekit {

std::string_view to_string(WeightProvenance p) noexcept {
  switch (p) {
    case WeightProvenance::Published: return "paper-published";
    case WeightProvenance::Calibrated: return "calibrated";
    case WeightProvenance::Manual: return "manual";
  }
  return "manual";
}

std::optional<WeightVector> published_weights(int k) {
  switch (k) {
    case 5: return WeightVector{0.4106, 1.4550, 0.0013, 5, WeightProvenance::Published};
    case 10: return WeightVector{0.4725, 1.6280, 0.0002, 10, WeightProvenance::Published};
    case 20: return WeightVector{0.5176, 1.7039, 0.0001, 20, WeightProvenance::Published};
    default: return std::nullopt;
  }
}

}  // namespace candlekit

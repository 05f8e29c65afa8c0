#include "pinnrc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pinnrc {

double l2_relative_error(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty() || pred.size() != truth.size()) {
    throw std::invalid_argument("l2_relative_error needs equal non-zero lengths");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    num += d * d;
    den += truth[i] * truth[i];
  }
  if (den == 0.0) throw std::domain_error("l2_relative_error: truth has zero norm");
  return std::sqrt(num) / std::sqrt(den);
}

ErrorMetrics error_metrics(std::span<const double> pred, std::span<const double> truth) {
  ErrorMetrics m;
  m.l2_relative = l2_relative_error(pred, truth);
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = std::abs(pred[i] - truth[i]);
    m.max_abs = std::max(m.max_abs, d);
    sq += d * d;
  }
  m.rmse = std::sqrt(sq / static_cast<double>(pred.size()));
  return m;
}

}  // namespace pinnrc

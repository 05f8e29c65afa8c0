#pragma once

#include <span>

namespace pinnrc {

struct ErrorMetrics {
  double l2_relative = 0.0;
  double max_abs = 0.0;  // amperes
  double rmse = 0.0;     // amperes
};

/// ||pred - truth||_2 / ||truth||_2. Throws std::invalid_argument on empty
/// or mismatched input and std::domain_error when truth has zero norm.
double l2_relative_error(std::span<const double> pred, std::span<const double> truth);

ErrorMetrics error_metrics(std::span<const double> pred, std::span<const double> truth);

}  // namespace pinnrc

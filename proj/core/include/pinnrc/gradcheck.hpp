#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pinnrc/net.hpp"

namespace pinnrc {

/// |a - b| / max(|a|, |b|, floor). The floor keeps entries that are zero
/// up to rounding from dominating the maximum.
double relative_discrepancy(double a, double b, double floor);

struct GradcheckOptions {
  std::uint64_t seed = 20240601;
  double h = 1e-6;          // step for network checks
  double lambda_h = 1e-5;   // step for closed-form parameter derivatives
  double floor = 1e-8;
  // Applied to every analytic network gradient before comparison. Used
  // to prove the suite detects a broken backward pass.
  std::function<void(GradientSet&)> fault;
};

enum class GradcheckKind { tangent, theta, lambda };

struct GradcheckItem {
  GradcheckKind kind = GradcheckKind::theta;
  std::string name;
  double max_discrepancy = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_discrepancy < tolerance; }
};

struct GradcheckResult {
  std::vector<GradcheckItem> items;
  double tangent_max = 0.0;
  double theta_max = 0.0;
  double lambda_max = 0.0;

  static constexpr double tangent_tolerance = 1e-6;
  static constexpr double theta_tolerance = 1e-5;
  static constexpr double lambda_tolerance = 1e-8;

  bool passed() const;
};

/// Finite-difference checks of input tangents, network-parameter
/// gradients (raw backward, forward and inverse losses) and closed-form
/// physical-parameter gradients.
GradcheckResult run_gradcheck(const GradcheckOptions& options = {});

}  // namespace pinnrc

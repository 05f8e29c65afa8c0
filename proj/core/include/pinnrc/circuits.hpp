#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pinnrc {

/// One series R-C branch of the parallel network.
struct RcBranch {
  double r = 0.0;  // ohms
  double c = 0.0;  // farads

  double time_constant() const { return r * c; }
};

/// Parallel RC model of a dielectric under a DC step.
///
/// Case 0 is a single RC branch with no resistive branch. Case k (k >= 1)
/// has a pure resistive branch r0 and k RC branches. Construct through
/// `make` or one of the fixtures so the invariants are checked.
class CircuitCase {
 public:
  static CircuitCase make(double u_dc, std::optional<double> r0,
                          std::vector<RcBranch> branches,
                          std::string label = {});

  /// Fixtures with time constants 1, 10 and 100 s.
  static CircuitCase case0();
  static CircuitCase case1();
  static CircuitCase case2();
  static CircuitCase case3();

  double u_dc() const { return u_dc_; }
  const std::optional<double>& r0() const { return r0_; }
  const std::vector<RcBranch>& branches() const { return branches_; }
  const std::string& label() const { return label_; }

  /// 0 for a lone RC branch, otherwise the number of RC branches.
  int case_index() const;

  /// U_dc / R0, or 0 when there is no resistive branch.
  double steady_current() const;

 private:
  CircuitCase() = default;

  double u_dc_ = 0.0;
  std::optional<double> r0_;
  std::vector<RcBranch> branches_;
  std::string label_;
};

/// Closed-form time interval [0, t_end].
struct TimeDomain {
  double t_end = 10.0;

  static TimeDomain make(double t_end);
  double t_start() const { return 0.0; }
};

// A current component obeying dI/dt + rate * (I - offset) = 0.
//
// The total current splits into one component per RC branch. The first
// component also carries the resistive branch (offset U_dc/R0), so Case 0
// and Case 1 have a single component and Case k >= 2 has k.
struct ComponentOde {
  double rate = 0.0;     // 1 / (R C), 1/s
  double offset = 0.0;   // steady-state current, A
  double initial = 0.0;  // current at t = 0, A
};

std::vector<ComponentOde> components(const CircuitCase& c);
std::size_t component_count(const CircuitCase& c);

double analytical_current(const CircuitCase& c, double t);
double analytical_log_current(const CircuitCase& c, double t);

/// Per-component closed forms and their time derivatives at t.
std::vector<double> analytical_components(const CircuitCase& c, double t);
std::vector<double> analytical_component_derivatives(const CircuitCase& c, double t);

double initial_current(const CircuitCase& c);

/// Residual of the total-current ODE. Only defined for Case 0 and Case 1;
/// larger cases have no scalar first-order ODE and throw
/// `std::invalid_argument` (use `residual_raw_multi`).
double residual_raw(const CircuitCase& c, double t, double i, double di_dt);

/// One residual per component for Case >= 2.
std::vector<double> residual_raw_multi(const CircuitCase& c, double t,
                                       std::span<const double> i,
                                       std::span<const double> di_dt);

/// Residual in u = ln(I). Equals residual_raw(I = e^u, dI = e^u du) / e^u.
double residual_log(const CircuitCase& c, double t, double u, double du_dt);

std::vector<double> residual_log_multi(const CircuitCase& c, double t,
                                       std::span<const double> u,
                                       std::span<const double> du_dt);

/// Component-level residuals shared by the scalar and multi forms.
inline double component_residual_raw(const ComponentOde& ode, double i, double di_dt) {
  return di_dt + ode.rate * (i - ode.offset);
}
double component_residual_log(const ComponentOde& ode, double u, double du_dt);

}  // namespace pinnrc

#include "pinnrc/circuits.hpp"

#include <cmath>
#include <stdexcept>

namespace pinnrc {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::domain_error("time must be finite and >= 0, got " + std::to_string(t));
  }
}

void require_sizes(std::size_t expected, std::size_t a, std::size_t b) {
  if (a != expected || b != expected) {
    throw std::invalid_argument("expected " + std::to_string(expected) +
                                " components, got " + std::to_string(a) + " and " +
                                std::to_string(b));
  }
}

}  // namespace

CircuitCase CircuitCase::make(double u_dc, std::optional<double> r0,
                              std::vector<RcBranch> branches, std::string label) {
  if (!positive_finite(u_dc)) throw std::invalid_argument("u_dc must be positive and finite");
  if (r0 && !positive_finite(*r0)) throw std::invalid_argument("r0 must be positive and finite");
  if (branches.empty()) throw std::invalid_argument("at least one RC branch is required");
  if (!r0 && branches.size() != 1) {
    throw std::invalid_argument("a case without r0 must have exactly one RC branch");
  }
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto& b = branches[i];
    if (!positive_finite(b.r) || !positive_finite(b.c) || !positive_finite(b.time_constant())) {
      throw std::invalid_argument("branch " + std::to_string(i + 1) +
                                  " needs positive finite r, c and r*c");
    }
  }
  CircuitCase out;
  out.u_dc_ = u_dc;
  out.r0_ = r0;
  out.branches_ = std::move(branches);
  out.label_ = label.empty() ? "case" + std::to_string(out.case_index()) : std::move(label);
  return out;
}

CircuitCase CircuitCase::case0() { return make(1.0, std::nullopt, {{1.0, 1.0}}, "case0"); }
CircuitCase CircuitCase::case1() { return make(1.0, 10.0, {{1.0, 1.0}}, "case1"); }
CircuitCase CircuitCase::case2() {
  return make(1.0, 10.0, {{1.0, 1.0}, {2.0, 5.0}}, "case2");
}
CircuitCase CircuitCase::case3() {
  return make(1.0, 10.0, {{1.0, 1.0}, {2.0, 5.0}, {5.0, 20.0}}, "case3");
}

int CircuitCase::case_index() const {
  return r0_ ? static_cast<int>(branches_.size()) : 0;
}

double CircuitCase::steady_current() const { return r0_ ? u_dc_ / *r0_ : 0.0; }

TimeDomain TimeDomain::make(double t_end) {
  if (!positive_finite(t_end)) throw std::invalid_argument("t_end must be positive and finite");
  return TimeDomain{t_end};
}

std::vector<ComponentOde> components(const CircuitCase& c) {
  std::vector<ComponentOde> out;
  out.reserve(c.branches().size());
  for (std::size_t k = 0; k < c.branches().size(); ++k) {
    const auto& b = c.branches()[k];
    ComponentOde ode;
    ode.rate = 1.0 / b.time_constant();
    ode.offset = k == 0 ? c.steady_current() : 0.0;
    ode.initial = ode.offset + c.u_dc() / b.r;
    out.push_back(ode);
  }
  return out;
}

std::size_t component_count(const CircuitCase& c) { return c.branches().size(); }

std::vector<double> analytical_components(const CircuitCase& c, double t) {
  require_time(t);
  std::vector<double> out;
  for (const auto& ode : components(c)) {
    out.push_back(ode.offset + (ode.initial - ode.offset) * std::exp(-ode.rate * t));
  }
  return out;
}

std::vector<double> analytical_component_derivatives(const CircuitCase& c, double t) {
  require_time(t);
  std::vector<double> out;
  for (const auto& ode : components(c)) {
    out.push_back(-ode.rate * (ode.initial - ode.offset) * std::exp(-ode.rate * t));
  }
  return out;
}

double analytical_current(const CircuitCase& c, double t) {
  require_time(t);
  double sum = c.steady_current();
  for (const auto& b : c.branches()) {
    sum += c.u_dc() / b.r * std::exp(-t / b.time_constant());
  }
  return sum;
}

double analytical_log_current(const CircuitCase& c, double t) {
  return std::log(analytical_current(c, t));
}

double initial_current(const CircuitCase& c) {
  double sum = c.steady_current();
  for (const auto& b : c.branches()) sum += c.u_dc() / b.r;
  return sum;
}

double component_residual_log(const ComponentOde& ode, double u, double du_dt) {
  // offset == 0 keeps the exp(-u) term out entirely so huge |u| cannot
  // produce 0 * inf.
  if (ode.offset == 0.0) return du_dt + ode.rate;
  return du_dt + ode.rate * (1.0 - ode.offset * std::exp(-u));
}

double residual_raw(const CircuitCase& c, [[maybe_unused]] double t, double i, double di_dt) {
  if (component_count(c) != 1) {
    throw std::invalid_argument("residual_raw supports Case 0 and Case 1 only; " +
                                c.label() + " needs residual_raw_multi");
  }
  return component_residual_raw(components(c).front(), i, di_dt);
}

std::vector<double> residual_raw_multi(const CircuitCase& c, [[maybe_unused]] double t,
                                       std::span<const double> i,
                                       std::span<const double> di_dt) {
  const auto odes = components(c);
  require_sizes(odes.size(), i.size(), di_dt.size());
  std::vector<double> out(odes.size());
  for (std::size_t k = 0; k < odes.size(); ++k) {
    out[k] = component_residual_raw(odes[k], i[k], di_dt[k]);
  }
  return out;
}

double residual_log(const CircuitCase& c, [[maybe_unused]] double t, double u, double du_dt) {
  if (component_count(c) != 1) {
    throw std::invalid_argument("residual_log on " + c.label() +
                                " is per component; use residual_log_multi");
  }
  return component_residual_log(components(c).front(), u, du_dt);
}

std::vector<double> residual_log_multi(const CircuitCase& c, [[maybe_unused]] double t,
                                       std::span<const double> u,
                                       std::span<const double> du_dt) {
  const auto odes = components(c);
  require_sizes(odes.size(), u.size(), du_dt.size());
  std::vector<double> out(odes.size());
  for (std::size_t k = 0; k < odes.size(); ++k) {
    out[k] = component_residual_log(odes[k], u[k], du_dt[k]);
  }
  return out;
}

}  // namespace pinnrc

#include "pinnrc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace pinnrc {

std::string_view to_string(Formulation f) { return f == Formulation::raw ? "raw" : "log"; }

std::string_view to_string(Sampling s) {
  return s == Sampling::equispaced ? "equispaced" : "uniform";
}

Formulation parse_formulation(std::string_view s) {
  if (s == "raw") return Formulation::raw;
  if (s == "log") return Formulation::log;
  throw std::invalid_argument("formulation must be \"raw\" or \"log\", got \"" + std::string(s) +
                              "\"");
}

Sampling parse_sampling(std::string_view s) {
  if (s == "equispaced") return Sampling::equispaced;
  if (s == "uniform") return Sampling::uniform;
  throw std::invalid_argument("sampling must be \"equispaced\" or \"uniform\", got \"" +
                              std::string(s) + "\"");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& rule) {
    throw std::invalid_argument(field + " " + rule);
  };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail("learning_rate", "must be positive and finite");
  }
  if (param_learning_rate && (!(*param_learning_rate > 0.0) || !std::isfinite(*param_learning_rate))) {
    fail("param_learning_rate", "must be positive and finite");
  }
  if (iterations <= 0) fail("iterations", "must be > 0");
  if (n_collocation < 2) fail("n_collocation", "must be >= 2");
  if (n_test < 0 || n_test == 1) fail("n_test", "must be 0 (auto) or >= 2");
  if (log_every <= 0) fail("log_every", "must be > 0");
  if (hidden_layers < 1) fail("hidden_layers", "must be >= 1");
  if (hidden_width < 1) fail("hidden_width", "must be >= 1");
  const double ws[] = {weights.ic, weights.pde, weights.data};
  const char* names[] = {"loss_weights.ic", "loss_weights.pde", "loss_weights.data"};
  for (int i = 0; i < 3; ++i) {
    if (!(ws[i] >= 0.0) || !std::isfinite(ws[i])) fail(names[i], "must be finite and >= 0");
  }
  if (!(domain.t_end > 0.0) || !std::isfinite(domain.t_end)) fail("t_end", "must be positive");
}

std::vector<int> TrainConfig::layer_sizes(std::size_t outputs) const {
  return default_layer_sizes(static_cast<int>(outputs), hidden_layers, hidden_width);
}

std::vector<double> scale_times(const TimeDomain& d, std::span<const double> times) {
  std::vector<double> out(times.size());
  std::transform(times.begin(), times.end(), out.begin(),
                 [&](double t) { return scale_time(d, t); });
  return out;
}

std::vector<double> sample_collocation(const TimeDomain& domain, int n) {
  if (n < 2) throw std::invalid_argument("collocation count must be >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[k] = domain.t_end * k / (n - 1);
  out.back() = domain.t_end;
  return out;
}

std::vector<double> sample_collocation_uniform(const TimeDomain& domain, int n,
                                               std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("collocation count must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, domain.t_end);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& t : out) t = dist(rng);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> sample_collocation(const TrainConfig& config) {
  if (config.sampling == Sampling::uniform) {
    return sample_collocation_uniform(config.domain, config.n_collocation, config.seed);
  }
  return sample_collocation(config.domain, config.n_collocation);
}

namespace {

void require_width(const Mlp& net, std::size_t components) {
  if (static_cast<std::size_t>(net.output_width()) != components) {
    throw std::invalid_argument("network has " + std::to_string(net.output_width()) +
                                " outputs but the case has " + std::to_string(components) +
                                " current components");
  }
}

}  // namespace

ComponentLoss pde_loss(const Mlp& net, std::span<const ComponentOde> odes,
                       const TimeDomain& domain, std::span<const double> points,
                       Formulation formulation) {
  require_width(net, odes.size());
  if (points.empty()) throw std::invalid_argument("pde_loss needs at least one point");

  const auto scaled = scale_times(domain, points);
  const TangentEval ev = forward_tangent(net, scaled);
  const double chain = time_chain_factor(domain);
  const auto n = static_cast<double>(points.size());
  const auto k_count = static_cast<Eigen::Index>(odes.size());

  ComponentLoss out;
  out.d_rate.assign(odes.size(), 0.0);
  out.d_offset.assign(odes.size(), 0.0);
  out.d_initial.assign(odes.size(), 0.0);
  Eigen::MatrixXd seed_u(k_count, ev.batch());
  Eigen::MatrixXd seed_du(k_count, ev.batch());

  for (Eigen::Index k = 0; k < k_count; ++k) {
    const ComponentOde& ode = odes[k];
    double sum = 0.0;
    for (Eigen::Index j = 0; j < ev.batch(); ++j) {
      const double u = ev.u(k, j);
      const double du = chain * ev.du(k, j);
      double r, dr_du, dr_drate, dr_doffset;
      if (formulation == Formulation::raw) {
        r = du + ode.rate * (u - ode.offset);
        dr_du = ode.rate;
        dr_drate = u - ode.offset;
        dr_doffset = -ode.rate;
      } else {
        const double e = ode.offset == 0.0 ? 0.0 : std::exp(-u);
        r = du + ode.rate * (1.0 - ode.offset * e);
        dr_du = ode.rate * ode.offset * e;
        dr_drate = 1.0 - ode.offset * e;
        dr_doffset = -ode.rate * e;
      }
      sum += r * r;
      const double adj = 2.0 * r / n;
      seed_u(k, j) = adj * dr_du;
      seed_du(k, j) = adj * chain;
      out.d_rate[k] += adj * dr_drate;
      out.d_offset[k] += adj * dr_doffset;
    }
    out.value += sum / n;
  }
  out.grad = backward(net, ev, seed_u, seed_du);
  return out;
}

ComponentLoss ic_loss(const Mlp& net, std::span<const ComponentOde> odes,
                      const TimeDomain& domain, Formulation formulation) {
  require_width(net, odes.size());
  const TangentEval ev = forward_tangent(net, scale_time(domain, 0.0));
  const auto k_count = static_cast<Eigen::Index>(odes.size());

  ComponentLoss out;
  out.d_rate.assign(odes.size(), 0.0);
  out.d_offset.assign(odes.size(), 0.0);
  out.d_initial.assign(odes.size(), 0.0);
  Eigen::MatrixXd seed_u(k_count, 1);
  const Eigen::MatrixXd seed_du = Eigen::MatrixXd::Zero(k_count, 1);

  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double init = odes[k].initial;
    const double target = formulation == Formulation::raw ? init : std::log(init);
    const double diff = ev.u(k, 0) - target;
    out.value += diff * diff;
    seed_u(k, 0) = 2.0 * diff;
    out.d_initial[k] = formulation == Formulation::raw ? -2.0 * diff : -2.0 * diff / init;
  }
  out.grad = backward(net, ev, seed_u, seed_du);
  return out;
}

LossTerm pde_loss(const Mlp& net, const CircuitCase& c, const TimeDomain& domain,
                  std::span<const double> points, Formulation formulation) {
  const auto odes = components(c);
  auto l = pde_loss(net, odes, domain, points, formulation);
  return {l.value, std::move(l.grad)};
}

LossTerm ic_loss(const Mlp& net, const CircuitCase& c, const TimeDomain& domain,
                 Formulation formulation) {
  const auto odes = components(c);
  auto l = ic_loss(net, odes, domain, formulation);
  return {l.value, std::move(l.grad)};
}

std::vector<double> predict(const Mlp& net, const TimeDomain& domain, Formulation formulation,
                            std::span<const double> times) {
  const auto scaled = scale_times(domain, times);
  const Eigen::MatrixXd u = forward(net, scaled);
  std::vector<double> out(times.size());
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    out[j] = formulation == Formulation::raw ? u.col(j).sum() : u.col(j).array().exp().sum();
  }
  return out;
}

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::beta1, t);
  const double c2 = 1.0 - std::pow(AdamState::beta2, t);
  state.m = AdamState::beta1 * state.m + (1.0 - AdamState::beta1) * grads;
  state.v = AdamState::beta2 * state.v + (1.0 - AdamState::beta2) * grads.cwiseAbs2();
  params.array() -= lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + AdamState::epsilon);
}

FitReport train_forward(const CircuitCase& c, const TrainConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  const auto odes = components(c);
  Mlp net = Mlp::init(config.layer_sizes(odes.size()), config.seed);
  const auto points = sample_collocation(config);
  AdamState adam(static_cast<Eigen::Index>(net.size()));

  FitReport report;
  double best_total = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_values = net.values();
  for (long it = 0;; ++it) {
    auto pde = pde_loss(net, odes, config.domain, points, config.formulation);
    auto ic = ic_loss(net, odes, config.domain, config.formulation);
    LossBreakdown loss;
    loss.pde = pde.value;
    loss.ic = ic.value;
    loss.total = config.weights.pde * loss.pde + config.weights.ic * loss.ic;
    if (!std::isfinite(loss.total)) {
      throw TrainingDiverged(it, "training diverged at iteration " + std::to_string(it));
    }
    const bool last = it == config.iterations;
    if (it % config.log_every == 0 || last) report.history.push_back({it, loss});
    if (loss.total < best_total) {
      best_total = loss.total;
      best_values = net.values();
      report.best_iteration = it;
    }
    if (last) break;

    pde.grad *= config.weights.pde;
    ic.grad *= config.weights.ic;
    pde.grad += ic.grad;
    adam_step(net.values(), pde.grad.values(), adam, config.learning_rate);
  }

  if (config.keep_best) {
    net.values() = best_values;
  } else {
    report.best_iteration = config.iterations;
  }
  report.test_times = sample_collocation(config.domain, config.test_points());
  report.predicted = predict(net, config.domain, config.formulation, report.test_times);
  report.truth.reserve(report.test_times.size());
  for (double t : report.test_times) report.truth.push_back(analytical_current(c, t));
  report.metrics = error_metrics(report.predicted, report.truth);
  report.l2_relative_error = report.metrics.l2_relative;
  report.final_model = std::move(net);
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace pinnrc

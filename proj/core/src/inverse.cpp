#include "pinnrc/inverse.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pinnrc {

// ---------------------------------------------------------------------------
// TrainableParams

TrainableParams TrainableParams::from_case(const CircuitCase& c, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("initial parameter scale must be positive");
  }
  TrainableParams p;
  p.has_r0 = c.r0().has_value();
  if (p.has_r0) p.log_r.push_back(std::log(*c.r0() * scale));
  for (const auto& b : c.branches()) {
    p.log_r.push_back(std::log(b.r * scale));
    p.log_c.push_back(std::log(b.c * scale));
  }
  p.free_r.assign(p.log_r.size(), true);
  p.free_c.assign(p.log_c.size(), true);
  return p;
}

bool TrainableParams::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v) && std::isfinite(std::exp(v)); };
  return std::all_of(log_r.begin(), log_r.end(), finite) &&
         std::all_of(log_c.begin(), log_c.end(), finite);
}

void TrainableParams::freeze_all() {
  free_r.assign(log_r.size(), false);
  free_c.assign(log_c.size(), false);
}

void TrainableParams::validate() const {
  if (log_c.empty()) throw std::invalid_argument("at least one RC branch is required");
  if (log_r.size() != log_c.size() + (has_r0 ? 1 : 0)) {
    throw std::invalid_argument("log_r/log_c sizes do not match the branch structure");
  }
  if (!has_r0 && log_c.size() != 1) {
    throw std::invalid_argument("a case without r0 must have exactly one RC branch");
  }
  if (free_r.size() != log_r.size() || free_c.size() != log_c.size()) {
    throw std::invalid_argument("parameter mask sizes do not match the parameters");
  }
  if (!all_finite()) throw std::invalid_argument("parameters must be finite and positive");
}

std::vector<ComponentOde> TrainableParams::components(double u_dc) const {
  const std::size_t off = has_r0 ? 1 : 0;
  std::vector<ComponentOde> out(log_c.size());
  for (std::size_t k = 0; k < log_c.size(); ++k) {
    const double lr = log_r[k + off];
    out[k].rate = std::exp(-lr - log_c[k]);
    out[k].offset = (k == 0 && has_r0) ? u_dc * std::exp(-log_r[0]) : 0.0;
    out[k].initial = out[k].offset + u_dc * std::exp(-lr);
  }
  return out;
}

CircuitCase TrainableParams::to_case(double u_dc) const {
  const std::size_t off = has_r0 ? 1 : 0;
  std::vector<RcBranch> branches;
  for (std::size_t k = 0; k < log_c.size(); ++k) {
    branches.push_back({std::exp(log_r[k + off]), std::exp(log_c[k])});
  }
  std::optional<double> r0;
  if (has_r0) r0 = std::exp(log_r[0]);
  return CircuitCase::make(u_dc, r0, std::move(branches), "estimate");
}

std::vector<std::string> TrainableParams::names() const {
  std::vector<std::string> out;
  if (has_r0) out.push_back("r0");
  for (std::size_t k = 0; k < log_c.size(); ++k) out.push_back("r" + std::to_string(k + 1));
  for (std::size_t k = 0; k < log_c.size(); ++k) out.push_back("c" + std::to_string(k + 1));
  return out;
}

std::vector<double> TrainableParams::values() const {
  std::vector<double> out;
  for (double v : log_r) out.push_back(std::exp(v));
  for (double v : log_c) out.push_back(std::exp(v));
  return out;
}

ParamGradient chain_component_gradient(const TrainableParams& p, double u_dc,
                                       std::span<const double> d_rate,
                                       std::span<const double> d_offset,
                                       std::span<const double> d_initial) {
  const auto odes = p.components(u_dc);
  if (d_rate.size() != odes.size() || d_offset.size() != odes.size() ||
      d_initial.size() != odes.size()) {
    throw std::invalid_argument("component sensitivity count mismatch");
  }
  const std::size_t off = p.has_r0 ? 1 : 0;
  ParamGradient g;
  g.log_r.assign(p.log_r.size(), 0.0);
  g.log_c.assign(p.log_c.size(), 0.0);
  for (std::size_t k = 0; k < odes.size(); ++k) {
    // rate = exp(-lr - lc); initial = offset + U exp(-lr); offset = U exp(-lr0).
    const double branch_current = u_dc * std::exp(-p.log_r[k + off]);
    g.log_r[k + off] += -odes[k].rate * d_rate[k] - branch_current * d_initial[k];
    g.log_c[k] += -odes[k].rate * d_rate[k];
  }
  if (p.has_r0) g.log_r[0] += -odes[0].offset * (d_offset[0] + d_initial[0]);

  for (std::size_t i = 0; i < g.log_r.size(); ++i) {
    if (!p.free_r[i]) g.log_r[i] = 0.0;
  }
  for (std::size_t i = 0; i < g.log_c.size(); ++i) {
    if (!p.free_c[i]) g.log_c[i] = 0.0;
  }
  return g;
}

std::vector<ParamResidual> residual_with_params(const TrainableParams& params, double u_dc,
                                                [[maybe_unused]] double t,
                                                std::span<const double> u,
                                                std::span<const double> du_dt,
                                                Formulation formulation) {
  const auto odes = params.components(u_dc);
  if (u.size() != odes.size() || du_dt.size() != odes.size()) {
    throw std::invalid_argument("residual_with_params: expected " +
                                std::to_string(odes.size()) + " components");
  }
  std::vector<ParamResidual> out(odes.size());
  const std::vector<double> zeros(odes.size(), 0.0);
  for (std::size_t k = 0; k < odes.size(); ++k) {
    const ComponentOde& ode = odes[k];
    std::vector<double> d_rate(odes.size(), 0.0);
    std::vector<double> d_offset(odes.size(), 0.0);
    ParamResidual& r = out[k];
    r.d_du = 1.0;
    if (formulation == Formulation::raw) {
      r.value = component_residual_raw(ode, u[k], du_dt[k]);
      r.d_u = ode.rate;
      d_rate[k] = u[k] - ode.offset;
      d_offset[k] = -ode.rate;
    } else {
      const double e = ode.offset == 0.0 ? 0.0 : std::exp(-u[k]);
      r.value = component_residual_log(ode, u[k], du_dt[k]);
      r.d_u = ode.rate * ode.offset * e;
      d_rate[k] = 1.0 - ode.offset * e;
      d_offset[k] = -ode.rate * e;
    }
    auto g = chain_component_gradient(params, u_dc, d_rate, d_offset, zeros);
    r.d_log_r = std::move(g.log_r);
    r.d_log_c = std::move(g.log_c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
  if (times.size() != currents.size()) {
    throw std::invalid_argument("dataset times and currents differ in length");
  }
  if (times.empty()) throw std::invalid_argument("dataset is empty");
  for (std::size_t j = 0; j < times.size(); ++j) {
    const std::string row = "dataset row " + std::to_string(j + 1);
    if (!std::isfinite(times[j]) || times[j] < 0.0) {
      throw std::invalid_argument(row + ": time must be finite and >= 0");
    }
    if (j > 0 && !(times[j] > times[j - 1])) {
      throw std::invalid_argument(row + ": times must be strictly increasing");
    }
    if (!std::isfinite(currents[j]) || !(currents[j] > 0.0)) {
      throw std::invalid_argument(row + ": current must be finite and > 0");
    }
  }
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
}

bool Dataset::contains_origin() const { return !times.empty() && times.front() == 0.0; }

Dataset generate_synthetic(const CircuitCase& c, std::span<const double> times,
                           double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw std::invalid_argument("noise_sigma must be finite and >= 0");
  }
  Dataset d;
  d.provenance = Provenance::synthetic;
  d.noise_sigma = noise_sigma;
  d.times.assign(times.begin(), times.end());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double t : times) {
    const double exact = analytical_current(c, t);
    if (noise_sigma == 0.0) {
      d.currents.push_back(exact);
      continue;
    }
    double factor;
    do {
      factor = 1.0 + noise_sigma * normal(rng);
    } while (!(factor > 0.0));
    d.currents.push_back(exact * factor);
  }
  return d;
}

std::string dataset_csv(const Dataset& d) {
  std::string out = "t,i\n";
  char buf[64];
  for (std::size_t j = 0; j < d.times.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", d.times[j], d.currents[j]);
    out += buf;
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_number(std::string_view field, std::size_t row) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::invalid_argument("dataset row " + std::to_string(row) + ": cannot parse \"" +
                                std::string(field) + "\"");
  }
  return v;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "t,i") {
    throw std::invalid_argument("dataset CSV must start with the header \"t,i\"");
  }
  Dataset d;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    ++row;
    const auto comma = view.find(',');
    if (comma == std::string_view::npos || view.find(',', comma + 1) != std::string_view::npos) {
      throw std::invalid_argument("dataset row " + std::to_string(row) +
                                  ": expected two comma-separated fields");
    }
    d.times.push_back(parse_number(view.substr(0, comma), row));
    d.currents.push_back(parse_number(view.substr(comma + 1), row));
  }
  d.validate();
  return d;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset_csv(buf.str());
}

LossTerm data_loss(const Mlp& net, const TimeDomain& domain, const Dataset& data,
                   Formulation formulation) {
  if (data.times.empty() || data.times.size() != data.currents.size()) {
    throw std::invalid_argument("data_loss needs a non-empty dataset");
  }
  const auto scaled = scale_times(domain, data.times);
  const TangentEval ev = forward_tangent(net, scaled);
  const auto n = static_cast<double>(data.times.size());
  Eigen::MatrixXd seed_u(ev.u.rows(), ev.u.cols());
  const Eigen::MatrixXd seed_du = Eigen::MatrixXd::Zero(ev.u.rows(), ev.u.cols());

  LossTerm out;
  for (Eigen::Index j = 0; j < ev.batch(); ++j) {
    const auto col = ev.u.col(j).array();
    if (formulation == Formulation::raw) {
      const double res = col.sum() - data.currents[j];
      out.value += res * res / n;
      seed_u.col(j).setConstant(2.0 * res / n);
    } else {
      const double m = col.maxCoeff();
      const double lse = m + std::log((col - m).exp().sum());
      const double res = lse - std::log(data.currents[j]);
      out.value += res * res / n;
      seed_u.col(j) = (2.0 * res / n) * (col - lse).exp().matrix();
    }
  }
  out.grad = backward(net, ev, seed_u, seed_du);
  return out;
}

// ---------------------------------------------------------------------------
// Joint training

namespace {

void check_structure(const CircuitCase& c, const TrainableParams& p) {
  if (p.has_r0 != c.r0().has_value() || p.log_c.size() != c.branches().size()) {
    throw std::invalid_argument("initial parameters do not match the case structure");
  }
}

Eigen::VectorXd pack(const std::vector<double>& log_r, const std::vector<double>& log_c) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(log_r.size() + log_c.size()));
  Eigen::Index i = 0;
  for (double x : log_r) v(i++) = x;
  for (double x : log_c) v(i++) = x;
  return v;
}

void unpack(const Eigen::VectorXd& v, TrainableParams& p) {
  Eigen::Index i = 0;
  for (double& x : p.log_r) x = v(i++);
  for (double& x : p.log_c) x = v(i++);
}

}  // namespace

InverseReport train_inverse(const CircuitCase& case_template, const Dataset& dataset,
                            const TrainConfig& config, const TrainableParams& init) {
  config.validate();
  dataset.validate();
  init.validate();
  check_structure(case_template, init);
  if (dataset.times.back() > config.domain.t_end) {
    throw std::invalid_argument("dataset extends beyond the time domain");
  }
  const auto start = std::chrono::steady_clock::now();
  const double u_dc = case_template.u_dc();
  const Formulation form = config.formulation;
  const LossWeights& w = config.weights;

  TrainableParams params = init;
  Mlp net = Mlp::init(config.layer_sizes(init.log_c.size()), config.seed);
  const auto points = sample_collocation(config);
  AdamState adam_net(static_cast<Eigen::Index>(net.size()));
  AdamState adam_params(static_cast<Eigen::Index>(params.size()));
  const double param_lr = config.param_learning_rate.value_or(config.learning_rate);

  InverseReport report;
  double best_total = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_net = net.values();
  TrainableParams best_params = params;

  for (long it = 0;; ++it) {
    const auto odes = params.components(u_dc);
    auto pde = pde_loss(net, odes, config.domain, points, form);
    std::optional<ComponentLoss> ic;
    if (config.include_ic) ic = ic_loss(net, odes, config.domain, form);
    auto data = data_loss(net, config.domain, dataset, form);

    LossBreakdown loss;
    loss.pde = pde.value;
    loss.ic = ic ? ic->value : 0.0;
    loss.data = data.value;
    loss.total = w.pde * loss.pde + w.ic * loss.ic + w.data * loss.data;
    if (!std::isfinite(loss.total) || !params.all_finite()) {
      throw TrainingDiverged(it, "inverse training diverged at iteration " + std::to_string(it));
    }
    const bool last = it == config.iterations;
    if (it % config.log_every == 0 || last) report.history.push_back({it, loss});
    if (loss.total < best_total) {
      best_total = loss.total;
      best_net = net.values();
      best_params = params;
      report.best_iteration = it;
    }
    if (last) break;

    // Network gradient.
    pde.grad *= w.pde;
    if (ic) {
      ic->grad *= w.ic;
      pde.grad += ic->grad;
    }
    data.grad *= w.data;
    pde.grad += data.grad;

    // Physical-parameter gradient through the component ODEs.
    const std::size_t k_count = odes.size();
    std::vector<double> d_rate(k_count), d_offset(k_count), d_initial(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      d_rate[k] = w.pde * pde.d_rate[k];
      d_offset[k] = w.pde * pde.d_offset[k];
      d_initial[k] = ic ? w.ic * ic->d_initial[k] : 0.0;
    }
    const ParamGradient pg = chain_component_gradient(params, u_dc, d_rate, d_offset, d_initial);

    adam_step(net.values(), pde.grad.values(), adam_net, config.learning_rate);
    Eigen::VectorXd packed = pack(params.log_r, params.log_c);
    adam_step(packed, pack(pg.log_r, pg.log_c), adam_params, param_lr);
    unpack(packed, params);
  }

  if (config.keep_best) {
    net.values() = best_net;
    params = best_params;
  } else {
    report.best_iteration = config.iterations;
  }

  report.truth_known = dataset.provenance == Provenance::synthetic;
  const auto names = params.names();
  const auto estimates = params.values();
  const auto truths = TrainableParams::from_case(case_template).values();
  for (std::size_t i = 0; i < names.size(); ++i) {
    ParamEstimate e{names[i], estimates[i], std::nullopt, std::nullopt};
    if (report.truth_known) {
      e.truth = truths[i];
      e.relative_error = std::abs(estimates[i] - truths[i]) / truths[i];
    }
    report.estimates.push_back(std::move(e));
  }

  if (report.truth_known) {
    report.test_times = sample_collocation(config.domain, config.test_points());
    for (double t : report.test_times) {
      report.reference.push_back(analytical_current(case_template, t));
    }
  } else {
    report.test_times = dataset.times;
    report.reference = dataset.currents;
  }
  report.predicted = predict(net, config.domain, form, report.test_times);
  report.metrics = error_metrics(report.predicted, report.reference);
  report.final_model = std::move(net);
  report.recovered = std::move(params);
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace pinnrc

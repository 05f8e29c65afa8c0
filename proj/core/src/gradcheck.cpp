#include "pinnrc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pinnrc/circuits.hpp"
#include "pinnrc/inverse.hpp"
#include "pinnrc/training.hpp"

namespace pinnrc {

double relative_discrepancy(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

bool GradcheckResult::passed() const {
  return std::all_of(items.begin(), items.end(), [](const auto& i) { return i.passed(); });
}

namespace {

Mlp random_net(const std::vector<int>& sizes, std::mt19937_64& rng) {
  Mlp net = Mlp::init(sizes, rng());
  std::uniform_real_distribution<double> bias(-0.5, 0.5);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (auto& b : net.bias(l)) b = bias(rng);
  }
  return net;
}

template <class Loss>
double theta_discrepancy(const Mlp& net, Loss loss, const GradcheckOptions& opt) {
  LossTerm analytic = loss(net);
  if (opt.fault) opt.fault(analytic.grad);
  double worst = 0.0;
  Mlp probe = net;
  for (Eigen::Index p = 0; p < net.values().size(); ++p) {
    const double saved = probe.values()(p);
    probe.values()(p) = saved + opt.h;
    const double up = loss(probe).value;
    probe.values()(p) = saved - opt.h;
    const double down = loss(probe).value;
    probe.values()(p) = saved;
    const double numeric = (up - down) / (2.0 * opt.h);
    worst = std::max(worst, relative_discrepancy(analytic.grad.values()(p), numeric, opt.floor));
  }
  return worst;
}

GradcheckItem tangent_item(std::mt19937_64& rng, const GradcheckOptions& opt) {
  GradcheckItem item{GradcheckKind::tangent, "tangent du/dt, 100 random 1-8-8-1 nets", 0.0,
                     GradcheckResult::tangent_tolerance};
  std::uniform_real_distribution<double> input(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Mlp net = random_net({1, 8, 8, 1}, rng);
    const double t = input(rng);
    const double analytic = forward_tangent(net, t).du(0, 0);
    const double numeric = (forward(net, t + opt.h)(0) - forward(net, t - opt.h)(0)) / (2.0 * opt.h);
    item.max_discrepancy =
        std::max(item.max_discrepancy, relative_discrepancy(analytic, numeric, opt.floor));
  }
  return item;
}

GradcheckItem backward_item(std::mt19937_64& rng, const GradcheckOptions& opt) {
  const Mlp net = random_net({1, 8, 8, 1}, rng);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> inputs(16);
  for (auto& x : inputs) x = unit(rng);
  Eigen::MatrixXd seed_u(1, 16);
  Eigen::MatrixXd seed_du(1, 16);
  for (Eigen::Index j = 0; j < 16; ++j) {
    seed_u(0, j) = unit(rng);
    seed_du(0, j) = unit(rng);
  }
  auto objective = [&](const Mlp& m) {
    const TangentEval ev = forward_tangent(m, inputs);
    LossTerm out;
    out.value = (seed_u.array() * ev.u.array()).sum() + (seed_du.array() * ev.du.array()).sum();
    out.grad = backward(m, ev, seed_u, seed_du);
    return out;
  };
  return {GradcheckKind::theta, "backward seed_u.u + seed_du.du, 1-8-8-1 x 16 inputs", theta_discrepancy(net, objective, opt),
          GradcheckResult::theta_tolerance};
}

GradcheckItem forward_loss_item(const CircuitCase& c, Formulation form, std::vector<int> hidden,
                                std::mt19937_64& rng, const GradcheckOptions& opt) {
  std::vector<int> sizes{1};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(static_cast<int>(component_count(c)));
  const Mlp net = random_net(sizes, rng);
  const TimeDomain domain{10.0};
  const auto points = sample_collocation(domain, 5);
  auto total = [&](const Mlp& m) {
    LossTerm pde = pde_loss(m, c, domain, points, form);
    LossTerm ic = ic_loss(m, c, domain, form);
    pde.value += ic.value;
    pde.grad += ic.grad;
    return pde;
  };
  std::string name = "forward total loss " + c.label() + " " + std::string(to_string(form));
  return {GradcheckKind::theta, name, theta_discrepancy(net, total, opt), GradcheckResult::theta_tolerance};
}

GradcheckItem inverse_loss_item(std::mt19937_64& rng, const GradcheckOptions& opt) {
  const CircuitCase c = CircuitCase::case1();
  const Mlp net = random_net({1, 8, 8, 1}, rng);
  const TimeDomain domain{10.0};
  const auto points = sample_collocation(domain, 5);
  const Dataset data = generate_synthetic(c, sample_collocation(domain, 7), 0.0, 1);
  const auto odes = TrainableParams::from_case(c, 0.7).components(c.u_dc());
  auto total = [&](const Mlp& m) {
    auto pde = pde_loss(m, odes, domain, points, Formulation::log);
    auto ic = ic_loss(m, odes, domain, Formulation::log);
    LossTerm d = data_loss(m, domain, data, Formulation::log);
    LossTerm out{pde.value + ic.value + d.value, std::move(pde.grad)};
    out.grad += ic.grad;
    out.grad += d.grad;
    return out;
  };
  return {GradcheckKind::theta, "inverse total loss case1 log (network parameters)", theta_discrepancy(net, total, opt),
          GradcheckResult::theta_tolerance};
}

// Central differences of f over every free log parameter, compared with
// the analytic gradient.
template <class F>
double lambda_discrepancy(const TrainableParams& params, const ParamGradient& analytic, F f,
                          const GradcheckOptions& opt) {
  double worst = 0.0;
  auto sweep = [&](std::vector<double> TrainableParams::*field,
                   const std::vector<double>& grad) {
    for (std::size_t i = 0; i < (params.*field).size(); ++i) {
      TrainableParams up = params;
      TrainableParams down = params;
      (up.*field)[i] += opt.lambda_h;
      (down.*field)[i] -= opt.lambda_h;
      const double numeric = (f(up) - f(down)) / (2.0 * opt.lambda_h);
      worst = std::max(worst, relative_discrepancy(grad[i], numeric, opt.floor));
    }
  };
  sweep(&TrainableParams::log_r, analytic.log_r);
  sweep(&TrainableParams::log_c, analytic.log_c);
  return worst;
}

GradcheckItem lambda_residual_item(std::mt19937_64& rng, const GradcheckOptions& opt) {
  GradcheckItem item{GradcheckKind::lambda, "closed-form residual d/d(log R, log C), cases 0-3 raw+log", 0.0,
                     GradcheckResult::lambda_tolerance};
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const CircuitCase cases[] = {CircuitCase::case0(), CircuitCase::case1(), CircuitCase::case2(),
                               CircuitCase::case3()};
  for (const auto& c : cases) {
    for (Formulation form : {Formulation::raw, Formulation::log}) {
      for (int trial = 0; trial < 8; ++trial) {
        TrainableParams p = TrainableParams::from_case(c);
        for (auto& v : p.log_r) v += 0.3 * unit(rng);
        for (auto& v : p.log_c) v += 0.3 * unit(rng);
        std::vector<double> u(component_count(c));
        std::vector<double> du(component_count(c));
        for (auto& v : u) v = form == Formulation::raw ? 1.0 + unit(rng) : unit(rng);
        for (auto& v : du) v = unit(rng);
        const auto res = residual_with_params(p, c.u_dc(), 0.0, u, du, form);
        for (std::size_t k = 0; k < res.size(); ++k) {
          auto f = [&](const TrainableParams& q) {
            return residual_with_params(q, c.u_dc(), 0.0, u, du, form)[k].value;
          };
          const double d = lambda_discrepancy(p, {res[k].d_log_r, res[k].d_log_c}, f, opt);
          item.max_discrepancy = std::max(item.max_discrepancy, d);
        }
      }
    }
  }
  return item;
}

GradcheckItem lambda_loss_item(std::mt19937_64& rng, const GradcheckOptions& opt) {
  GradcheckItem item{GradcheckKind::lambda, "inverse pde+ic loss d/d(log R, log C), cases 0-2 raw+log", 0.0,
                     GradcheckResult::lambda_tolerance};
  const TimeDomain domain{10.0};
  const auto points = sample_collocation(domain, 5);
  for (const auto& c : {CircuitCase::case0(), CircuitCase::case1(), CircuitCase::case2()}) {
    for (Formulation form : {Formulation::raw, Formulation::log}) {
      const Mlp net = random_net({1, 8, static_cast<int>(component_count(c))}, rng);
      const TrainableParams p = TrainableParams::from_case(c, 0.8);
      auto loss = [&](const TrainableParams& q) {
        const auto odes = q.components(c.u_dc());
        return pde_loss(net, odes, domain, points, form).value +
               ic_loss(net, odes, domain, form).value;
      };
      const auto odes = p.components(c.u_dc());
      const auto pde = pde_loss(net, odes, domain, points, form);
      const auto ic = ic_loss(net, odes, domain, form);
      const auto g = chain_component_gradient(p, c.u_dc(), pde.d_rate, pde.d_offset, ic.d_initial);
      item.max_discrepancy = std::max(item.max_discrepancy, lambda_discrepancy(p, g, loss, opt));
    }
  }
  return item;
}

}  // namespace

GradcheckResult run_gradcheck(const GradcheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  GradcheckResult result;
  result.items.push_back(tangent_item(rng, options));
  result.items.push_back(backward_item(rng, options));
  result.items.push_back(forward_loss_item(CircuitCase::case0(), Formulation::raw, {8}, rng, options));
  result.items.push_back(forward_loss_item(CircuitCase::case0(), Formulation::log, {8, 8}, rng, options));
  result.items.push_back(forward_loss_item(CircuitCase::case1(), Formulation::raw, {8, 8}, rng, options));
  result.items.push_back(forward_loss_item(CircuitCase::case1(), Formulation::log, {8, 8}, rng, options));
  result.items.push_back(forward_loss_item(CircuitCase::case2(), Formulation::raw, {8, 8}, rng, options));
  result.items.push_back(forward_loss_item(CircuitCase::case3(), Formulation::log, {8, 8}, rng, options));
  result.items.push_back(inverse_loss_item(rng, options));
  result.items.push_back(lambda_residual_item(rng, options));
  result.items.push_back(lambda_loss_item(rng, options));

  for (const auto& item : result.items) {
    double& slot = item.kind == GradcheckKind::tangent ? result.tangent_max
                   : item.kind == GradcheckKind::theta ? result.theta_max
                                                       : result.lambda_max;
    slot = std::max(slot, item.max_discrepancy);
  }
  return result;
}

}  // namespace pinnrc

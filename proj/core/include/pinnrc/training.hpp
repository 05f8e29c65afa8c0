#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pinnrc/circuits.hpp"
#include "pinnrc/metrics.hpp"
#include "pinnrc/net.hpp"

namespace pinnrc {

/// Whether the network models the current itself or its logarithm.
enum class Formulation { raw, log };
enum class Sampling { equispaced, uniform };

std::string_view to_string(Formulation f);
std::string_view to_string(Sampling s);
Formulation parse_formulation(std::string_view s);
Sampling parse_sampling(std::string_view s);

struct LossWeights {
  double ic = 1.0;
  double pde = 1.0;
  double data = 1.0;
};

struct TrainConfig {
  double learning_rate = 0.01;
  // Learning rate for physical parameters in inverse runs; defaults to
  // learning_rate when unset.
  std::optional<double> param_learning_rate;
  long iterations = 15000;
  LossWeights weights;
  int n_collocation = 35;
  int n_test = 0;  // 0 selects 10 * n_collocation
  Formulation formulation = Formulation::raw;
  Sampling sampling = Sampling::equispaced;
  std::uint64_t seed = 1234;
  TimeDomain domain{10.0};
  int log_every = 100;
  int hidden_layers = 3;
  int hidden_width = 40;
  bool include_ic = true;
  // Keep the parameters from the iteration with the lowest total training
  // loss rather than the last iterate.
  bool keep_best = true;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  int test_points() const { return n_test > 0 ? n_test : 10 * n_collocation; }
  std::vector<int> layer_sizes(std::size_t outputs) const;
};

struct LossBreakdown {
  double total = 0.0;
  double pde = 0.0;
  double ic = 0.0;
  double data = 0.0;
};

struct HistoryEntry {
  long iteration = 0;
  LossBreakdown loss;
};

/// A scalar loss and its gradient with respect to the network parameters.
struct LossTerm {
  double value = 0.0;
  GradientSet grad;
};

/// Loss over component ODEs, with sensitivities to each component's
/// rate, offset and initial value so callers can chain them into
/// physical-parameter gradients.
struct ComponentLoss {
  double value = 0.0;
  GradientSet grad;
  std::vector<double> d_rate;
  std::vector<double> d_offset;
  std::vector<double> d_initial;
};

/// Thrown when a loss becomes non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(long iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

// Networks see s = 2 t / t_end - 1 so that every domain maps to [-1, 1].
inline double scale_time(const TimeDomain& d, double t) { return 2.0 * t / d.t_end - 1.0; }
inline double time_chain_factor(const TimeDomain& d) { return 2.0 / d.t_end; }
std::vector<double> scale_times(const TimeDomain& d, std::span<const double> times);

/// n equispaced points on [0, t_end], both endpoints included.
std::vector<double> sample_collocation(const TimeDomain& domain, int n);
/// n sorted uniform draws on [0, t_end] from a seeded generator.
std::vector<double> sample_collocation_uniform(const TimeDomain& domain, int n,
                                               std::uint64_t seed);
std::vector<double> sample_collocation(const TrainConfig& config);

ComponentLoss pde_loss(const Mlp& net, std::span<const ComponentOde> odes,
                       const TimeDomain& domain, std::span<const double> points,
                       Formulation formulation);
ComponentLoss ic_loss(const Mlp& net, std::span<const ComponentOde> odes,
                      const TimeDomain& domain, Formulation formulation);

/// Sum over components of the mean squared residual at the points.
LossTerm pde_loss(const Mlp& net, const CircuitCase& c, const TimeDomain& domain,
                  std::span<const double> points, Formulation formulation);
/// Sum over components of the squared initial-value mismatch.
LossTerm ic_loss(const Mlp& net, const CircuitCase& c, const TimeDomain& domain,
                 Formulation formulation);

/// Total current from network outputs: the sum of components, each
/// exponentiated first under the log formulation.
std::vector<double> predict(const Mlp& net, const TimeDomain& domain, Formulation formulation,
                            std::span<const double> times);

struct AdamState {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(Eigen::Index n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

/// One bias-corrected Adam update in place.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
               AdamState& state, double lr);

struct FitReport {
  std::vector<HistoryEntry> history;
  Mlp final_model;
  long best_iteration = 0;  // iteration whose parameters final_model holds
  double l2_relative_error = 0.0;
  ErrorMetrics metrics;
  double wall_time = 0.0;  // seconds
  std::vector<double> test_times;
  std::vector<double> predicted;
  std::vector<double> truth;
};

/// Full-batch Adam on w_pde * pde + w_ic * ic. Throws TrainingDiverged.
FitReport train_forward(const CircuitCase& c, const TrainConfig& config);

}  // namespace pinnrc

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinnrc/circuits.hpp"
#include "pinnrc/training.hpp"

namespace pinnrc {

/// Physical parameters searched in log space, so every estimate stays
/// positive without clipping.
///
/// log_r holds ln(R0) first when the case has a resistive branch, then
/// ln(R_i) per RC branch. log_c holds ln(C_i) per RC branch. free_r and
/// free_c mark which entries the optimizer may move.
struct TrainableParams {
  bool has_r0 = false;
  std::vector<double> log_r;
  std::vector<double> log_c;
  std::vector<bool> free_r;
  std::vector<bool> free_c;

  /// All parameters free, values scale * the case's values.
  static TrainableParams from_case(const CircuitCase& c, double scale = 1.0);

  std::size_t size() const { return log_r.size() + log_c.size(); }
  bool all_finite() const;
  void freeze_all();
  void validate() const;

  std::vector<ComponentOde> components(double u_dc) const;
  CircuitCase to_case(double u_dc) const;
  /// Parameter names in log_r then log_c order: "r0", "r1", ..., "c1", ...
  std::vector<std::string> names() const;
  std::vector<double> values() const;  // exp of log_r then log_c
};

/// d(loss)/d(log_r) and d(loss)/d(log_c), masked entries zeroed.
struct ParamGradient {
  std::vector<double> log_r;
  std::vector<double> log_c;
};

/// Chain component sensitivities (rate, offset, initial value) into
/// gradients with respect to the log parameters.
ParamGradient chain_component_gradient(const TrainableParams& p, double u_dc,
                                       std::span<const double> d_rate,
                                       std::span<const double> d_offset,
                                       std::span<const double> d_initial);

/// A residual of one current component together with its derivatives.
struct ParamResidual {
  double value = 0.0;
  double d_u = 0.0;
  double d_du = 0.0;
  std::vector<double> d_log_r;
  std::vector<double> d_log_c;
};

/// Residuals of every component with R, C taken from params. For Case 0
/// and Case 1 there is a single component.
std::vector<ParamResidual> residual_with_params(const TrainableParams& params, double u_dc,
                                                double t, std::span<const double> u,
                                                std::span<const double> du_dt,
                                                Formulation formulation);

enum class Provenance { synthetic, measured };

struct Dataset {
  std::vector<double> times;
  std::vector<double> currents;
  Provenance provenance = Provenance::measured;
  double noise_sigma = 0.0;

  /// Throws std::invalid_argument naming the first offending row (1-based,
  /// header excluded).
  void validate() const;
  bool contains_origin() const;
};

/// currents = I(t) * (1 + sigma * z); draws that would give a
/// non-positive current are redrawn from the same stream.
Dataset generate_synthetic(const CircuitCase& c, std::span<const double> times,
                           double noise_sigma, std::uint64_t seed);

/// "t,i" header then one observation per row.
std::string dataset_csv(const Dataset& d);
Dataset parse_dataset_csv(const std::string& text);
Dataset read_dataset_csv(const std::filesystem::path& path);

/// MSE between the network's total current and the data (in log space
/// for the log formulation).
LossTerm data_loss(const Mlp& net, const TimeDomain& domain, const Dataset& data,
                   Formulation formulation);

struct ParamEstimate {
  std::string name;
  double estimate = 0.0;
  std::optional<double> truth;
  std::optional<double> relative_error;
};

struct InverseReport {
  std::vector<HistoryEntry> history;
  Mlp final_model;
  long best_iteration = 0;
  TrainableParams recovered;
  std::vector<ParamEstimate> estimates;
  bool truth_known = false;
  double wall_time = 0.0;
  std::vector<double> test_times;
  std::vector<double> predicted;
  std::vector<double> reference;  // analytical truth, or the data itself
  std::optional<ErrorMetrics> metrics;
};

/// Joint Adam over network and physical parameters on
/// w_pde * pde + w_ic * ic + w_data * data. The template supplies U_dc and
/// the branch structure; for synthetic data it also supplies true values.
InverseReport train_inverse(const CircuitCase& case_template, const Dataset& dataset,
                            const TrainConfig& config, const TrainableParams& init);

}  // namespace pinnrc

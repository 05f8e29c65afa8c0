#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pinnrc/circuits.hpp"
#include "pinnrc/inverse.hpp"
#include "pinnrc/metrics.hpp"
#include "pinnrc/training.hpp"

namespace pinnrc {

/// Outcome of one training run inside a comparison or sweep. Failed arms
/// keep their error text instead of a report.
struct ArmResult {
  std::string arm;
  TrainConfig config;
  std::optional<FitReport> fit;
  std::optional<long> failed_iteration;
  std::string error;

  bool ok() const { return fit.has_value(); }
};

struct ComparisonRecord {
  ArmResult raw;
  ArmResult log;
  // "log" or "raw" for the arm with the lower relative L2 error, "tie",
  // the surviving arm when one fails, "none" when both fail.
  std::string verdict;
};

/// Same seed, budget, architecture and collocation grid for both arms.
ComparisonRecord compare_formulations(const CircuitCase& c, const TrainConfig& config);

/// Collocation count per domain. With scaling on, the base density
/// (n_collocation per base t_end, 35 per 10 s by default) is kept:
/// ceil(density * t_end).
std::vector<int> sweep_collocation_counts(const TrainConfig& base,
                                          std::span<const double> t_ends, bool scale_points);

struct SweepRecord {
  std::vector<ArmResult> arms;  // in t_ends order
};

SweepRecord domain_sweep(const CircuitCase& c, const TrainConfig& base,
                         std::span<const double> t_ends, bool scale_points);

/// Arm directory name for a domain length, e.g. "t10", "t2.5".
std::string sweep_arm_name(double t_end);

// --- file emission -------------------------------------------------------

/// iter,loss_total,loss_pde,loss_ic,loss_data with 17 significant digits.
std::string history_csv(std::span<const HistoryEntry> history);

/// t,i_pred,i_true,abs_err
std::string prediction_csv(std::span<const double> times, std::span<const double> predicted,
                           std::span<const double> truth);

struct HistoryCheck {
  std::size_t rows = 0;
  double max_relative_deviation = 0.0;  // |total - weighted sum| / |total|
  bool all_non_negative = true;
};

/// Re-derives loss_total from the component columns of a history CSV.
/// Throws std::invalid_argument on malformed input.
HistoryCheck check_history_csv(const std::string& csv, const LossWeights& weights);

nlohmann::json to_json(const CircuitCase& c);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const ErrorMetrics& m);
nlohmann::json to_json(const LossBreakdown& l);

/// Files staged under temporary names and renamed into place together on
/// commit(). Anything not committed is removed when the stage goes away.
class OutputStage {
 public:
  OutputStage() = default;
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;
  ~OutputStage();

  /// Writes contents to a temporary sibling of path, creating parent
  /// directories. Throws std::runtime_error on I/O failure.
  void stage(const std::filesystem::path& path, const std::string& contents);
  void commit();

  const std::vector<std::filesystem::path>& targets() const { return targets_; }

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pending_;
  std::vector<std::filesystem::path> targets_;
  std::vector<std::filesystem::path> created_dirs_;
  bool committed_ = false;
};

}  // namespace pinnrc

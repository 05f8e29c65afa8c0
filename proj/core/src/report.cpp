#include "pinnrc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

namespace pinnrc {

namespace {

ArmResult run_arm(const std::string& name, const CircuitCase& c, const TrainConfig& config) {
  ArmResult arm;
  arm.arm = name;
  arm.config = config;
  try {
    arm.fit = train_forward(c, config);
  } catch (const TrainingDiverged& e) {
    arm.failed_iteration = e.iteration();
    arm.error = e.what();
  } catch (const std::exception& e) {
    arm.error = e.what();
  }
  return arm;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ComparisonRecord compare_formulations(const CircuitCase& c, const TrainConfig& config) {
  config.validate();
  TrainConfig raw = config;
  raw.formulation = Formulation::raw;
  TrainConfig log = config;
  log.formulation = Formulation::log;

  ComparisonRecord rec{run_arm("raw", c, raw), run_arm("log", c, log), {}};
  if (rec.raw.ok() && rec.log.ok()) {
    const double er = rec.raw.fit->l2_relative_error;
    const double el = rec.log.fit->l2_relative_error;
    rec.verdict = el < er ? "log" : (er < el ? "raw" : "tie");
  } else if (rec.raw.ok()) {
    rec.verdict = "raw";
  } else if (rec.log.ok()) {
    rec.verdict = "log";
  } else {
    rec.verdict = "none";
  }
  return rec;
}

std::vector<int> sweep_collocation_counts(const TrainConfig& base,
                                          std::span<const double> t_ends, bool scale_points) {
  std::vector<int> out;
  const double density = base.n_collocation / base.domain.t_end;
  for (double t_end : t_ends) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
      throw std::invalid_argument("sweep t_ends must be positive");
    }
    if (!scale_points) {
      out.push_back(base.n_collocation);
      continue;
    }
    // The tolerance absorbs rounding in density * t_end (35/10 * 300).
    const int n = static_cast<int>(std::ceil(density * t_end - 1e-9));
    out.push_back(std::max(n, 2));
  }
  return out;
}

std::string sweep_arm_name(double t_end) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "t%g", t_end);
  return buf;
}

SweepRecord domain_sweep(const CircuitCase& c, const TrainConfig& base,
                         std::span<const double> t_ends, bool scale_points) {
  if (t_ends.empty()) throw std::invalid_argument("sweep needs at least one t_end");
  base.validate();
  const auto counts = sweep_collocation_counts(base, t_ends, scale_points);
  SweepRecord rec;
  for (std::size_t i = 0; i < t_ends.size(); ++i) {
    TrainConfig cfg = base;
    cfg.domain = TimeDomain{t_ends[i]};
    cfg.n_collocation = counts[i];
    if (scale_points) cfg.n_test = 10 * counts[i];
    rec.arms.push_back(run_arm(sweep_arm_name(t_ends[i]), c, cfg));
  }
  return rec;
}

std::string history_csv(std::span<const HistoryEntry> history) {
  std::string out = "iter,loss_total,loss_pde,loss_ic,loss_data\n";
  for (const auto& h : history) {
    out += std::to_string(h.iteration);
    for (double v : {h.loss.total, h.loss.pde, h.loss.ic, h.loss.data}) {
      out += ',';
      out += format_g17(v);
    }
    out += '\n';
  }
  return out;
}

std::string prediction_csv(std::span<const double> times, std::span<const double> predicted,
                           std::span<const double> truth) {
  if (times.size() != predicted.size() || times.size() != truth.size()) {
    throw std::invalid_argument("prediction_csv: column lengths differ");
  }
  std::string out = "t,i_pred,i_true,abs_err\n";
  for (std::size_t j = 0; j < times.size(); ++j) {
    out += format_g17(times[j]) + ',' + format_g17(predicted[j]) + ',' + format_g17(truth[j]) +
           ',' + format_g17(std::abs(predicted[j] - truth[j])) + '\n';
  }
  return out;
}

HistoryCheck check_history_csv(const std::string& csv, const LossWeights& weights) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "iter,loss_total,loss_pde,loss_ic,loss_data") {
    throw std::invalid_argument("history CSV header mismatch");
  }
  HistoryCheck check;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v[5];
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3], &v[4]) !=
        5) {
      throw std::invalid_argument("malformed history row: " + line);
    }
    ++check.rows;
    const double total = v[1];
    const double rebuilt = weights.pde * v[2] + weights.ic * v[3] + weights.data * v[4];
    const double dev = total == 0.0 ? std::abs(rebuilt) : std::abs(total - rebuilt) / std::abs(total);
    check.max_relative_deviation = std::max(check.max_relative_deviation, dev);
    if (v[2] < 0.0 || v[3] < 0.0 || v[4] < 0.0 || total < 0.0) check.all_non_negative = false;
  }
  return check;
}

nlohmann::json to_json(const CircuitCase& c) {
  nlohmann::json j;
  j["label"] = c.label();
  j["u_dc"] = c.u_dc();
  if (c.r0()) j["r0"] = *c.r0();
  j["branches"] = nlohmann::json::array();
  for (const auto& b : c.branches()) j["branches"].push_back({{"r", b.r}, {"c", b.c}});
  return j;
}

nlohmann::json to_json(const TrainConfig& config) {
  nlohmann::json j;
  j["learning_rate"] = config.learning_rate;
  if (config.param_learning_rate) j["param_learning_rate"] = *config.param_learning_rate;
  j["iterations"] = config.iterations;
  j["loss_weights"] = {{"ic", config.weights.ic},
                       {"pde", config.weights.pde},
                       {"data", config.weights.data}};
  j["n_collocation"] = config.n_collocation;
  j["n_test"] = config.test_points();
  j["formulation"] = std::string(to_string(config.formulation));
  j["sampling"] = std::string(to_string(config.sampling));
  j["seed"] = config.seed;
  j["t_end"] = config.domain.t_end;
  j["log_every"] = config.log_every;
  j["hidden_layers"] = config.hidden_layers;
  j["hidden_width"] = config.hidden_width;
  j["include_ic"] = config.include_ic;
  j["keep_best"] = config.keep_best;
  return j;
}

nlohmann::json to_json(const ErrorMetrics& m) {
  return {{"l2_relative", m.l2_relative}, {"max_abs", m.max_abs}, {"rmse", m.rmse}};
}

nlohmann::json to_json(const LossBreakdown& l) {
  return {{"total", l.total}, {"pde", l.pde}, {"ic", l.ic}, {"data", l.data}};
}

OutputStage::~OutputStage() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& [tmp, target] : pending_) std::filesystem::remove(tmp, ec);
  for (auto it = created_dirs_.rbegin(); it != created_dirs_.rend(); ++it) {
    std::filesystem::remove(*it, ec);  // only succeeds when empty
  }
}

void OutputStage::stage(const std::filesystem::path& path, const std::string& contents) {
  if (committed_) throw std::logic_error("OutputStage already committed");
  const auto dir = path.parent_path();
  if (!dir.empty()) {
    // Remember which directories we create so an abandoned stage can
    // remove them again.
    std::vector<std::filesystem::path> missing;
    for (auto p = dir; !p.empty() && !std::filesystem::exists(p); p = p.parent_path()) {
      missing.push_back(p);
      if (p == p.parent_path()) break;
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      std::error_code ignore;
      for (const auto& p : missing) std::filesystem::remove(p, ignore);
      throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
    }
    created_dirs_.insert(created_dirs_.end(), missing.rbegin(), missing.rend());
  }
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("failed writing " + tmp.string());
    }
  }
  pending_.emplace_back(tmp, path);
  targets_.push_back(path);
}

void OutputStage::commit() {
  std::vector<std::filesystem::path> renamed;
  for (const auto& [tmp, target] : pending_) {
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
      std::error_code ignore;
      for (const auto& done : renamed) std::filesystem::remove(done, ignore);
      throw std::runtime_error("cannot rename into " + target.string() + ": " + ec.message());
    }
    renamed.push_back(target);
  }
  committed_ = true;
}

}  // namespace pinnrc

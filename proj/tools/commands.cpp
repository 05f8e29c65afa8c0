#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <ostream>
#include <string>

#include "pinnrc/checkpoint.hpp"
#include "pinnrc/gradcheck.hpp"
#include "pinnrc/inverse.hpp"
#include "pinnrc/report.hpp"
#include "run_config.hpp"

namespace pinnrc::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

fs::path output_root(const CommandOptions& opts, const RunConfig& rc) {
  if (opts.out) return *opts.out;
  if (rc.output_dir) return *rc.output_dir;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "out";
}

fs::path run_directory(const CommandOptions& opts, const RunConfig& rc, const char* command) {
  const std::string name = rc.name.empty() ? std::string(command) + "-" + utc_timestamp() : rc.name;
  return output_root(opts, rc) / name;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Loads the config and applies command-line overrides. Returns nullopt
// after reporting a config error.
std::optional<RunConfig> load(const CommandOptions& opts, std::ostream& err) {
  try {
    RunConfig rc = load_run_config(opts.config);
    if (opts.seed) rc.train.seed = *opts.seed;
    return rc;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return std::nullopt;
  }
}

const CircuitCase* require_case(const RunConfig& rc, std::ostream& err) {
  if (!rc.circuit) {
    err << "config error: case is required\n";
    return nullptr;
  }
  return &*rc.circuit;
}

json fit_summary(const char* command, const CircuitCase& c, const TrainConfig& config,
                 const FitReport& fit) {
  json j;
  j["command"] = command;
  j["case"] = to_json(c);
  j["config"] = to_json(config);
  j["final_loss"] = to_json(fit.history.back().loss);
  j["best_iteration"] = fit.best_iteration;
  j["metrics"] = to_json(fit.metrics);
  j["l2_relative_error"] = fit.l2_relative_error;
  j["wall_time"] = fit.wall_time;
  j["history"] = "history.csv";
  j["prediction"] = "prediction.csv";
  j["checkpoint"] = "model.ckpt";
  return j;
}

void stage_fit(OutputStage& stage, const fs::path& dir, const json& summary, const FitReport& fit) {
  stage.stage(dir / "history.csv", history_csv(fit.history));
  stage.stage(dir / "prediction.csv", prediction_csv(fit.test_times, fit.predicted, fit.truth));
  stage.stage(dir / "model.ckpt", checkpoint_bytes(fit.final_model));
  stage.stage(dir / "summary.json", dump(summary));
}

json arm_summary(const ArmResult& arm) {
  json j;
  j["arm"] = arm.arm;
  j["n_collocation"] = arm.config.n_collocation;
  j["t_end"] = arm.config.domain.t_end;
  j["formulation"] = std::string(to_string(arm.config.formulation));
  if (arm.ok()) {
    j["status"] = "ok";
    j["metrics"] = to_json(arm.fit->metrics);
    j["l2_relative_error"] = arm.fit->l2_relative_error;
    j["final_loss"] = to_json(arm.fit->history.back().loss);
  } else {
    j["status"] = "failed";
    j["error"] = arm.error;
    if (arm.failed_iteration) j["failed_iteration"] = *arm.failed_iteration;
  }
  return j;
}

void stage_arm(OutputStage& stage, const fs::path& dir, const char* command,
               const CircuitCase& c, const ArmResult& arm) {
  if (arm.ok()) {
    stage_fit(stage, dir / arm.arm, fit_summary(command, c, arm.config, *arm.fit), *arm.fit);
  } else {
    stage.stage(dir / arm.arm / "summary.json", dump(arm_summary(arm)));
  }
}

template <class Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingDiverged& e) {
    err << "training diverged at iteration " << e.iteration() << ": " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

std::vector<double> synthetic_times(const SyntheticSpec& s, const TimeDomain& domain) {
  if (!s.times.empty()) return s.times;
  return sample_collocation(domain, s.n_points);
}

}  // namespace

int cmd_forward(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto rc = load(opts, err);
  if (!rc) return kExitConfig;
  const CircuitCase* c = require_case(*rc, err);
  if (!c) return kExitConfig;
  return guarded(err, [&] {
    const FitReport fit = train_forward(*c, rc->train);
    const fs::path dir = run_directory(opts, *rc, "forward") / "forward";
    OutputStage stage;
    stage_fit(stage, dir, fit_summary("forward", *c, rc->train, fit), fit);
    stage.commit();
    char line[160];
    std::snprintf(line, sizeof(line), "forward %s %s: l2_relative_error=%.6e wall_time=%.1fs\n",
                  c->label().c_str(), std::string(to_string(rc->train.formulation)).c_str(),
                  fit.l2_relative_error, fit.wall_time);
    out << line << "wrote " << dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_inverse(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto rc = load(opts, err);
  if (!rc) return kExitConfig;
  const CircuitCase* c = require_case(*rc, err);
  if (!c) return kExitConfig;
  if (!rc->inverse) {
    err << "config error: inverse section is required\n";
    return kExitConfig;
  }
  const InverseSpec& spec = *rc->inverse;

  Dataset data;
  try {
    if (spec.dataset) {
      data = read_dataset_csv(*spec.dataset);
    } else {
      data = generate_synthetic(*c, synthetic_times(*spec.synthetic, rc->train.domain),
                                spec.synthetic->noise_sigma, spec.synthetic->seed);
      data.validate();
    }
    if (data.times.back() > rc->train.domain.t_end) {
      throw std::invalid_argument("dataset extends beyond train.t_end");
    }
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  TrainConfig config = rc->train;
  // The initial-value term is the only one that depends on R alone, so it
  // stays on unless the config turns it off.
  if (!rc->include_ic_set) config.include_ic = true;

  TrainableParams init = spec.init ? *spec.init : TrainableParams::from_case(*c, spec.init_scale);
  if (!spec.free_r.empty()) {
    init.free_r = spec.free_r;
    init.free_c = spec.free_c;
  }

  return guarded(err, [&] {
    const InverseReport rep = train_inverse(*c, data, config, init);
    const fs::path dir = run_directory(opts, *rc, "inverse") / "inverse";

    json params = json::array();
    for (const auto& e : rep.estimates) {
      json p{{"name", e.name}, {"estimate", e.estimate}};
      if (e.truth) p["truth"] = *e.truth;
      if (e.relative_error) p["relative_error"] = *e.relative_error;
      params.push_back(p);
    }
    json taus = json::array();
    const CircuitCase recovered = rep.recovered.to_case(c->u_dc());
    for (std::size_t k = 0; k < recovered.branches().size(); ++k) {
      const double est = recovered.branches()[k].time_constant();
      json t{{"branch", k + 1}, {"estimate", est}};
      if (rep.truth_known) {
        const double truth = c->branches()[k].time_constant();
        t["truth"] = truth;
        t["relative_error"] = std::abs(est - truth) / truth;
      }
      taus.push_back(t);
    }

    json summary;
    summary["command"] = "inverse";
    summary["case"] = to_json(*c);
    summary["config"] = to_json(config);
    summary["dataset"] = {{"points", data.times.size()},
                          {"provenance", data.provenance == Provenance::synthetic ? "synthetic"
                                                                                  : "measured"},
                          {"noise_sigma", data.noise_sigma},
                          {"file", "dataset.csv"}};
    summary["parameters"] = params;
    summary["time_constants"] = taus;
    summary["final_loss"] = to_json(rep.history.back().loss);
    summary["best_iteration"] = rep.best_iteration;
    if (rep.metrics) summary["metrics"] = to_json(*rep.metrics);
    summary["wall_time"] = rep.wall_time;
    summary["history"] = "history.csv";
    summary["prediction"] = "prediction.csv";
    summary["checkpoint"] = "model.ckpt";

    OutputStage stage;
    stage.stage(dir / "history.csv", history_csv(rep.history));
    stage.stage(dir / "prediction.csv", prediction_csv(rep.test_times, rep.predicted, rep.reference));
    stage.stage(dir / "model.ckpt", checkpoint_bytes(rep.final_model));
    stage.stage(dir / "dataset.csv", dataset_csv(data));
    stage.stage(dir / "summary.json", dump(summary));
    stage.commit();

    for (const auto& e : rep.estimates) {
      char line[160];
      if (e.truth) {
        std::snprintf(line, sizeof(line), "%s: estimate=%.6g truth=%.6g relative_error=%.3e\n",
                      e.name.c_str(), e.estimate, *e.truth, *e.relative_error);
      } else {
        std::snprintf(line, sizeof(line), "%s: estimate=%.6g\n", e.name.c_str(), e.estimate);
      }
      out << line;
    }
    out << "wrote " << dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_synth(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto rc = load(opts, err);
  if (!rc) return kExitConfig;
  const CircuitCase* c = require_case(*rc, err);
  if (!c) return kExitConfig;
  if (!rc->synth) {
    err << "config error: synth section is required\n";
    return kExitConfig;
  }
  return guarded(err, [&] {
    const SyntheticSpec& s = rc->synth->data;
    const auto times = synthetic_times(s, rc->train.domain);
    const Dataset d = generate_synthetic(*c, times, s.noise_sigma, s.seed);
    const fs::path file = run_directory(opts, *rc, "synth") / rc->synth->file;
    OutputStage stage;
    stage.stage(file, dataset_csv(d));
    stage.commit();
    out << "wrote " << d.times.size() << " samples to " << file.string() << "\n";
    return kExitOk;
  });
}

int cmd_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto rc = load(opts, err);
  if (!rc) return kExitConfig;
  const CircuitCase* c = require_case(*rc, err);
  if (!c) return kExitConfig;
  return guarded(err, [&] {
    const ComparisonRecord rec = compare_formulations(*c, rc->train);
    const fs::path dir = run_directory(opts, *rc, "compare");
    json summary;
    summary["command"] = "compare";
    summary["case"] = to_json(*c);
    summary["config"] = to_json(rc->train);
    summary["arms"] = {arm_summary(rec.raw), arm_summary(rec.log)};
    summary["verdict"] = rec.verdict;

    OutputStage stage;
    stage_arm(stage, dir, "compare", *c, rec.raw);
    stage_arm(stage, dir, "compare", *c, rec.log);
    stage.stage(dir / "summary.json", dump(summary));
    stage.commit();

    for (const ArmResult* arm : {&rec.raw, &rec.log}) {
      char line[160];
      if (arm->ok()) {
        std::snprintf(line, sizeof(line), "%s: l2_relative_error=%.6e\n", arm->arm.c_str(),
                      arm->fit->l2_relative_error);
      } else {
        std::snprintf(line, sizeof(line), "%s: failed (%s)\n", arm->arm.c_str(), arm->error.c_str());
      }
      out << line;
    }
    out << "verdict: " << rec.verdict << "\nwrote " << dir.string() << "\n";
    return rec.raw.ok() && rec.log.ok() ? kExitOk : kExitDiverged;
  });
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto rc = load(opts, err);
  if (!rc) return kExitConfig;
  const CircuitCase* c = require_case(*rc, err);
  if (!c) return kExitConfig;
  if (!rc->sweep) {
    err << "config error: sweep section with non-empty t_ends is required\n";
    return kExitConfig;
  }
  return guarded(err, [&] {
    const SweepRecord rec =
        domain_sweep(*c, rc->train, rc->sweep->t_ends, rc->sweep->scale_points);
    const fs::path dir = run_directory(opts, *rc, "sweep");

    json arms = json::array();
    bool all_ok = true;
    bool monotone = true;
    double previous = -1.0;
    for (const auto& arm : rec.arms) {
      arms.push_back(arm_summary(arm));
      all_ok = all_ok && arm.ok();
      if (arm.ok()) {
        monotone = monotone && arm.fit->l2_relative_error >= previous;
        previous = arm.fit->l2_relative_error;
      }
    }
    json summary;
    summary["command"] = "sweep";
    summary["case"] = to_json(*c);
    summary["config"] = to_json(rc->train);
    summary["t_ends"] = rc->sweep->t_ends;
    summary["scale_points"] = rc->sweep->scale_points;
    summary["arms"] = arms;
    summary["error_non_decreasing_with_domain"] = monotone;

    OutputStage stage;
    for (const auto& arm : rec.arms) stage_arm(stage, dir, "sweep", *c, arm);
    stage.stage(dir / "summary.json", dump(summary));
    stage.commit();

    for (const auto& arm : rec.arms) {
      char line[200];
      if (arm.ok()) {
        std::snprintf(line, sizeof(line), "%s: n_collocation=%d l2_relative_error=%.6e\n",
                      arm.arm.c_str(), arm.config.n_collocation, arm.fit->l2_relative_error);
      } else {
        std::snprintf(line, sizeof(line), "%s: n_collocation=%d failed (%s)\n", arm.arm.c_str(),
                      arm.config.n_collocation, arm.error.c_str());
      }
      out << line;
    }
    out << "wrote " << dir.string() << "\n";
    return all_ok ? kExitOk : kExitDiverged;
  });
}

int cmd_gradcheck(const GradcheckCommandOptions& opts, std::ostream& out) {
  GradcheckOptions options;
  if (opts.seed) options.seed = *opts.seed;
  if (opts.inject_fault) {
    options.fault = [](GradientSet& g) { g.values()(0) += 1e-3 * (1.0 + std::abs(g.values()(0))); };
  }
  const GradcheckResult result = run_gradcheck(options);
  char line[200];
  for (const auto& item : result.items) {
    std::snprintf(line, sizeof(line), "%-62s max=%.6e tol=%.0e %s\n", item.name.c_str(),
                  item.max_discrepancy, item.tolerance, item.passed() ? "ok" : "FAIL");
    out << line;
  }
  std::snprintf(line, sizeof(line),
                "max relative discrepancy: tangent=%.6e theta=%.6e lambda=%.6e -> %s\n",
                result.tangent_max, result.theta_max, result.lambda_max,
                result.passed() ? "PASS" : "FAIL");
  out << line;
  return result.passed() ? kExitOk : kExitFailure;
}

}  // namespace pinnrc::cli

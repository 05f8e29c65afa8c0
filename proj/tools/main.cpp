#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace pinnrc::cli;

namespace {

// Shared flags for the config-driven subcommands.
struct Parsed {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  CommandOptions options() const {
    CommandOptions o;
    o.config = config;
    if (out_opt && out_opt->count() > 0) o.out = out;
    if (seed_opt && seed_opt->count() > 0) o.seed = seed;
    return o;
  }
};

CLI::App* add_run(CLI::App& app, const char* name, const char* help, Parsed& p) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("config", p.config, "JSON run config")->required();
  p.out_opt = sub->add_option("--out", p.out, "output root (overrides config and $PINN_RC_OUT)");
  p.seed_opt = sub->add_option("--seed", p.seed, "override train.seed");
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed networks for RC circuit transients"};
  app.require_subcommand(1);

  Parsed forward, inverse, synth, compare, sweep;
  auto* f = add_run(app, "forward", "fit the current for a known circuit", forward);
  auto* i = add_run(app, "inverse", "recover R and C from current samples", inverse);
  auto* s = add_run(app, "synth", "write a synthetic dataset", synth);
  auto* c = add_run(app, "compare", "raw vs log formulation on one circuit", compare);
  auto* w = add_run(app, "sweep", "time-domain length sweep", sweep);

  std::uint64_t gc_seed = 0;
  bool inject = false;
  auto* g = app.add_subcommand("gradcheck", "finite-difference check of every analytic gradient");
  auto* gc_seed_opt = g->add_option("--seed", gc_seed, "random seed for the probes");
  g->add_flag("--inject-fault", inject, "corrupt one gradient entry (the check must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*f) return cmd_forward(forward.options(), std::cout, std::cerr);
    if (*i) return cmd_inverse(inverse.options(), std::cout, std::cerr);
    if (*s) return cmd_synth(synth.options(), std::cout, std::cerr);
    if (*c) return cmd_compare(compare.options(), std::cout, std::cerr);
    if (*w) return cmd_sweep(sweep.options(), std::cout, std::cerr);
    GradcheckCommandOptions o;
    if (gc_seed_opt->count() > 0) o.seed = gc_seed;
    o.inject_fault = inject;
    return cmd_gradcheck(o, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

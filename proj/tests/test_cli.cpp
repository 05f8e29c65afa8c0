#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "pinnrc/circuits.hpp"
#include "pinnrc/inverse.hpp"
#include "run_config.hpp"

using namespace pinnrc;
using namespace pinnrc::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sandbox {
  fs::path root;
  explicit Sandbox(const std::string& name)
      : root(fs::temp_directory_path() / ("pinnrc_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }

  fs::path write(const std::string& file, const std::string& text) const {
    std::ofstream(root / file) << text;
    return root / file;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

template <class Cmd>
Run run(Cmd cmd, const fs::path& config, const fs::path& out_root) {
  CommandOptions o;
  o.config = config;
  o.out = out_root;
  std::ostringstream out, err;
  const int code = cmd(o, out, err);
  return {code, out.str(), err.str()};
}

std::size_t file_count(const fs::path& root) {
  if (!fs::exists(root)) return 0;
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(root)) n += e.is_regular_file();
  return n;
}

const char* kQuickTrain = R"("train": {"iterations": 40, "hidden_layers": 2, "hidden_width": 8, "log_every": 10})";

}  // namespace

TEST_CASE("config parsing") {
  const fs::path base = "/cfg";
  const auto rc = parse_run_config(json::parse(R"({
    "name": "x", "case": {"u_dc": 2, "r0": 4, "branches": [{"r": 1, "c": 3}]},
    "train": {"learning_rate": 0.02, "formulation": "log", "loss_weights": {"data": 3},
              "t_end": 20, "seed": 9, "include_ic": false},
    "inverse": {"dataset": "d.csv", "free": {"r0": false, "branches": [{"r": true, "c": false}]}}
  })"), base);
  CHECK(rc.name == "x");
  CHECK(rc.circuit->u_dc() == 2.0);
  CHECK(*rc.circuit->r0() == 4.0);
  CHECK(rc.train.learning_rate == 0.02);
  CHECK(rc.train.formulation == Formulation::log);
  CHECK(rc.train.weights.data == 3.0);
  CHECK(rc.train.weights.pde == 1.0);
  CHECK(rc.train.domain.t_end == 20.0);
  CHECK(rc.train.seed == 9);
  CHECK(rc.include_ic_set);
  CHECK_FALSE(rc.train.include_ic);
  CHECK(*rc.inverse->dataset == base / "d.csv");
  CHECK(rc.inverse->free_r == std::vector<bool>{false, true});
  CHECK(rc.inverse->free_c == std::vector<bool>{false});

  CHECK(parse_case(json("case3"), "case").branches().size() == 3);
  CHECK_THROWS_AS(parse_case(json("case9"), "case"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"case": "case0", "trian": {}})"), base),
                       doctest::Contains("trian"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"train": {"learning_rat": 1}})"), base),
                       doctest::Contains("train.learning_rat"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"train": {"iterations": "many"}})"), base),
                       doctest::Contains("train.iterations"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_run_config(json::parse(R"({"case": "case0", "inverse": {"synthetic": {}, "dataset": "a"}})"), base),
      doctest::Contains("exactly one"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"name": "../up"})"), base), ConfigError);
}

TEST_CASE("forward command") {
  Sandbox box("forward");
  const auto cfg = box.write("f.json", std::string(R"({"name": "run", "case": "case0", )") + kQuickTrain + "}");

  const Run r = run(cmd_forward, cfg, box.root / "out");
  CHECK(r.code == kExitOk);
  const fs::path arm = box.root / "out" / "run" / "forward";
  for (const char* f : {"history.csv", "prediction.csv", "summary.json", "model.ckpt"}) CHECK(fs::exists(arm / f));
  CHECK(file_count(box.root / "out") == 4);
  const json s = json::parse(slurp(arm / "summary.json"));
  CHECK(s["checkpoint"] == "model.ckpt");
  CHECK(s["config"]["iterations"] == 40);
  CHECK(s.contains("l2_relative_error"));
  CHECK(s.contains("wall_time"));
  CHECK(s["final_loss"].contains("total"));

  SUBCASE("re-run is byte identical apart from wall time") {
    const Run again = run(cmd_forward, cfg, box.root / "again");
    REQUIRE(again.code == kExitOk);
    const fs::path arm2 = box.root / "again" / "run" / "forward";
    CHECK(slurp(arm / "history.csv") == slurp(arm2 / "history.csv"));
    CHECK(slurp(arm / "prediction.csv") == slurp(arm2 / "prediction.csv"));
    CHECK(slurp(arm / "model.ckpt") == slurp(arm2 / "model.ckpt"));
    json a = json::parse(slurp(arm / "summary.json"));
    json b = json::parse(slurp(arm2 / "summary.json"));
    a.erase("wall_time");
    b.erase("wall_time");
    CHECK(a == b);
  }
  SUBCASE("seed override changes the run") {
    CommandOptions o{cfg, box.root / "seeded", 99};
    std::ostringstream out, err;
    REQUIRE(cmd_forward(o, out, err) == kExitOk);
    const json s2 = json::parse(slurp(box.root / "seeded" / "run" / "forward" / "summary.json"));
    CHECK(s2["config"]["seed"] == 99);
  }
  SUBCASE("negative learning rate") {
    const auto bad = box.write("bad.json", R"({"case": "case0", "train": {"learning_rate": -0.01}})");
    const Run b = run(cmd_forward, bad, box.root / "bad");
    CHECK(b.code == kExitConfig);
    CHECK(b.err.find("learning_rate") != std::string::npos);
    CHECK_FALSE(fs::exists(box.root / "bad"));
  }
  SUBCASE("unwritable output leaves no files") {
    std::ofstream(box.root / "blocker") << "x";
    const Run b = run(cmd_forward, cfg, box.root / "blocker" / "out");
    CHECK(b.code != kExitOk);
    CHECK(file_count(box.root / "out") == 4);
    for (const auto& e : fs::recursive_directory_iterator(box.root))
      CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
  }
  SUBCASE("missing case and missing config") {
    CHECK(run(cmd_forward, box.write("nocase.json", "{}"), box.root / "o").code == kExitConfig);
    CHECK(run(cmd_forward, box.root / "absent.json", box.root / "o").code == kExitConfig);
  }
  SUBCASE("divergence exits 3") {
    const auto d = box.write("div.json", R"({"name": "d", "case": "case0",
      "train": {"iterations": 10, "learning_rate": 1e300, "hidden_layers": 1, "hidden_width": 4}})");
    const Run b = run(cmd_forward, d, box.root / "div");
    CHECK(b.code == kExitDiverged);
    CHECK(file_count(box.root / "div") == 0);
  }
}

TEST_CASE("output root precedence") {
  Sandbox box("env");
  const auto cfg = box.write("f.json", std::string(R"({"name": "e", "case": "case0", )") + kQuickTrain + "}");
  ::setenv(kOutputEnv, (box.root / "from_env").c_str(), 1);
  CommandOptions o{cfg, std::nullopt, std::nullopt};
  std::ostringstream out, err;
  CHECK(cmd_forward(o, out, err) == kExitOk);
  CHECK(fs::exists(box.root / "from_env" / "e" / "forward" / "summary.json"));

  const auto cfg2 = box.write("g.json", std::string(R"({"name": "g", "case": "case0", "output_dir": ")") +
                                            (box.root / "from_cfg").string() + "\", " + kQuickTrain + "}");
  CommandOptions o2{cfg2, std::nullopt, std::nullopt};
  CHECK(cmd_forward(o2, out, err) == kExitOk);
  CHECK(fs::exists(box.root / "from_cfg" / "g" / "forward" / "summary.json"));
  ::unsetenv(kOutputEnv);
}

TEST_CASE("inverse command") {
  Sandbox box("inverse");
  const auto cfg = box.write("i.json", std::string(R"({"name": "inv", "case": "case0", )") + kQuickTrain +
                                           R"(, "inverse": {"synthetic": {"n_points": 35}}})");
  const Run r = run(cmd_inverse, cfg, box.root / "out");
  CHECK(r.code == kExitOk);
  const fs::path arm = box.root / "out" / "inv" / "inverse";
  const json s = json::parse(slurp(arm / "summary.json"));
  REQUIRE(s["parameters"].size() == 2);
  CHECK(s["parameters"][0]["name"] == "r1");
  CHECK(s["parameters"][0]["truth"] == 1.0);
  CHECK(s["parameters"][0].contains("relative_error"));
  CHECK(s["time_constants"][0].contains("relative_error"));
  CHECK(s["dataset"]["points"] == 35);
  CHECK(fs::exists(arm / "dataset.csv"));
  CHECK(fs::exists(arm / "model.ckpt"));

  SUBCASE("measured dataset from file") {
    const Dataset d = generate_synthetic(CircuitCase::case1(), sample_collocation(TimeDomain{10.0}, 12), 0.0, 1);
    box.write("data.csv", dataset_csv(d));
    const auto c = box.write("m.json", std::string(R"({"name": "m", "case": "case1", )") + kQuickTrain +
                                           R"(, "inverse": {"dataset": "data.csv"}})");
    const Run m = run(cmd_inverse, c, box.root / "out");
    CHECK(m.code == kExitOk);
    const json ms = json::parse(slurp(box.root / "out" / "m" / "inverse" / "summary.json"));
    CHECK(ms["dataset"]["provenance"] == "measured");
    CHECK_FALSE(ms["parameters"][0].contains("truth"));
  }
  SUBCASE("non-positive current names the row") {
    box.write("neg.csv", "t,i\n0,1.0\n1,0.5\n2,-0.1\n");
    const auto c = box.write("n.json", std::string(R"({"case": "case0", "train": {"formulation": "log"},
      "inverse": {"dataset": "neg.csv"}})"));
    const Run n = run(cmd_inverse, c, box.root / "neg");
    CHECK(n.code == kExitConfig);
    CHECK(n.err.find("row 3") != std::string::npos);
  }
  SUBCASE("missing dataset") {
    const auto c = box.write("x.json", R"({"case": "case0", "inverse": {"dataset": "nope.csv"}})");
    CHECK(run(cmd_inverse, c, box.root / "x").code == kExitConfig);
  }
  SUBCASE("frozen parameters are reported unchanged") {
    const auto c = box.write("fz.json", std::string(R"({"name": "fz", "case": "case0", )") + kQuickTrain +
      R"(, "inverse": {"synthetic": {}, "init_scale": 0.5,
           "free": {"branches": [{"r": false, "c": false}]}}})");
    REQUIRE(run(cmd_inverse, c, box.root / "out").code == kExitOk);
    const json fs2 = json::parse(slurp(box.root / "out" / "fz" / "inverse" / "summary.json"));
    CHECK(fs2["parameters"][0]["estimate"].get<double>() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(fs2["parameters"][1]["estimate"].get<double>() == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("synth command") {
  Sandbox box("synth");
  const auto cfg = box.write("s.json", R"({"name": "s", "case": "case0", "synth": {"n_points": 35}})");
  REQUIRE(run(cmd_synth, cfg, box.root / "a").code == kExitOk);
  REQUIRE(run(cmd_synth, cfg, box.root / "b").code == kExitOk);
  const std::string a = slurp(box.root / "a" / "s" / "dataset.csv");
  CHECK(a == slurp(box.root / "b" / "s" / "dataset.csv"));
  const Dataset d = parse_dataset_csv(a);
  REQUIRE(d.times.size() == 35);
  for (std::size_t k = 0; k < 35; ++k) CHECK(d.currents[k] == std::exp(-d.times[k]));

  const auto noisy = box.write("n.json", R"({"name": "n", "case": "case1",
    "synth": {"n_points": 200, "noise_sigma": 0.01, "seed": 3, "file": "noisy.csv"}})");
  REQUIRE(run(cmd_synth, noisy, box.root / "a").code == kExitOk);
  const Dataset nd = read_dataset_csv(box.root / "a" / "n" / "noisy.csv");
  for (std::size_t k = 0; k < nd.times.size(); ++k) {
    const double truth = analytical_current(CircuitCase::case1(), nd.times[k]);
    CHECK(std::abs(nd.currents[k] - truth) <= 5 * 0.01 * truth);
  }
  CHECK(run(cmd_synth, box.write("e.json", R"({"case": "case0"})"), box.root / "e").code == kExitConfig);
}

TEST_CASE("compare and sweep commands") {
  Sandbox box("cmp");
  const auto cfg = box.write("c.json", std::string(R"({"name": "c", "case": "case1", )") + kQuickTrain + "}");
  const Run r = run(cmd_compare, cfg, box.root / "out");
  CHECK(r.code == kExitOk);
  const json s = json::parse(slurp(box.root / "out" / "c" / "summary.json"));
  CHECK(s["arms"].size() == 2);
  const std::string v = s["verdict"];
  CHECK((v == "log" || v == "raw" || v == "tie"));
  CHECK(fs::exists(box.root / "out" / "c" / "raw" / "history.csv"));
  CHECK(fs::exists(box.root / "out" / "c" / "log" / "history.csv"));

  const auto sw = box.write("w.json", R"({"name": "w", "case": "case2",
    "train": {"iterations": 3, "hidden_layers": 1, "hidden_width": 4},
    "sweep": {"t_ends": [10, 100, 300]}})");
  const Run w = run(cmd_sweep, sw, box.root / "out");
  CHECK(w.code == kExitOk);
  for (const char* arm : {"t10", "t100", "t300"}) CHECK(fs::exists(box.root / "out" / "w" / arm / "summary.json"));
  const json ws = json::parse(slurp(box.root / "out" / "w" / "summary.json"));
  CHECK(ws["arms"][2]["n_collocation"] == 1050);

  const auto empty = box.write("e.json", R"({"case": "case2", "sweep": {"t_ends": []}})");
  CHECK(run(cmd_sweep, empty, box.root / "e").code == kExitConfig);
}

TEST_CASE("gradcheck command") {
  GradcheckCommandOptions o;
  std::ostringstream a, b, f;
  CHECK(cmd_gradcheck(o, a) == kExitOk);
  CHECK(cmd_gradcheck(o, b) == kExitOk);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("PASS") != std::string::npos);
  o.inject_fault = true;
  CHECK(cmd_gradcheck(o, f) != kExitOk);
  CHECK(f.str().find("FAIL") != std::string::npos);
}

#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace pinnrc::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

// Reads the members of one JSON object and rejects any it was not asked
// about.
class Fields {
 public:
  Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) {
      throw ConfigError((where_.empty() ? std::string("config") : where_) + " must be an object");
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::optional<double> number(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(path(key) + " must be a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key) + " must be finite");
    return d;
  }

  std::optional<long> integer(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) throw ConfigError(path(key) + " must be an integer");
    return v->get<long>();
  }

  std::optional<std::uint64_t> seed(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned()) {
      throw ConfigError(path(key) + " must be a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  std::optional<bool> boolean(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ConfigError(path(key) + " must be true or false");
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(path(key) + " must be a string");
    return v->get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) throw ConfigError(path(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) throw ConfigError(path(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::string path(const std::string& key) const { return join(where_, key); }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + path(key));
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

int checked_int(long v, const std::string& field) {
  if (v < 0 || v > 100'000'000) throw ConfigError(field + " is out of range");
  return static_cast<int>(v);
}

void parse_train(const json& j, RunConfig& rc) {
  Fields f(j, "train");
  TrainConfig& t = rc.train;
  if (auto v = f.number("learning_rate")) t.learning_rate = *v;
  if (auto v = f.number("param_learning_rate")) t.param_learning_rate = *v;
  if (auto v = f.integer("iterations")) t.iterations = *v;
  if (const json* w = f.find("loss_weights")) {
    Fields fw(*w, "train.loss_weights");
    if (auto v = fw.number("ic")) t.weights.ic = *v;
    if (auto v = fw.number("pde")) t.weights.pde = *v;
    if (auto v = fw.number("data")) t.weights.data = *v;
    fw.finish();
  }
  if (auto v = f.integer("n_collocation")) t.n_collocation = checked_int(*v, "train.n_collocation");
  if (auto v = f.integer("n_test")) t.n_test = checked_int(*v, "train.n_test");
  if (auto v = f.string("formulation")) {
    try {
      t.formulation = parse_formulation(*v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("train." + std::string(e.what()));
    }
  }
  if (auto v = f.string("sampling")) {
    try {
      t.sampling = parse_sampling(*v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("train." + std::string(e.what()));
    }
  }
  if (auto v = f.seed("seed")) t.seed = *v;
  if (auto v = f.number("t_end")) t.domain.t_end = *v;
  if (auto v = f.integer("log_every")) t.log_every = checked_int(*v, "train.log_every");
  if (auto v = f.integer("hidden_layers")) t.hidden_layers = checked_int(*v, "train.hidden_layers");
  if (auto v = f.integer("hidden_width")) t.hidden_width = checked_int(*v, "train.hidden_width");
  if (auto v = f.boolean("include_ic")) {
    t.include_ic = *v;
    rc.include_ic_set = true;
  }
  if (auto v = f.boolean("keep_best")) t.keep_best = *v;
  f.finish();
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("train." + std::string(e.what()));
  }
}

SyntheticSpec parse_synthetic(const json& j, const std::string& where) {
  Fields f(j, where);
  SyntheticSpec s;
  if (auto v = f.integer("n_points")) s.n_points = checked_int(*v, where + ".n_points");
  if (auto v = f.numbers("times")) s.times = *v;
  if (auto v = f.number("noise_sigma")) s.noise_sigma = *v;
  if (auto v = f.seed("seed")) s.seed = *v;
  f.finish();
  if (s.times.empty() && s.n_points < 2) throw ConfigError(where + ".n_points must be >= 2");
  if (s.noise_sigma < 0.0) throw ConfigError(where + ".noise_sigma must be >= 0");
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    if (s.times[i] < 0.0 || (i > 0 && !(s.times[i] > s.times[i - 1]))) {
      throw ConfigError(where + ".times must be non-negative and strictly increasing");
    }
  }
  return s;
}

// Reads {"r0": .., "branches": [{"r": .., "c": ..}]} where each leaf has
// type T. Used for both initial values and the free/frozen mask.
template <class Leaf>
void parse_branch_shaped(const json& j, const std::string& where, bool has_r0,
                         std::size_t branches, std::optional<Leaf>& r0,
                         std::vector<std::pair<Leaf, Leaf>>& out, Leaf (*read)(const json&, const std::string&)) {
  Fields f(j, where);
  if (const json* v = f.find("r0")) {
    if (!has_r0) throw ConfigError(where + ".r0 given but the case has no resistive branch");
    r0 = read(*v, where + ".r0");
  }
  const json* b = f.find("branches");
  if (!b || !b->is_array() || b->size() != branches) {
    throw ConfigError(where + ".branches must list " + std::to_string(branches) + " entries");
  }
  for (std::size_t i = 0; i < b->size(); ++i) {
    const std::string w = where + ".branches[" + std::to_string(i) + "]";
    Fields fb((*b)[i], w);
    const json* r = fb.find("r");
    const json* c = fb.find("c");
    fb.finish();
    if (!r || !c) throw ConfigError(w + " needs both r and c");
    out.emplace_back(read(*r, w + ".r"), read(*c, w + ".c"));
  }
  f.finish();
}

double read_positive(const json& v, const std::string& where) {
  if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>())) {
    throw ConfigError(where + " must be a positive number");
  }
  return v.get<double>();
}

bool read_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + " must be true or false");
  return v.get<bool>();
}

InverseSpec parse_inverse(const json& j, const std::filesystem::path& base_dir,
                          const std::optional<CircuitCase>& circuit) {
  Fields f(j, "inverse");
  InverseSpec s;
  if (auto v = f.string("dataset")) {
    std::filesystem::path p(*v);
    s.dataset = p.is_absolute() ? p : base_dir / p;
  }
  if (const json* v = f.find("synthetic")) s.synthetic = parse_synthetic(*v, "inverse.synthetic");
  if (auto v = f.number("init_scale")) {
    if (!(*v > 0.0)) throw ConfigError("inverse.init_scale must be > 0");
    s.init_scale = *v;
  }
  if (!circuit) throw ConfigError("inverse requires a case");
  const bool has_r0 = circuit->r0().has_value();
  const std::size_t nb = circuit->branches().size();
  if (const json* v = f.find("init")) {
    std::optional<double> r0;
    std::vector<std::pair<double, double>> rc;
    parse_branch_shaped<double>(*v, "inverse.init", has_r0, nb, r0, rc, &read_positive);
    if (has_r0 && !r0) throw ConfigError("inverse.init.r0 is required for this case");
    TrainableParams p;
    p.has_r0 = has_r0;
    if (r0) p.log_r.push_back(std::log(*r0));
    for (const auto& [r, c] : rc) {
      p.log_r.push_back(std::log(r));
      p.log_c.push_back(std::log(c));
    }
    p.free_r.assign(p.log_r.size(), true);
    p.free_c.assign(p.log_c.size(), true);
    s.init = p;
  }
  if (const json* v = f.find("free")) {
    std::optional<bool> r0;
    std::vector<std::pair<bool, bool>> rc;
    parse_branch_shaped<bool>(*v, "inverse.free", has_r0, nb, r0, rc, &read_bool);
    if (has_r0) s.free_r.push_back(r0.value_or(true));
    for (const auto& [r, c] : rc) {
      s.free_r.push_back(r);
      s.free_c.push_back(c);
    }
  }
  f.finish();
  if (s.dataset.has_value() == s.synthetic.has_value()) {
    throw ConfigError("inverse needs exactly one of dataset or synthetic");
  }
  return s;
}

}  // namespace

CircuitCase parse_case(const json& j, const std::string& where) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "case0") return CircuitCase::case0();
    if (name == "case1") return CircuitCase::case1();
    if (name == "case2") return CircuitCase::case2();
    if (name == "case3") return CircuitCase::case3();
    throw ConfigError(where + " must be an object or one of case0..case3");
  }
  Fields f(j, where);
  const auto u_dc = f.number("u_dc");
  const auto r0 = f.number("r0");
  const auto label = f.string("label");
  const json* b = f.find("branches");
  f.finish();
  if (!u_dc) throw ConfigError(where + ".u_dc is required");
  if (!b || !b->is_array() || b->empty()) throw ConfigError(where + ".branches must be a non-empty array");
  std::vector<RcBranch> branches;
  for (std::size_t i = 0; i < b->size(); ++i) {
    const std::string w = where + ".branches[" + std::to_string(i) + "]";
    Fields fb((*b)[i], w);
    const auto r = fb.number("r");
    const auto c = fb.number("c");
    fb.finish();
    if (!r || !c) throw ConfigError(w + " needs both r and c");
    branches.push_back({*r, *c});
  }
  try {
    return CircuitCase::make(*u_dc, r0, std::move(branches), label.value_or(""));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  Fields f(doc, "");
  RunConfig rc;
  if (auto v = f.string("name")) {
    if (v->empty() || v->find('/') != std::string::npos || *v == "." || *v == "..") {
      throw ConfigError("name must be a non-empty directory name");
    }
    rc.name = *v;
  }
  if (auto v = f.string("output_dir")) {
    std::filesystem::path p(*v);
    rc.output_dir = p.is_absolute() ? p : base_dir / p;
  }
  if (const json* v = f.find("case")) rc.circuit = parse_case(*v, "case");
  if (const json* v = f.find("train")) parse_train(*v, rc);
  if (const json* v = f.find("inverse")) rc.inverse = parse_inverse(*v, base_dir, rc.circuit);
  if (const json* v = f.find("synth")) {
    Fields fs(*v, "synth");
    SynthSpec s;
    if (auto file = fs.string("file")) {
      if (file->empty() || file->find('/') != std::string::npos) {
        throw ConfigError("synth.file must be a plain file name");
      }
      s.file = *file;
    }
    // Remaining keys describe the samples.
    json rest = *v;
    rest.erase("file");
    s.data = parse_synthetic(rest, "synth");
    rc.synth = s;
  }
  if (const json* v = f.find("sweep")) {
    Fields fs(*v, "sweep");
    SweepSpec s;
    if (auto t = fs.numbers("t_ends")) s.t_ends = *t;
    if (auto b = fs.boolean("scale_points")) s.scale_points = *b;
    fs.finish();
    if (s.t_ends.empty()) throw ConfigError("sweep.t_ends must be a non-empty array");
    for (double t : s.t_ends) {
      if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("sweep.t_ends entries must be > 0");
    }
    rc.sweep = s;
  }
  f.finish();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_run_config(doc, path.parent_path());
}

}  // namespace pinnrc::cli

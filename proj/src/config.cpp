#include "trussnet/config.hpp"

#include <climits>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#include "trussnet/errors.hpp"

namespace tn {

namespace {

struct Binding {
  const char* key;
  std::variant<int*, double*, std::string*, std::uint64_t*> slot;
};

// One table drives parsing, dumping, and the unknown-key check.
std::vector<Binding> bindings(RunConfig& c) {
  std::vector<Binding> b = {
      {"seed", &c.seed},
      {"threads", &c.threads},
      {"out", &c.out},
      {"gen.n", &c.gen.n},
      {"gen.p_add_edge", &c.gen.p_add_edge},
      {"gen.p_remove_edge", &c.gen.p_remove_edge},
      {"gen.p_move_face", &c.gen.p_move_face},
      {"gen.max_ops", &c.gen.max_ops},
      {"gen.designs", &c.gen.designs},
      {"homogenize.designs", &c.homogenize.designs},
      {"homogenize.dataset", &c.homogenize.dataset},
      {"homogenize.steps", &c.homogenize.steps},
      {"homogenize.train_designs", &c.homogenize.train_designs},
      {"homogenize.test_designs", &c.homogenize.test_designs},
      {"homogenize.extrapolation_paths", &c.homogenize.extrapolation_paths},
      {"homogenize.subdivisions", &c.homogenize.subdivisions},
      {"homogenize.relative_density", &c.homogenize.relative_density},
      {"homogenize.youngs_modulus", &c.homogenize.youngs_modulus},
      {"homogenize.poisson_ratio", &c.homogenize.poisson_ratio},
      {"homogenize.residual_rel_tol", &c.homogenize.residual_rel_tol},
      {"train.lambda_s", &c.train.optimizer.lambda_s},
      {"train.lambda_w", &c.train.optimizer.lambda_w},
      {"train.learning_rate", &c.train.optimizer.learning_rate},
      {"train.batch_size", &c.train.optimizer.batch_size},
      {"train.epochs", &c.train.optimizer.epochs},
      {"train.adam_beta1", &c.train.optimizer.adam_beta1},
      {"train.adam_beta2", &c.train.optimizer.adam_beta2},
      {"train.adam_epsilon", &c.train.optimizer.adam_epsilon},
      {"train.grad_clip", &c.train.optimizer.grad_clip},
      {"train.checkpoint_every", &c.train.optimizer.checkpoint_every},
      {"train.fd_check_every", &c.train.optimizer.fd_check_every},
      {"train.dataset", &c.train.dataset},
      {"train.designs", &c.train.designs},
      {"train.checkpoint", &c.train.checkpoint},
      {"eval.dataset", &c.eval.dataset},
      {"eval.designs", &c.eval.designs},
      {"eval.checkpoint", &c.eval.checkpoint},
      {"eval.splits", &c.eval.splits},
      {"simulate.designs", &c.simulate.designs},
      {"simulate.checkpoint", &c.simulate.checkpoint},
      {"simulate.design", &c.simulate.design},
      {"simulate.mode", &c.simulate.mode},
      {"simulate.program", &c.simulate.program},
      {"simulate.divisions", &c.simulate.divisions},
      {"simulate.tiling", &c.simulate.tiling},
      {"simulate.subdivisions", &c.simulate.subdivisions},
      {"simulate.steps", &c.simulate.steps},
      {"simulate.u_over_l", &c.simulate.u_over_l},
      {"simulate.side", &c.simulate.side},
      {"simulate.youngs_modulus", &c.simulate.youngs_modulus},
      {"simulate.poisson_ratio", &c.simulate.poisson_ratio},
      {"simulate.relative_density", &c.simulate.relative_density},
      {"simulate.residual_rel_tol", &c.simulate.residual_rel_tol},
      {"export.dataset", &c.export_.dataset},
      {"export.designs", &c.export_.designs},
      {"export.checkpoint", &c.export_.checkpoint},
      {"export.splits", &c.export_.splits},
  };
  static const char* kAffineKeys[9] = {"simulate.f11", "simulate.f12", "simulate.f13",
                                       "simulate.f21", "simulate.f22", "simulate.f23",
                                       "simulate.f31", "simulate.f32", "simulate.f33"};
  for (int i = 0; i < 9; ++i) b.push_back({kAffineKeys[i], &c.simulate.affine[std::size_t(i)]});
  return b;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t z = s.find_last_not_of(" \t\r");
  return s.substr(a, z - a + 1);
}

void assign(const Binding& b, const std::string& value) {
  const std::string what = std::string(b.key) + " = " + value;
  try {
    std::size_t used = 0;
    if (auto* p = std::get_if<int*>(&b.slot)) {
      long long v = std::stoll(value, &used);
      if (used != value.size()) throw ValidationError("");
      if (v < INT_MIN || v > INT_MAX) throw ValidationError("");
      **p = int(v);
    } else if (auto* p = std::get_if<double*>(&b.slot)) {
      double v = std::stod(value, &used);
      if (used != value.size()) throw ValidationError("");
      **p = v;
    } else if (auto* p = std::get_if<std::uint64_t*>(&b.slot)) {
      if (!value.empty() && value[0] == '-') throw ValidationError("");
      unsigned long long v = std::stoull(value, &used);
      if (used != value.size()) throw ValidationError("");
      **p = v;
    } else {
      *std::get<std::string*>(b.slot) = value;
    }
  } catch (const std::exception&) {
    throw ValidationError("malformed config value: " + what);
  }
}

void check_range(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError("config: " + msg);
}

void check_mode(const std::string& value, std::initializer_list<const char*> allowed,
                const std::string& key) {
  for (const char* a : allowed)
    if (value == a) return;
  throw ValidationError("config: " + key + " must be one of the documented names, got '" +
                        value + "'");
}

}  // namespace

void RunConfig::validate() const {
  check_range(threads >= 1, "threads must be >= 1");
  check_range(!out.empty(), "out must not be empty");
  check_range(gen.n >= 0, "gen.n must be >= 0");
  check_range(gen.max_ops >= 0, "gen.max_ops must be >= 0");
  for (double p : {gen.p_add_edge, gen.p_remove_edge, gen.p_move_face})
    check_range(p >= 0.0 && p <= 1.0, "gen op probabilities must lie in [0, 1]");
  check_range(homogenize.steps >= 1, "homogenize.steps must be >= 1");
  check_range(homogenize.train_designs >= 0, "homogenize.train_designs must be >= 0");
  check_range(homogenize.test_designs >= 0, "homogenize.test_designs must be >= 0");
  check_range(homogenize.extrapolation_paths >= 0,
              "homogenize.extrapolation_paths must be >= 0");
  check_range(homogenize.subdivisions >= 1, "homogenize.subdivisions must be >= 1");
  check_range(homogenize.relative_density > 0.0 && homogenize.relative_density < 1.0,
              "homogenize.relative_density must lie in (0, 1)");
  train.optimizer.validate();
  check_mode(simulate.mode, {"continuum", "resolved", "both"}, "simulate.mode");
  check_mode(simulate.program, {"uniaxial", "affine"}, "simulate.program");
  check_range(simulate.design >= 0, "simulate.design must be >= 0");
  check_range(simulate.divisions >= 1, "simulate.divisions must be >= 1");
  check_range(simulate.tiling >= 1, "simulate.tiling must be >= 1");
  check_range(simulate.subdivisions >= 1, "simulate.subdivisions must be >= 1");
  check_range(simulate.steps >= 1, "simulate.steps must be >= 1");
  check_range(simulate.side > 0.0, "simulate.side must be positive");
  check_range(simulate.relative_density > 0.0 && simulate.relative_density < 1.0,
              "simulate.relative_density must lie in (0, 1)");
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::vector<Binding> table = bindings(c);
  std::set<std::string> seen;

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (std::size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + " is not `key = value`");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second) throw ValidationError("duplicate config key: " + key);

    const Binding* hit = nullptr;
    for (const Binding& b : table)
      if (key == b.key) {
        hit = &b;
        break;
      }
    if (!hit) throw ValidationError("unknown config key: " + key);
    assign(*hit, value);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string resolved_config(const RunConfig& c) {
  RunConfig copy = c;
  std::ostringstream os;
  os.precision(17);
  for (const Binding& b : bindings(copy)) {
    os << b.key << " = ";
    if (auto* p = std::get_if<int*>(&b.slot))
      os << **p;
    else if (auto* p = std::get_if<double*>(&b.slot))
      os << **p;
    else if (auto* p = std::get_if<std::uint64_t*>(&b.slot))
      os << **p;
    else
      os << *std::get<std::string*>(b.slot);
    os << '\n';
  }
  return os.str();
}

std::string resolve_path(const RunConfig& c, const std::string& path) {
  if (path.empty()) throw ValidationError("empty path in config");
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(c.out) / p).string();
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(csv);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace tn

#include "slipopt/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace slipopt {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Typed accessor for one section; remembers which keys were consumed.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) {
    allowed_.insert(key);
    if (tree_ == nullptr) return std::nullopt;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return trim(it->second.data());
  }

  void real(const std::string& key, double& out) {
    if (auto v = raw(key)) out = to_real(key, *v);
  }
  void real(const std::string& key, std::optional<double>& out) {
    if (auto v = raw(key)) out = to_real(key, *v);
  }
  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (auto v = raw(key)) out = static_cast<Int>(to_int(key, *v));
  }
  void text(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }
  void list(const std::string& key, std::optional<std::vector<double>>& out) {
    if (auto v = raw(key)) {
      try {
        out = parse_real_list(*v);
      } catch (const ConfigError& e) {
        fail(key, e.what());
      }
    }
  }

  void reject_unknown() const {
    if (tree_ == nullptr) return;
    for (const auto& [key, child] : *tree_) {
      if (!allowed_.count(key)) {
        std::string known;
        for (const auto& k : allowed_) known += (known.empty() ? "" : ", ") + k;
        throw ConfigError("config: unknown key '" + key + "' in [" + name_ + "]; known keys: " + known);
      }
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError("config: [" + name_ + "] " + key + ": " + why);
  }

 private:
  double to_real(const std::string& key, const std::string& v) const {
    char* end = nullptr;
    errno = 0;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d)) {
      fail(key, "expected a finite number, got '" + v + "'");
    }
    return d;
  }
  long long to_int(const std::string& key, const std::string& v) const {
    char* end = nullptr;
    errno = 0;
    const long long i = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) fail(key, "expected an integer, got '" + v + "'");
    return i;
  }

  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> allowed_;
};

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  const auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto dash = item.find('-', 1);
    char* end = nullptr;
    if (dash != std::string::npos) {
      const std::string lo_s = item.substr(0, dash);
      const std::string hi_s = item.substr(dash + 1);
      const unsigned long long lo = std::strtoull(lo_s.c_str(), &end, 10);
      if (lo_s.empty() || *end != '\0') throw ConfigError("bad seed range '" + item + "'");
      const unsigned long long hi = std::strtoull(hi_s.c_str(), &end, 10);
      if (hi_s.empty() || *end != '\0' || hi < lo) throw ConfigError("bad seed range '" + item + "'");
      for (unsigned long long s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      if (item.empty() || item[0] == '-') throw ConfigError("bad seed '" + item + "'");
      const unsigned long long s = std::strtoull(item.c_str(), &end, 10);
      if (*end != '\0') throw ConfigError("bad seed '" + item + "'");
      seeds.push_back(s);
    }
  }
  return seeds;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size() || !std::isfinite(v)) {
      throw ConfigError("expected a comma-separated list of numbers, bad entry '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree root;
  std::istringstream in(text);
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  static const std::set<std::string> sections = {"problem", "algorithm", "schedule", "run"};
  for (const auto& [name, node] : root) {
    if (!sections.count(name)) {
      throw ConfigError("config: unknown section or top-level key '" + name +
                        "'; sections are [problem], [algorithm], [schedule], [run]");
    }
    if (!node.data().empty()) throw ConfigError("config: '" + name + "' must be a section");
  }

  RunConfig cfg;

  Section p("problem", child(root, "problem"));
  ProblemConfig& pc = cfg.problem;
  p.text("kind", pc.kind);
  p.integer("dim_x", pc.dim_x);
  p.integer("dim_y", pc.dim_y);
  p.integer("instance_seed", pc.instance_seed);
  p.real("a", pc.a);
  p.text("core", pc.core);
  p.real("box_radius", pc.box_radius);
  p.integer("n_train", pc.n_train);
  p.integer("n_val", pc.n_val);
  p.integer("feature_dim", pc.feature_dim);
  p.real("corruption", pc.corruption);
  p.real("lambda", pc.lambda);
  p.integer("data_seed", pc.data_seed);
  std::string noise_kind = "none";
  p.text("noise", noise_kind);
  double sf1 = 0, sg1 = 0, sg2 = 0, sz = 0;
  p.real("sigma_f1", sf1);
  p.real("sigma_g1", sg1);
  p.real("sigma_g2", sg2);
  p.real("sigma_z", sz);
  if (noise_kind == "none") {
    pc.noise = NoiseModel::noiseless();
  } else if (noise_kind == "gaussian") {
    pc.noise = NoiseModel::gaussian(sf1, sg1, sg2);
    pc.noise.sigma_z = sz;
  } else if (noise_kind == "bounded") {
    pc.noise = NoiseModel::bounded(sf1, sg1, sg2, sz);
  } else {
    p.fail("noise", "expected none | gaussian | bounded, got '" + noise_kind + "'");
  }
  for (double s : {sf1, sg1, sg2, sz}) {
    if (s < 0.0) p.fail("sigma", "noise levels must be >= 0");
  }
  static const std::set<std::string> kinds = {"q2", "quadratic", "unbounded_smooth", "hyperclean"};
  if (!kinds.count(pc.kind)) p.fail("kind", "expected q2 | quadratic | unbounded_smooth | hyperclean, got '" + pc.kind + "'");
  if (pc.core != "q2" && pc.core != "random") p.fail("core", "expected q2 | random, got '" + pc.core + "'");
  if (pc.dim_x < 1 || pc.dim_y < 1) p.fail("dim_x/dim_y", "dimensions must be positive");
  p.reject_unknown();

  Section a("algorithm", child(root, "algorithm"));
  AlgorithmConfig& ac = cfg.algorithm;
  a.text("name", ac.name);
  a.integer("refine_interval", ac.refine_interval);
  a.integer("refine_steps", ac.refine_steps);
  a.real("eta_exponent", ac.eta_exponent);
  a.real("alpha_exponent", ac.alpha_exponent);
  static const std::set<std::string> algos = {"slip", "masoba", "doubleloop", "ttsa"};
  if (!algos.count(ac.name)) a.fail("name", "expected slip | masoba | doubleloop | ttsa, got '" + ac.name + "'");
  if (ac.refine_interval < 1) a.fail("refine_interval", "must be >= 1");
  if (ac.refine_steps < 0) a.fail("refine_steps", "must be >= 0");
  a.reject_unknown();

  Section s("schedule", child(root, "schedule"));
  ScheduleConfig& sc = cfg.schedule;
  std::string mode = "practical";
  s.text("mode", mode);
  try {
    sc.mode = parse_schedule_mode(mode);
  } catch (const std::exception& e) {
    s.fail("mode", e.what());
  }
  for (const char* key : {"alpha", "beta", "gamma", "eta", "T", "T0", "alpha_init"}) {
    std::optional<double> v;
    s.real(key, v);
    if (v) sc.practical[key] = *v;
  }
  s.real("eps", sc.eps);
  s.real("delta", sc.delta);
  s.real("Delta0", sc.Delta0);
  s.real("Delta_y0", sc.Delta_y0);
  s.real("Delta_z0", sc.Delta_z0);
  if (sc.mode == ScheduleMode::Practical) {
    try {
      schedule_practical(sc.practical);
    } catch (const std::exception& e) {
      s.fail("practical", e.what());
    }
  }
  s.reject_unknown();

  Section r("run", child(root, "run"));
  RunSettings& rc = cfg.run;
  if (auto seeds = r.raw("seeds")) {
    try {
      rc.seeds = parse_seed_list(*seeds);
    } catch (const ConfigError& e) {
      r.fail("seeds", e.what());
    }
  }
  r.real("max_wall_seconds", rc.max_wall_seconds);
  r.text("out", rc.out);
  r.integer("workers", rc.workers);
  r.integer("fd_every", rc.fd_every);
  r.integer("max_iters", rc.max_iters);
  r.list("x0", rc.x0);
  r.list("y0", rc.y0);
  r.list("z0", rc.z0);
  if (rc.seeds.empty()) r.fail("seeds", "at least one seed is required");
  if (rc.workers < 1) r.fail("workers", "must be >= 1");
  if (rc.max_wall_seconds < 0.0) r.fail("max_wall_seconds", "must be >= 0");
  if (rc.max_iters < 0) r.fail("max_iters", "must be >= 0");
  r.reject_unknown();

  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace slipopt

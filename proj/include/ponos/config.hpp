#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include "ponos/data.hpp"
#include "ponos/errors.hpp"
#include "ponos/optim.hpp"
#include "ponos/problems.hpp"

namespace ponos {

struct ProblemConfig {
  std::string kind = "lsq";
  std::size_t samples = 50;
  std::size_t dim = 20;
  std::uint64_t seed = 0;
  double cond = 1.0;
  double l_max = 0.0;  // 0: natural scale
  double bandwidth = 0.5;
  double separation = 4.0;
  std::size_t test_samples = 0;
  std::size_t classes = 3;
  std::size_t hidden = 16;
  std::string path;
  double train_frac = 0.8;
  std::uint64_t split_seed = 0;
};

struct RunConfig {
  ProblemConfig problem;
  std::string method = "ponos";
  OptimizerOptions opts;
  long epochs = 10;
  std::size_t batch = 5;
  std::uint64_t seed = 0;
  SampleOrder order = SampleOrder::shuffled_epoch;
  std::string name = "run";

  // Fully resolved key/value view, defaults included; feeding it back through
  // resolve_config reproduces this config (the reproducibility contract of
  // summary.json).
  std::map<std::string, std::string> resolved;

  RunSettings settings() const { return RunSettings{epochs, batch, seed, order}; }
};

namespace cfg {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Flat "section.key" -> value map read from INI-style text. '#' and ';' start
// comments; unknown sections are rejected later during resolution.
inline std::map<std::string, std::string> parse_ini(std::istream& in) {
  std::map<std::string, std::string> flat;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(line_no, "empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    if (section.empty()) throw ParseError(line_no, "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    flat[section + "." + key] = value;
  }
  return flat;
}

class Reader {
 public:
  explicit Reader(const std::map<std::string, std::string>& flat) : flat_(flat) {}

  bool has(const std::string& key) const { return flat_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) {
    mark(key);
    auto it = flat_.find(key);
    return it == flat_.end() ? fallback : it->second;
  }

  double number(const std::string& key, double fallback) {
    mark(key);
    auto it = flat_.find(key);
    if (it == flat_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw ValidationError(key, "not a number: '" + it->second + "'");
    }
  }

  long integer(const std::string& key, long fallback) {
    const double v = number(key, static_cast<double>(fallback));
    const long r = static_cast<long>(v);
    if (static_cast<double>(r) != v) throw ValidationError(key, "not an integer");
    return r;
  }

  std::uint64_t uinteger(const std::string& key, std::uint64_t fallback) {
    mark(key);
    auto it = flat_.find(key);
    if (it == flat_.end()) return fallback;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw ValidationError(key, "not a non-negative integer");
    }
  }

  bool boolean(const std::string& key, bool fallback) {
    mark(key);
    auto it = flat_.find(key);
    if (it == flat_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ValidationError(key, "expected a boolean, got '" + v + "'");
  }

  void reject_unknown() const {
    for (const auto& [key, value] : flat_) {
      if (!consumed_.count(key))
        throw ValidationError(key, "unknown key (no silent typos)");
    }
  }

 private:
  void mark(const std::string& key) { consumed_.insert(key); }

  const std::map<std::string, std::string>& flat_;
  std::set<std::string> consumed_;
};

inline void check_range(const std::string& field, double v, double lo, double hi,
                        bool open = true) {
  const bool ok = open ? (v > lo && v < hi) : (v >= lo && v <= hi);
  if (!ok) {
    std::ostringstream os;
    os << "must be in " << (open ? '(' : '[') << lo << ',' << hi << (open ? ')' : ']')
       << ", got " << v;
    throw ValidationError(field, os.str());
  }
}

inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace cfg

// Canonical spellings for a few keys the literature abbreviates.
inline std::map<std::string, std::string> canonicalize_keys(
    std::map<std::string, std::string> flat) {
  static const std::map<std::string, std::string> aliases = {
      {"problem.M", "problem.samples"},
      {"problem.n", "problem.dim"},
      {"run.batch_size", "run.batch"},
  };
  for (const auto& [from, to] : aliases) {
    auto it = flat.find(from);
    if (it != flat.end()) {
      if (flat.count(to)) throw ValidationError(from, "duplicates " + to);
      flat[to] = it->second;
      flat.erase(from);
    }
  }
  return flat;
}

// Method presets: the named optimizers of the benchmark. Explicit
// linesearch/stepsize/reset keys override individual components.
inline void apply_method_preset(const std::string& method, OptimizerOptions& opts) {
  auto set = [&](LineSearchMode ls, StepsizeRule ss, ResetRule rs) {
    opts.linesearch = ls;
    opts.stepsize = ss;
    opts.reset = rs;
  };
  if (method == "ponos") {
    set(LineSearchMode::zhang, StepsizeRule::polyak, ResetRule::backtrack_memory);
  } else if (method == "ponos_reset0") {
    set(LineSearchMode::zhang, StepsizeRule::polyak, ResetRule::none);
  } else if (method == "sls") {
    set(LineSearchMode::monotone, StepsizeRule::exp_cap, ResetRule::none);
  } else if (method == "sps") {
    set(LineSearchMode::none, StepsizeRule::sps_smoothed, ResetRule::none);
  } else if (method == "sgd") {
    set(LineSearchMode::none, StepsizeRule::constant, ResetRule::none);
  } else if (method == "adam") {
    set(LineSearchMode::none, StepsizeRule::constant, ResetRule::none);
    opts.adam_baseline = true;
  } else if (method == "ponos_prec") {
    set(LineSearchMode::zhang, StepsizeRule::polyak, ResetRule::backtrack_memory);
    opts.preconditioned = true;
  } else if (method == "sls_prec") {
    set(LineSearchMode::monotone, StepsizeRule::exp_cap, ResetRule::none);
    opts.preconditioned = true;
  } else if (method == "sps_prec") {
    set(LineSearchMode::none, StepsizeRule::sps_smoothed, ResetRule::none);
    opts.preconditioned = true;
  } else if (method == "grippo_cross") {
    set(LineSearchMode::grippo_cross, StepsizeRule::polyak, ResetRule::backtrack_memory);
  } else if (method == "grippo_single") {
    set(LineSearchMode::grippo_single, StepsizeRule::polyak, ResetRule::backtrack_memory);
  } else if (method == "zhang_every2") {
    set(LineSearchMode::zhang, StepsizeRule::polyak, ResetRule::none);
    opts.ls_every = 2;
  } else {
    throw ValidationError("optimizer.method", "unknown method '" + method + "'");
  }
}

inline LineSearchMode parse_linesearch(const std::string& v) {
  if (v == "none") return LineSearchMode::none;
  if (v == "monotone") return LineSearchMode::monotone;
  if (v == "zhang") return LineSearchMode::zhang;
  if (v == "grippo_cross") return LineSearchMode::grippo_cross;
  if (v == "grippo_single") return LineSearchMode::grippo_single;
  throw ValidationError("optimizer.linesearch", "unknown line search '" + v + "'");
}

inline StepsizeRule parse_stepsize(const std::string& v) {
  if (v == "constant") return StepsizeRule::constant;
  if (v == "polyak") return StepsizeRule::polyak;
  if (v == "exp_cap") return StepsizeRule::exp_cap;
  if (v == "sps_smoothed") return StepsizeRule::sps_smoothed;
  if (v == "reset3") return StepsizeRule::reset3;
  if (v == "reset4") return StepsizeRule::reset4;
  throw ValidationError("optimizer.stepsize", "unknown step-size rule '" + v + "'");
}

inline const char* linesearch_name(LineSearchMode m) {
  switch (m) {
    case LineSearchMode::none: return "none";
    case LineSearchMode::monotone: return "monotone";
    case LineSearchMode::zhang: return "zhang";
    case LineSearchMode::grippo_cross: return "grippo_cross";
    case LineSearchMode::grippo_single: return "grippo_single";
  }
  return "?";
}

inline const char* stepsize_name(StepsizeRule s) {
  switch (s) {
    case StepsizeRule::constant: return "constant";
    case StepsizeRule::polyak: return "polyak";
    case StepsizeRule::exp_cap: return "exp_cap";
    case StepsizeRule::sps_smoothed: return "sps_smoothed";
    case StepsizeRule::reset3: return "reset3";
    case StepsizeRule::reset4: return "reset4";
  }
  return "?";
}

// Builds the typed config from a flat key/value map, filling defaults,
// validating ranges and rejecting unknown keys; records the fully resolved
// map for the summary echo.
inline RunConfig resolve_config(const std::map<std::string, std::string>& raw_flat) {
  const auto flat = canonicalize_keys(raw_flat);
  cfg::Reader r(flat);
  RunConfig config;

  // --- problem ---
  ProblemConfig& p = config.problem;
  p.kind = r.str("problem.kind", "lsq");
  static const std::set<std::string> kinds = {"lsq",        "kernel_blobs", "mlp_blobs",
                                              "kernel_csv", "kernel_libsvm", "mlp_csv",
                                              "mlp_libsvm"};
  if (!kinds.count(p.kind)) throw ValidationError("problem.kind", "unknown kind '" + p.kind + "'");
  p.samples = static_cast<std::size_t>(r.integer("problem.samples", static_cast<long>(p.samples)));
  p.dim = static_cast<std::size_t>(r.integer("problem.dim", static_cast<long>(p.dim)));
  p.seed = r.uinteger("problem.seed", p.seed);
  p.cond = r.number("problem.cond", p.cond);
  p.l_max = r.number("problem.l_max", p.l_max);
  p.bandwidth = r.number("problem.bandwidth", p.bandwidth);
  p.separation = r.number("problem.separation", p.separation);
  p.test_samples =
      static_cast<std::size_t>(r.integer("problem.test_samples", static_cast<long>(p.test_samples)));
  p.classes = static_cast<std::size_t>(r.integer("problem.classes", static_cast<long>(p.classes)));
  p.hidden = static_cast<std::size_t>(r.integer("problem.hidden", static_cast<long>(p.hidden)));
  p.path = r.str("problem.path", p.path);
  p.train_frac = r.number("problem.train_frac", p.train_frac);
  p.split_seed = r.uinteger("problem.split_seed", p.seed);
  if (p.samples < 1) throw ValidationError("problem.samples", "must be >= 1");
  if (p.dim < 1) throw ValidationError("problem.dim", "must be >= 1");
  if (!(p.bandwidth > 0.0)) throw ValidationError("problem.bandwidth", "must be positive");
  cfg::check_range("problem.train_frac", p.train_frac, 0.0, 1.0);
  const bool needs_path = p.kind.ends_with("csv") || p.kind.ends_with("libsvm");
  if (needs_path && p.path.empty()) throw ValidationError("problem.path", "required for " + p.kind);

  // --- optimizer ---
  config.method = r.str("optimizer.method", "ponos");
  OptimizerOptions& o = config.opts;
  apply_method_preset(config.method, o);
  if (r.has("optimizer.linesearch"))
    o.linesearch = parse_linesearch(r.str("optimizer.linesearch", ""));
  else
    r.str("optimizer.linesearch", "");  // consume for reject_unknown symmetry
  if (r.has("optimizer.stepsize")) o.stepsize = parse_stepsize(r.str("optimizer.stepsize", ""));
  else
    r.str("optimizer.stepsize", "");
  {
    const std::string reset = r.str("optimizer.reset", o.reset == ResetRule::backtrack_memory
                                                           ? "new"
                                                           : "none");
    if (reset == "new")
      o.reset = ResetRule::backtrack_memory;
    else if (reset == "none")
      o.reset = ResetRule::none;
    else
      throw ValidationError("optimizer.reset", "expected 'new' or 'none'");
  }
  o.c = r.number("optimizer.c", o.c);
  o.c_p = r.number("optimizer.c_p", o.c_p);
  o.delta = r.number("optimizer.delta", o.delta);
  o.xi = r.number("optimizer.xi", o.xi);
  o.gamma = r.number("optimizer.gamma", o.gamma);
  o.eta_max = r.number("optimizer.eta_max", o.eta_max);
  o.eta_init = r.number("optimizer.eta_init", o.eta_init);
  o.lr = r.number("optimizer.lr", o.lr);
  o.beta2 = r.number("optimizer.beta2", o.beta2);
  o.eps = r.number("optimizer.eps", o.eps);
  o.adam_beta1 = r.number("optimizer.adam_beta1", o.adam_beta1);
  o.adam_beta2 = r.number("optimizer.adam_beta2", o.adam_beta2);
  o.max_backtracks = static_cast<int>(r.integer("optimizer.max_backtracks", o.max_backtracks));
  o.ls_every = static_cast<int>(r.integer("optimizer.ls_every", o.ls_every));
  o.grippo_window =
      static_cast<std::size_t>(r.integer("optimizer.window", static_cast<long>(o.grippo_window)));
  o.grippo_full_window_only =
      r.boolean("optimizer.full_window_only", o.grippo_full_window_only);
  o.reset4_squared_norm = r.boolean("optimizer.reset4_squared_norm", o.reset4_squared_norm);
  o.grad_tol = r.number("optimizer.tol_g", o.grad_tol);

  cfg::check_range("optimizer.c", o.c, 0.0, 1.0);
  cfg::check_range("optimizer.c_p", o.c_p, 0.0, 1.0);
  cfg::check_range("optimizer.delta", o.delta, 0.0, 1.0);
  cfg::check_range("optimizer.xi", o.xi, 0.0, 1.0, /*open=*/false);
  if (!(o.gamma > 1.0)) throw ValidationError("optimizer.gamma", "must be > 1");
  if (!(o.eta_max > 0.0)) throw ValidationError("optimizer.eta_max", "must be positive");
  if (!(o.eta_init > 0.0)) throw ValidationError("optimizer.eta_init", "must be positive");
  if (!(o.lr > 0.0) && (o.stepsize == StepsizeRule::constant || o.adam_baseline))
    throw ValidationError("optimizer.lr", "must be positive");
  cfg::check_range("optimizer.beta2", o.beta2, 0.0, 1.0);
  if (!(o.eps > 0.0)) throw ValidationError("optimizer.eps", "must be positive");
  if (o.max_backtracks < 1) throw ValidationError("optimizer.max_backtracks", "must be >= 1");
  if (o.ls_every < 1) throw ValidationError("optimizer.ls_every", "must be >= 1");
  if (o.stepsize == StepsizeRule::reset4 &&
      (o.linesearch == LineSearchMode::none || o.ls_every != 1))
    throw ValidationError("optimizer.stepsize",
                          "reset4 needs the accepted trial value: requires a line search "
                          "with ls_every = 1");

  // --- run ---
  config.epochs = r.integer("run.epochs", config.epochs);
  config.batch = static_cast<std::size_t>(r.integer("run.batch", static_cast<long>(config.batch)));
  config.seed = r.uinteger("run.seed", config.seed);
  {
    const std::string order = r.str("run.order", "shuffled");
    if (order == "shuffled")
      config.order = SampleOrder::shuffled_epoch;
    else if (order == "uniform")
      config.order = SampleOrder::uniform;
    else
      throw ValidationError("run.order", "expected 'shuffled' or 'uniform'");
  }
  config.name = r.str("run.name", config.name);
  if (config.epochs < 0) throw ValidationError("run.epochs", "must be >= 0");
  if (config.batch < 1) throw ValidationError("run.batch", "must be >= 1");

  r.reject_unknown();

  // --- echo ---
  auto& e = config.resolved;
  e["problem.kind"] = p.kind;
  e["problem.samples"] = std::to_string(p.samples);
  e["problem.dim"] = std::to_string(p.dim);
  e["problem.seed"] = std::to_string(p.seed);
  e["problem.cond"] = cfg::format_value(p.cond);
  e["problem.l_max"] = cfg::format_value(p.l_max);
  e["problem.bandwidth"] = cfg::format_value(p.bandwidth);
  e["problem.separation"] = cfg::format_value(p.separation);
  e["problem.test_samples"] = std::to_string(p.test_samples);
  e["problem.classes"] = std::to_string(p.classes);
  e["problem.hidden"] = std::to_string(p.hidden);
  if (!p.path.empty()) e["problem.path"] = p.path;
  e["problem.train_frac"] = cfg::format_value(p.train_frac);
  e["problem.split_seed"] = std::to_string(p.split_seed);
  e["optimizer.method"] = config.method;
  e["optimizer.linesearch"] = linesearch_name(o.linesearch);
  e["optimizer.stepsize"] = stepsize_name(o.stepsize);
  e["optimizer.reset"] = o.reset == ResetRule::backtrack_memory ? "new" : "none";
  e["optimizer.c"] = cfg::format_value(o.c);
  e["optimizer.c_p"] = cfg::format_value(o.c_p);
  e["optimizer.delta"] = cfg::format_value(o.delta);
  e["optimizer.xi"] = cfg::format_value(o.xi);
  e["optimizer.gamma"] = cfg::format_value(o.gamma);
  e["optimizer.eta_max"] = cfg::format_value(o.eta_max);
  e["optimizer.eta_init"] = cfg::format_value(o.eta_init);
  e["optimizer.lr"] = cfg::format_value(o.lr);
  e["optimizer.beta2"] = cfg::format_value(o.beta2);
  e["optimizer.eps"] = cfg::format_value(o.eps);
  e["optimizer.adam_beta1"] = cfg::format_value(o.adam_beta1);
  e["optimizer.adam_beta2"] = cfg::format_value(o.adam_beta2);
  e["optimizer.max_backtracks"] = std::to_string(o.max_backtracks);
  e["optimizer.ls_every"] = std::to_string(o.ls_every);
  e["optimizer.window"] = std::to_string(o.grippo_window);
  e["optimizer.full_window_only"] = o.grippo_full_window_only ? "true" : "false";
  e["optimizer.reset4_squared_norm"] = o.reset4_squared_norm ? "true" : "false";
  e["optimizer.tol_g"] = cfg::format_value(o.grad_tol);
  e["run.epochs"] = std::to_string(config.epochs);
  e["run.batch"] = std::to_string(config.batch);
  e["run.seed"] = std::to_string(config.seed);
  e["run.order"] = config.order == SampleOrder::shuffled_epoch ? "shuffled" : "uniform";
  e["run.name"] = config.name;
  return config;
}

inline RunConfig parse_config_text(std::istream& in) { return resolve_config(cfg::parse_ini(in)); }

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open '" + path + "'");
  RunConfig config = parse_config_text(in);
  if (config.name == "run") {
    // default the run name to the file stem
    std::string stem = path;
    const std::size_t slash = stem.find_last_of("/\\");
    if (slash != std::string::npos) stem = stem.substr(slash + 1);
    const std::size_t dot = stem.find_last_of('.');
    if (dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
    config.name = stem;
    config.resolved["run.name"] = stem;
  }
  return config;
}

// ---------------------------------------------------------------------------
// Problem factory
// ---------------------------------------------------------------------------

inline std::shared_ptr<Problem> build_problem(const ProblemConfig& p) {
  if (p.kind == "lsq") {
    return make_interpolating_least_squares(p.seed, p.samples, p.dim, p.cond, p.l_max);
  }
  if (p.kind == "kernel_blobs") {
    Dataset train = make_binary_blobs(p.seed, p.samples, p.dim, p.separation);
    auto problem = make_kernel_logistic(std::move(train.features), std::move(train.labels),
                                        p.bandwidth);
    if (p.test_samples > 0) {
      Dataset test = make_binary_blobs(p.seed + 0x7e57, p.test_samples, p.dim, p.separation);
      problem->attach_test_split(std::move(test.features), std::move(test.labels));
    }
    return problem;
  }
  if (p.kind == "mlp_blobs") {
    Dataset train = make_multiclass_blobs(p.seed, p.samples, p.dim, p.classes, p.separation);
    auto problem =
        make_mlp_problem(p.hidden, std::move(train.features), labels_as_classes(train), p.seed);
    if (p.test_samples > 0) {
      Dataset test =
          make_multiclass_blobs(p.seed + 0x7e57, p.test_samples, p.dim, p.classes, p.separation);
      problem->attach_test_split(std::move(test.features), labels_as_classes(test));
    }
    return problem;
  }
  Dataset full = p.kind.ends_with("csv") ? load_csv(p.path) : load_libsvm(p.path);
  if (p.kind.starts_with("kernel")) {
    // Map the two-valued label column before splitting so both splits share
    // the same -1/+1 convention.
    full.labels = labels_as_binary(full);
  }
  auto [train, test] = train_test_split(full, p.train_frac, p.split_seed);
  if (p.kind.starts_with("kernel")) {
    auto problem =
        make_kernel_logistic(std::move(train.features), std::move(train.labels), p.bandwidth);
    if (test.size() > 0)
      problem->attach_test_split(std::move(test.features), std::move(test.labels));
    return problem;
  }
  auto problem =
      make_mlp_problem(p.hidden, std::move(train.features), labels_as_classes(train), p.seed);
  if (test.size() > 0) problem->attach_test_split(std::move(test.features), labels_as_classes(test));
  return problem;
}

inline Runner make_runner(const RunConfig& config) {
  return Runner(build_problem(config.problem), config.opts, config.settings());
}

}  // namespace ponos

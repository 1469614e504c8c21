#pragma once

// Experiment harness behind the command-line tool: config-file parsing with
// strict schema validation, seeded problem-file generation and loading,
// single runs that emit a per-trial CSV trace plus a key-value summary,
// parameter sweeps fanned out over threads, and report/assert logic.
//
// Exit codes: 0 success, 2 configuration or input error, 3 measured regret
// above the asserted bound.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "multiswitch/core.hpp"
#include "multiswitch/experts.hpp"
#include "multiswitch/genbench.hpp"
#include "multiswitch/graphkernel.hpp"
#include "multiswitch/matmw.hpp"
#include "multiswitch/ogd.hpp"

namespace multiswitch {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBound = 3;

// ---------------------------------------------------------------------------
// Formatting helpers. All floating-point output goes through %.17g so that
// repeated runs with the same seed produce byte-identical files.
// ---------------------------------------------------------------------------
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Experiment configuration.
// ---------------------------------------------------------------------------
enum class Algorithm { kExperts, kSpecialistOracle, kMW, kMatMW, kOGD };

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kExperts: return "experts";
    case Algorithm::kSpecialistOracle: return "specialist-oracle";
    case Algorithm::kMW: return "mw";
    case Algorithm::kMatMW: return "matmw";
    case Algorithm::kOGD: return "ogd";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "experts") return Algorithm::kExperts;
  if (s == "specialist-oracle") return Algorithm::kSpecialistOracle;
  if (s == "mw") return Algorithm::kMW;
  if (s == "matmw") return Algorithm::kMatMW;
  if (s == "ogd") return Algorithm::kOGD;
  throw ConfigError("unknown algorithm '" + s +
                    "' (expected experts, specialist-oracle, mw, matmw or ogd)");
}

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kExperts;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool assert_bounds = false;

  // Problem description (which fields apply depends on the algorithm).
  int tasks = 0;                  // s
  std::vector<int> lengths;       // per-task trial counts
  int switches = 0;               // k
  int modes = 0;                  // m
  int experts = 0;                // n (experts / specialist-oracle / mw)
  int instances = 0;              // p (matmw)
  double noise = -1.0;            // loss noise rate (experts family)
  int dim = 0;                    // ogd
  int trials = 0;                 // ogd
  std::string problem_file;       // load instead of generating

  // Overrides; NaN / 0 mean "tuned automatically".
  std::optional<double> eta;
  std::optional<double> c_hat;
  std::optional<double> gamma;
  std::optional<double> xk2_hat;

  // Sweep grids (cartesian product); empty lists fall back to the base value.
  std::vector<int> sweep_switches;
  std::vector<int> sweep_modes;
  std::vector<std::uint64_t> sweep_seeds;
};

// ---------------------------------------------------------------------------
// Config file parser: flat INI-style sections of `key = value` lines, with
// '#' or ';' comments. Unknown sections, unknown keys, and keys that the
// chosen algorithm does not use are all rejected, naming the offender.
// ---------------------------------------------------------------------------
namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline long long parse_int(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + v + "' is not an integer");
  }
  if (pos != v.size()) throw ConfigError(where + ": '" + v + "' is not an integer");
  return x;
}

inline double parse_double(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + v + "' is not a number");
  }
  if (pos != v.size()) throw ConfigError(where + ": '" + v + "' is not a number");
  return x;
}

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(where + ": '" + v + "' is not a boolean (true/false)");
}

template <class T, class F>
std::vector<T> parse_list(const std::string& v, const std::string& where, F one) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(where + ": empty element in list '" + v + "'");
    out.push_back(one(item, where));
  }
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

using Sections = std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>;

inline Sections parse_sections(const std::string& text) {
  Sections sections;
  std::string current;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      sections.emplace_back(current, std::vector<std::pair<std::string, std::string>>{});
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    if (current.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside any [section]");
    sections.back().second.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return sections;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  using namespace detail;
  ExperimentConfig cfg;
  const Sections sections = parse_sections(text);

  const std::set<std::string> known_sections = {"experiment", "problem", "overrides", "sweep"};
  bool have_algorithm = false;
  std::set<std::string> problem_keys;

  for (const auto& [sec, kvs] : sections) {
    if (!known_sections.count(sec)) throw ConfigError("unknown section [" + sec + "]");
    for (const auto& [key, val] : kvs) {
      const std::string where = "[" + sec + "] " + key;
      if (sec == "experiment") {
        if (key == "algorithm") { cfg.algorithm = parse_algorithm(val); have_algorithm = true; }
        else if (key == "seed") {
          const long long raw = parse_int(val, where);
          if (raw < 0) throw ConfigError(where + ": seed must be >= 0");
          cfg.seed = static_cast<std::uint64_t>(raw);
        }
        else if (key == "out") cfg.out_dir = val;
        else if (key == "assert_bounds") cfg.assert_bounds = parse_bool(val, where);
        else throw ConfigError("unknown key '" + key + "' in [experiment]");
      } else if (sec == "problem") {
        problem_keys.insert(key);
        if (key == "tasks") cfg.tasks = static_cast<int>(parse_int(val, where));
        else if (key == "lengths")
          cfg.lengths = parse_list<int>(val, where, [](const std::string& s, const std::string& w) {
            return static_cast<int>(parse_int(s, w));
          });
        else if (key == "switches") cfg.switches = static_cast<int>(parse_int(val, where));
        else if (key == "modes") cfg.modes = static_cast<int>(parse_int(val, where));
        else if (key == "experts") cfg.experts = static_cast<int>(parse_int(val, where));
        else if (key == "instances") cfg.instances = static_cast<int>(parse_int(val, where));
        else if (key == "noise") cfg.noise = parse_double(val, where);
        else if (key == "dim") cfg.dim = static_cast<int>(parse_int(val, where));
        else if (key == "trials") cfg.trials = static_cast<int>(parse_int(val, where));
        else if (key == "file") cfg.problem_file = val;
        else throw ConfigError("unknown key '" + key + "' in [problem]");
      } else if (sec == "overrides") {
        if (key == "eta") cfg.eta = parse_double(val, where);
        else if (key == "c_hat") cfg.c_hat = parse_double(val, where);
        else if (key == "gamma") cfg.gamma = parse_double(val, where);
        else if (key == "xk2_hat") cfg.xk2_hat = parse_double(val, where);
        else throw ConfigError("unknown key '" + key + "' in [overrides]");
      } else {  // sweep
        if (key == "switches")
          cfg.sweep_switches = parse_list<int>(val, where, [](const std::string& s, const std::string& w) {
            return static_cast<int>(parse_int(s, w));
          });
        else if (key == "modes")
          cfg.sweep_modes = parse_list<int>(val, where, [](const std::string& s, const std::string& w) {
            return static_cast<int>(parse_int(s, w));
          });
        else if (key == "seeds")
          cfg.sweep_seeds =
              parse_list<std::uint64_t>(val, where, [](const std::string& s, const std::string& w) {
                const long long x = parse_int(s, w);
                if (x < 0) throw ConfigError(w + ": seeds must be >= 0");
                return static_cast<std::uint64_t>(x);
              });
        else throw ConfigError("unknown key '" + key + "' in [sweep]");
      }
    }
  }
  if (!have_algorithm) throw ConfigError("missing required key [experiment] algorithm");

  // Keys the chosen algorithm never reads are configuration mistakes.
  const bool planted = cfg.algorithm == Algorithm::kExperts ||
                       cfg.algorithm == Algorithm::kSpecialistOracle || cfg.algorithm == Algorithm::kMW;
  std::set<std::string> allowed;
  if (planted) allowed = {"tasks", "lengths", "switches", "modes", "experts", "noise", "file"};
  else if (cfg.algorithm == Algorithm::kMatMW)
    allowed = {"tasks", "lengths", "switches", "modes", "instances", "file"};
  else allowed = {"dim", "trials", "switches", "file"};
  for (const auto& key : problem_keys)
    if (!allowed.count(key))
      throw ConfigError("key '" + key + "' in [problem] is not used by algorithm '" +
                        algorithm_name(cfg.algorithm) + "'");

  if (cfg.eta && !(*cfg.eta > 0.0)) throw ConfigError("[overrides] eta must be > 0");
  if (cfg.c_hat && !(*cfg.c_hat > 0.0)) throw ConfigError("[overrides] c_hat must be > 0");
  if (cfg.gamma && !(*cfg.gamma > 0.0)) throw ConfigError("[overrides] gamma must be > 0");
  if (cfg.xk2_hat && !(*cfg.xk2_hat > 0.0)) throw ConfigError("[overrides] xk2_hat must be > 0");
  if (cfg.c_hat && cfg.algorithm != Algorithm::kMatMW)
    throw ConfigError("[overrides] c_hat only applies to algorithm 'matmw'");
  if (cfg.xk2_hat && cfg.algorithm != Algorithm::kMatMW)
    throw ConfigError("[overrides] xk2_hat only applies to algorithm 'matmw'");
  if (cfg.gamma && cfg.algorithm != Algorithm::kMatMW && cfg.algorithm != Algorithm::kOGD)
    throw ConfigError("[overrides] gamma only applies to algorithms 'matmw' and 'ogd'");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  try {
    return parse_config_text(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Problem bundles and their on-disk format (versioned plain text).
// ---------------------------------------------------------------------------
enum class ProblemKind { kExpertLosses, kBiclustered, kLinearStream };

struct ProblemBundle {
  ProblemKind kind = ProblemKind::kExpertLosses;

  // expert-losses
  TaskSchedule schedule;
  ComparatorSequence comparator;
  Eigen::MatrixXd losses;  // T x n
  double noise = 0.0;

  // biclustered
  BiclusteredProblem bic;

  // linear-stream
  LinearStream stream;
};

inline void validate_planted_config(const ExperimentConfig& cfg) {
  if (cfg.tasks < 1) throw ConfigError("[problem] tasks must be >= 1");
  if (static_cast<int>(cfg.lengths.size()) != cfg.tasks)
    throw ConfigError("[problem] lengths must list exactly 'tasks' values");
  for (int len : cfg.lengths)
    if (len < 1) throw ConfigError("[problem] every task length must be >= 1");
}

inline ProblemBundle generate_problem(const ExperimentConfig& cfg) {
  ProblemBundle pb;
  switch (cfg.algorithm) {
    case Algorithm::kExperts:
    case Algorithm::kSpecialistOracle:
    case Algorithm::kMW: {
      validate_planted_config(cfg);
      if (cfg.experts < 1) throw ConfigError("[problem] experts must be >= 1");
      if (cfg.noise < 0.0 || cfg.noise >= 0.5)
        throw ConfigError("[problem] noise must lie in [0, 0.5)");
      pb.kind = ProblemKind::kExpertLosses;
      pb.noise = cfg.noise;
      try {
        pb.schedule = gen_schedule(cfg.lengths, cfg.seed * 7919 + 1);
        pb.comparator = gen_switching_comparator(cfg.lengths, cfg.switches, cfg.modes, cfg.seed * 7919 + 2);
        pb.losses =
            gen_adversarial_expert_losses(cfg.experts, pb.schedule, pb.comparator, cfg.noise, cfg.seed * 7919 + 3);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[problem] infeasible: ") + e.what());
      }
      return pb;
    }
    case Algorithm::kMatMW: {
      validate_planted_config(cfg);
      if (cfg.instances < 1) throw ConfigError("[problem] instances must be >= 1");
      pb.kind = ProblemKind::kBiclustered;
      try {
        pb.bic = gen_biclustered_labels(cfg.instances, cfg.modes, cfg.lengths, cfg.switches, cfg.seed);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[problem] infeasible: ") + e.what());
      }
      return pb;
    }
    case Algorithm::kOGD: {
      if (cfg.dim < 1) throw ConfigError("[problem] dim must be >= 1");
      if (cfg.trials < 1) throw ConfigError("[problem] trials must be >= 1");
      pb.kind = ProblemKind::kLinearStream;
      try {
        pb.stream = gen_linear_stream(cfg.dim, cfg.trials, cfg.switches, cfg.seed);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[problem] infeasible: ") + e.what());
      }
      return pb;
    }
  }
  throw ConfigError("unreachable algorithm");
}

inline std::string problem_to_text(const ProblemBundle& pb) {
  std::ostringstream out;
  out << "multiswitch-problem v1\n";
  if (pb.kind == ProblemKind::kExpertLosses) {
    out << "kind expert-losses\n";
    out << "tasks " << pb.schedule.task_count() << "\n";
    out << "lengths";
    for (int len : pb.schedule.lengths()) out << " " << len;
    out << "\nschedule";
    for (int t : pb.schedule.tasks()) out << " " << t;
    out << "\n";
    for (std::size_t i = 0; i < pb.comparator.per_task.size(); ++i) {
      out << "comparator " << (i + 1);
      for (int mode : pb.comparator.per_task[i]) out << " " << mode;
      out << "\n";
    }
    out << "experts " << pb.losses.cols() << "\n";
    out << "noise " << fmt_double(pb.noise) << "\n";
    out << "losses\n";
    for (int t = 0; t < pb.losses.rows(); ++t) {
      for (int i = 0; i < pb.losses.cols(); ++i) out << (i ? " " : "") << fmt_double(pb.losses(t, i));
      out << "\n";
    }
  } else if (pb.kind == ProblemKind::kBiclustered) {
    const auto& b = pb.bic;
    out << "kind biclustered\n";
    out << "tasks " << b.schedule.task_count() << "\n";
    out << "lengths";
    for (int len : b.schedule.lengths()) out << " " << len;
    out << "\nschedule";
    for (int t : b.schedule.tasks()) out << " " << t;
    out << "\n";
    for (std::size_t i = 0; i < b.comparator.per_task.size(); ++i) {
      out << "comparator " << (i + 1);
      for (int mode : b.comparator.per_task[i]) out << " " << mode;
      out << "\n";
    }
    out << "instances " << b.U_star.rows() << "\n";
    out << "modes " << b.U_star.cols() << "\n";
    out << "ustar\n";
    for (int i = 0; i < b.U_star.rows(); ++i) {
      for (int j = 0; j < b.U_star.cols(); ++j) out << (j ? " " : "") << b.U_star(i, j);
      out << "\n";
    }
    out << "keys";
    for (int kx : b.keys) out << " " << kx;
    out << "\nlabels";
    for (int y : b.labels) out << " " << y;
    out << "\n";
  } else {
    const auto& st = pb.stream;
    out << "kind linear-stream\n";
    out << "dim " << st.X.cols() << "\n";
    out << "trials " << st.X.rows() << "\n";
    out << "switches " << st.switches << "\n";
    out << "instances\n";
    for (int t = 0; t < st.X.rows(); ++t) {
      for (int i = 0; i < st.X.cols(); ++i) out << (i ? " " : "") << fmt_double(st.X(t, i));
      out << "\n";
    }
    out << "comparators\n";
    for (int t = 0; t < st.U.rows(); ++t) {
      for (int i = 0; i < st.U.cols(); ++i) out << (i ? " " : "") << fmt_double(st.U(t, i));
      out << "\n";
    }
    out << "labels";
    for (int y : st.y) out << " " << y;
    out << "\n";
  }
  return out.str();
}

namespace detail {

struct LineReader {
  std::istringstream in;
  std::string path;
  explicit LineReader(const std::string& text, std::string p) : in(text), path(std::move(p)) {}
  std::string next() {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": unexpected end of problem file");
    return line;
  }
  // "name v1 v2 ..." -> values; checks the leading token.
  std::vector<std::string> tokens(const std::string& expect) {
    std::istringstream ls(next());
    std::string head;
    ls >> head;
    if (head != expect) throw ConfigError(path + ": expected '" + expect + "' line, got '" + head + "'");
    std::vector<std::string> vals;
    std::string tok;
    while (ls >> tok) vals.push_back(tok);
    return vals;
  }
};

}  // namespace detail

inline ProblemBundle load_problem(const std::string& path) {
  using detail::LineReader;
  const std::string text = read_text_file(path);
  LineReader rd(text, path);
  if (rd.next() != "multiswitch-problem v1")
    throw ConfigError(path + ": not a multiswitch-problem v1 file");
  const auto kindv = rd.tokens("kind");
  if (kindv.size() != 1) throw ConfigError(path + ": malformed kind line");

  auto to_int = [&](const std::string& s) { return static_cast<int>(detail::parse_int(s, path)); };
  auto to_dbl = [&](const std::string& s) { return detail::parse_double(s, path); };

  ProblemBundle pb;
  if (kindv[0] == "expert-losses" || kindv[0] == "biclustered") {
    const auto tasksv = rd.tokens("tasks");
    if (tasksv.size() != 1) throw ConfigError(path + ": malformed tasks line");
    const int s = to_int(tasksv[0]);
    const auto lenv = rd.tokens("lengths");
    std::vector<int> lengths;
    for (const auto& v : lenv) lengths.push_back(to_int(v));
    if (static_cast<int>(lengths.size()) != s) throw ConfigError(path + ": lengths count mismatch");
    const auto schedv = rd.tokens("schedule");
    std::vector<int> tasks;
    for (const auto& v : schedv) tasks.push_back(to_int(v));
    TaskSchedule schedule(tasks, s);
    if (schedule.lengths() != lengths) throw ConfigError(path + ": schedule disagrees with lengths");
    ComparatorSequence comp;
    comp.per_task.resize(s);
    for (int i = 1; i <= s; ++i) {
      const auto cv = rd.tokens("comparator");
      if (cv.empty() || to_int(cv[0]) != i) throw ConfigError(path + ": comparator lines out of order");
      for (std::size_t j = 1; j < cv.size(); ++j) comp.per_task[i - 1].push_back(to_int(cv[j]));
      if (static_cast<int>(comp.per_task[i - 1].size()) != lengths[i - 1])
        throw ConfigError(path + ": comparator length mismatch for task " + std::to_string(i));
    }
    if (kindv[0] == "expert-losses") {
      pb.kind = ProblemKind::kExpertLosses;
      pb.schedule = schedule;
      pb.comparator = comp;
      const auto nv = rd.tokens("experts");
      if (nv.size() != 1) throw ConfigError(path + ": malformed experts line");
      const int n = to_int(nv[0]);
      const auto noisev = rd.tokens("noise");
      if (noisev.size() != 1) throw ConfigError(path + ": malformed noise line");
      pb.noise = to_dbl(noisev[0]);
      if (!rd.tokens("losses").empty()) throw ConfigError(path + ": malformed losses header");
      pb.losses.resize(schedule.T(), n);
      for (int t = 0; t < schedule.T(); ++t) {
        std::istringstream ls(rd.next());
        for (int i = 0; i < n; ++i) {
          std::string tok;
          if (!(ls >> tok)) throw ConfigError(path + ": truncated loss row");
          pb.losses(t, i) = to_dbl(tok);
        }
      }
    } else {
      pb.kind = ProblemKind::kBiclustered;
      pb.bic.schedule = schedule;
      pb.bic.comparator = comp;
      const auto pv = rd.tokens("instances");
      const auto mv = rd.tokens("modes");
      if (pv.size() != 1 || mv.size() != 1) throw ConfigError(path + ": malformed instances/modes");
      const int p = to_int(pv[0]), m = to_int(mv[0]);
      if (!rd.tokens("ustar").empty()) throw ConfigError(path + ": malformed ustar header");
      pb.bic.U_star.resize(p, m);
      for (int i = 0; i < p; ++i) {
        std::istringstream ls(rd.next());
        for (int j = 0; j < m; ++j) {
          std::string tok;
          if (!(ls >> tok)) throw ConfigError(path + ": truncated ustar row");
          pb.bic.U_star(i, j) = to_int(tok);
        }
      }
      const auto keysv = rd.tokens("keys");
      const auto labv = rd.tokens("labels");
      if (static_cast<int>(keysv.size()) != schedule.T() ||
          static_cast<int>(labv.size()) != schedule.T())
        throw ConfigError(path + ": keys/labels length mismatch");
      pb.bic.C.setZero(schedule.T(), m);
      for (int tau = 1; tau <= schedule.T(); ++tau) {
        pb.bic.keys.push_back(to_int(keysv[tau - 1]));
        pb.bic.labels.push_back(to_int(labv[tau - 1]));
        auto [task, local] = schedule.route(tau);
        pb.bic.C(tau - 1, comp.mode_at(task, local)) = 1;
      }
    }
    return pb;
  }
  if (kindv[0] == "linear-stream") {
    pb.kind = ProblemKind::kLinearStream;
    const auto dv = rd.tokens("dim");
    const auto tv = rd.tokens("trials");
    const auto kv = rd.tokens("switches");
    if (dv.size() != 1 || tv.size() != 1 || kv.size() != 1)
      throw ConfigError(path + ": malformed linear-stream header");
    const int dim = to_int(dv[0]), T = to_int(tv[0]);
    pb.stream.switches = to_int(kv[0]);
    if (!rd.tokens("instances").empty()) throw ConfigError(path + ": malformed instances header");
    pb.stream.X.resize(T, dim);
    for (int t = 0; t < T; ++t) {
      std::istringstream ls(rd.next());
      for (int i = 0; i < dim; ++i) {
        std::string tok;
        if (!(ls >> tok)) throw ConfigError(path + ": truncated instance row");
        pb.stream.X(t, i) = to_dbl(tok);
      }
      pb.stream.x_norm_bound = std::max(pb.stream.x_norm_bound, pb.stream.X.row(t).norm());
    }
    if (!rd.tokens("comparators").empty()) throw ConfigError(path + ": malformed comparators header");
    pb.stream.U.resize(T, dim);
    for (int t = 0; t < T; ++t) {
      std::istringstream ls(rd.next());
      for (int i = 0; i < dim; ++i) {
        std::string tok;
        if (!(ls >> tok)) throw ConfigError(path + ": truncated comparator row");
        pb.stream.U(t, i) = to_dbl(tok);
      }
    }
    const auto labv = rd.tokens("labels");
    if (static_cast<int>(labv.size()) != T) throw ConfigError(path + ": labels length mismatch");
    for (const auto& v : labv) pb.stream.y.push_back(to_int(v));
    return pb;
  }
  throw ConfigError(path + ": unknown problem kind '" + kindv[0] + "'");
}

// ---------------------------------------------------------------------------
// Single experiment run.
// ---------------------------------------------------------------------------
struct RunOutput {
  RegretLedger ledger;
  EvalReport report;
  std::vector<std::pair<std::string, std::string>> summary;  // ordered key/value
  int exit_code = kExitOk;
};

inline std::string ledger_to_csv(const RegretLedger& ledger) {
  std::ostringstream out;
  out << "trial,task,local_time,y,ybar_or_vdotl,expected_loss,comparator_loss,cum_regret\n";
  for (const auto& r : ledger.rows) {
    out << r.trial << ',' << r.task << ',' << r.local_time << ',' << r.y << ','
        << fmt_double(r.score) << ',' << fmt_double(r.expected_loss) << ','
        << fmt_double(r.comparator_loss) << ',' << fmt_double(r.cum_regret) << "\n";
  }
  return out.str();
}

inline std::string summary_to_text(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ostringstream out;
  out << "multiswitch-summary v1\n";
  for (const auto& [k, v] : kv) out << k << ' ' << v << "\n";
  return out.str();
}

inline RunOutput run_experiment(const ExperimentConfig& cfg) {
  ProblemBundle pb =
      cfg.problem_file.empty() ? generate_problem(cfg) : load_problem(cfg.problem_file);

  RunOutput out;
  auto& kv = out.summary;
  kv.emplace_back("algorithm", algorithm_name(cfg.algorithm));
  kv.emplace_back("seed", std::to_string(cfg.seed));

  switch (cfg.algorithm) {
    case Algorithm::kExperts:
    case Algorithm::kSpecialistOracle: {
      if (pb.kind != ProblemKind::kExpertLosses)
        throw ConfigError("algorithm '" + algorithm_name(cfg.algorithm) +
                          "' needs an expert-losses problem");
      const int n = static_cast<int>(pb.losses.cols());
      const int T = pb.schedule.T();
      const int s = pb.schedule.task_count();
      const auto [k, m] = count_switches_modes(pb.comparator);
      ExpertParams params = tune_params(n, s, T, k, std::max(m, 2));
      if (cfg.eta) params.eta = *cfg.eta;
      const double bound = std::sqrt(2.0 * params.C * T);

      RegretLedger ledger;
      long degeneracies = 0;
      if (cfg.algorithm == Algorithm::kExperts) {
        SwitchingExperts learner(params);
        for (int tau = 1; tau <= T; ++tau) {
          auto [task, local] = pb.schedule.route(tau);
          const Eigen::VectorXd l = pb.losses.row(tau - 1).transpose();
          const double el = learner.expected_loss(task, l);
          const double cl = l(pb.comparator.mode_at(task, local));
          ledger.add(tau, task, local, 0, el, el, cl);
          learner.update(task, l);
        }
        degeneracies = learner.degeneracy_count();
      } else {
        if (total_slots(pb.schedule) > 16)
          throw ConfigError("specialist-oracle needs at most 16 total trials");
        const auto trace = specialist_hedge_run(params, pb.schedule, pb.losses);
        for (int tau = 1; tau <= T; ++tau) {
          auto [task, local] = pb.schedule.route(tau);
          const double cl = pb.losses(tau - 1, pb.comparator.mode_at(task, local));
          ledger.add(tau, task, local, 0, trace[tau - 1], trace[tau - 1], cl);
        }
      }
      out.ledger = std::move(ledger);
      out.report = evaluate(out.ledger, bound);
      kv.emplace_back("trials", std::to_string(T));
      kv.emplace_back("tasks", std::to_string(s));
      kv.emplace_back("experts", std::to_string(n));
      kv.emplace_back("switches", std::to_string(k));
      kv.emplace_back("modes", std::to_string(m));
      kv.emplace_back("noise", fmt_double(pb.noise));
      kv.emplace_back("eta", fmt_double(params.eta));
      kv.emplace_back("theta", fmt_double(params.theta));
      kv.emplace_back("phi", fmt_double(params.phi));
      kv.emplace_back("rho_hat", fmt_double(params.rho_hat));
      kv.emplace_back("complexity", fmt_double(params.C));
      kv.emplace_back("degeneracies", std::to_string(degeneracies));
      break;
    }
    case Algorithm::kMW: {
      if (pb.kind != ProblemKind::kExpertLosses)
        throw ConfigError("algorithm 'mw' needs an expert-losses problem");
      const int n = static_cast<int>(pb.losses.cols());
      const int T = pb.schedule.T();
      const double eta = cfg.eta ? *cfg.eta : mw_tuned_eta(n, T);
      const double bound = mw_regret_bound(n, T);
      const auto trace = mw_run(pb.losses, eta);
      // Comparator: the single expert with the least total loss in hindsight.
      int best = 0;
      for (int i = 1; i < n; ++i)
        if (pb.losses.col(i).sum() < pb.losses.col(best).sum()) best = i;
      RegretLedger ledger;
      for (int tau = 1; tau <= T; ++tau) {
        auto [task, local] = pb.schedule.route(tau);
        ledger.add(tau, task, local, 0, trace[tau - 1], trace[tau - 1], pb.losses(tau - 1, best));
      }
      out.ledger = std::move(ledger);
      out.report = evaluate(out.ledger, bound);
      kv.emplace_back("trials", std::to_string(T));
      kv.emplace_back("experts", std::to_string(n));
      kv.emplace_back("eta", fmt_double(eta));
      kv.emplace_back("best_expert", std::to_string(best));
      break;
    }
    case Algorithm::kMatMW: {
      if (pb.kind != ProblemKind::kBiclustered)
        throw ConfigError("algorithm 'matmw' needs a biclustered problem");
      const auto& b = pb.bic;
      const int T = b.schedule.T();
      const int p = static_cast<int>(b.U_star.rows());
      const int m = static_cast<int>(b.U_star.cols());
      const auto [k, mm] = count_switches_modes(b.comparator);
      (void)mm;
      const double xk2 = cfg.xk2_hat ? *cfg.xk2_hat : 1.0;  // orthonormal-key kernel diagonal
      // Every mode labels all p keys, so its interpolation norm is p.
      const double c_hat = cfg.c_hat ? *cfg.c_hat
                                     : comparator_complexity(std::vector<double>(m, double(p)), xk2,
                                                             b.schedule.task_count(), k, m, T);
      MatMWConfig mc = matmw_tuned(T, m, c_hat, xk2);
      if (cfg.eta) mc.eta = *cfg.eta;
      if (cfg.gamma) mc.gamma = *cfg.gamma;
      const double bound = matmw_regret_bound(c_hat, T);

      MatrixMWLearner learner(mc, [](int a, int bkey) { return a == bkey ? 1.0 : 0.0; }, b.schedule);
      RegretLedger ledger;
      for (int tau = 1; tau <= T; ++tau) {
        auto [task, local] = b.schedule.route(tau);
        const int x = b.keys[tau - 1];
        const int y = b.labels[tau - 1];
        const double ybar = learner.predict(tau, x);
        ledger.add(tau, task, local, y, ybar, expected_zero_one(y, ybar, mc.gamma), 0.0);
        learner.update(tau, x, y, ybar);
      }
      out.ledger = std::move(ledger);
      out.report = evaluate(out.ledger, bound);
      out.report.mistakes = learner.update_count();
      kv.emplace_back("trials", std::to_string(T));
      kv.emplace_back("tasks", std::to_string(b.schedule.task_count()));
      kv.emplace_back("instances", std::to_string(p));
      kv.emplace_back("modes", std::to_string(m));
      kv.emplace_back("switches", std::to_string(k));
      kv.emplace_back("eta", fmt_double(mc.eta));
      kv.emplace_back("gamma", fmt_double(mc.gamma));
      kv.emplace_back("c_hat", fmt_double(c_hat));
      kv.emplace_back("xk2_hat", fmt_double(xk2));
      kv.emplace_back("margin_errors", std::to_string(learner.update_count()));
      break;
    }
    case Algorithm::kOGD: {
      if (pb.kind != ProblemKind::kLinearStream)
        throw ConfigError("algorithm 'ogd' needs a linear-stream problem");
      const auto& st = pb.stream;
      const int T = static_cast<int>(st.X.rows());
      const int k = st.switches;
      const double X = st.x_norm_bound;
      const OgdSwitchingTuning tune = ogd_switching_tuning(k, 1.0);  // comparators are unit norm
      const double gamma = cfg.gamma ? *cfg.gamma : tune.gamma;
      const double eta = cfg.eta ? *cfg.eta : ogd_tuned_eta(tune.U, X, T);
      const double hinge_bound = ogd_hinge_regret_bound(tune.U, X, T);
      const double bound = ogd_expected_01_bound(tune.U, X, T);

      OnlineGradientDescent learner(static_cast<int>(st.X.cols()), eta, gamma);
      RegretLedger ledger;
      double hinge_regret = 0.0;
      for (int t = 1; t <= T; ++t) {
        const Eigen::VectorXd x = st.X.row(t - 1).transpose();
        const int y = st.y[t - 1];
        const double ybar = learner.score(x);
        hinge_regret += hinge_loss(y, ybar);  // comparator hinge loss is zero (unit margins)
        ledger.add(t, 1, t, y, ybar, expected_zero_one(y, ybar, 1.0), 0.0);
        learner.update(x, y, ybar);
      }
      out.ledger = std::move(ledger);
      out.report = evaluate(out.ledger, bound);
      if (cfg.assert_bounds && hinge_regret > hinge_bound) out.report.bound_satisfied = false;
      kv.emplace_back("trials", std::to_string(T));
      kv.emplace_back("dim", std::to_string(st.X.cols()));
      kv.emplace_back("switches", std::to_string(k));
      kv.emplace_back("eta", fmt_double(eta));
      kv.emplace_back("gamma", fmt_double(gamma));
      kv.emplace_back("x_norm_bound", fmt_double(X));
      kv.emplace_back("hinge_regret", fmt_double(hinge_regret));
      kv.emplace_back("hinge_bound", fmt_double(hinge_bound));
      break;
    }
  }

  kv.emplace_back("final_regret", fmt_double(out.report.final_regret));
  kv.emplace_back("bound", fmt_double(out.report.bound));
  kv.emplace_back("bound_satisfied", out.report.bound_satisfied ? "true" : "false");
  kv.emplace_back("mistakes", std::to_string(out.report.mistakes));
  kv.emplace_back("total_expected_loss", fmt_double(out.report.total_expected_loss));
  kv.emplace_back("total_comparator_loss", fmt_double(out.report.total_comparator_loss));
  if (cfg.assert_bounds && !out.report.bound_satisfied) out.exit_code = kExitBound;
  return out;
}

// ---------------------------------------------------------------------------
// Subcommand drivers. Each returns a process exit code and writes its files
// under cfg.out_dir.
// ---------------------------------------------------------------------------
inline void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

inline int cmd_generate(const ExperimentConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  const ProblemBundle pb = generate_problem(cfg);
  write_text_file(cfg.out_dir + "/problem.txt", problem_to_text(pb));
  std::printf("wrote %s/problem.txt\n", cfg.out_dir.c_str());
  return kExitOk;
}

inline int cmd_run(const ExperimentConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  const RunOutput out = run_experiment(cfg);
  write_text_file(cfg.out_dir + "/trace.csv", ledger_to_csv(out.ledger));
  write_text_file(cfg.out_dir + "/summary.txt", summary_to_text(out.summary));
  for (const auto& [k, v] : out.summary) std::printf("%s %s\n", k.c_str(), v.c_str());
  if (out.exit_code == kExitBound)
    std::fprintf(stderr, "bound violated: regret %s > bound %s\n",
                 fmt_double(out.report.final_regret).c_str(), fmt_double(out.report.bound).c_str());
  return out.exit_code;
}

inline int cmd_sweep(const ExperimentConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  const std::vector<int> ks = cfg.sweep_switches.empty() ? std::vector<int>{cfg.switches} : cfg.sweep_switches;
  const std::vector<int> ms = cfg.sweep_modes.empty() ? std::vector<int>{cfg.modes} : cfg.sweep_modes;
  const std::vector<std::uint64_t> seeds =
      cfg.sweep_seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : cfg.sweep_seeds;

  struct Point {
    int k, m;
    std::uint64_t seed;
    RunOutput out;
    std::string error;
  };
  std::vector<Point> grid;
  for (int k : ks)
    for (int m : ms)
      for (std::uint64_t sd : seeds) grid.push_back({k, m, sd, {}, {}});

  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(grid.size())));
  std::vector<std::future<void>> futs;
  std::size_t next = 0;
  std::mutex mtx;
  for (unsigned w = 0; w < workers; ++w) {
    futs.push_back(std::async(std::launch::async, [&]() {
      for (;;) {
        std::size_t idx;
        {
          std::lock_guard<std::mutex> lock(mtx);
          if (next >= grid.size()) return;
          idx = next++;
        }
        Point& pt = grid[idx];
        ExperimentConfig pc = cfg;
        pc.switches = pt.k;
        pc.modes = pt.m;
        pc.seed = pt.seed;
        pc.problem_file.clear();  // sweeps always regenerate per point
        try {
          pt.out = run_experiment(pc);
        } catch (const std::exception& e) {
          pt.error = e.what();
        }
      }
    }));
  }
  for (auto& f : futs) f.get();

  std::ostringstream csv;
  csv << "switches,modes,seed,trials,final_regret,bound,bound_satisfied,mistakes\n";
  int violations = 0, failures = 0;
  for (const auto& pt : grid) {
    if (!pt.error.empty()) {
      ++failures;
      continue;
    }
    if (!pt.out.report.bound_satisfied) ++violations;
    csv << pt.k << ',' << pt.m << ',' << pt.seed << ',' << pt.out.report.trials << ','
        << fmt_double(pt.out.report.final_regret) << ',' << fmt_double(pt.out.report.bound) << ','
        << (pt.out.report.bound_satisfied ? "true" : "false") << ',' << pt.out.report.mistakes
        << "\n";
  }
  write_text_file(cfg.out_dir + "/sweep.csv", csv.str());

  for (const auto& pt : grid)
    if (!pt.error.empty())
      std::fprintf(stderr, "sweep point k=%d m=%d seed=%llu failed: %s\n", pt.k, pt.m,
                   static_cast<unsigned long long>(pt.seed), pt.error.c_str());
  std::printf("sweep points %zu\n", grid.size());
  std::printf("sweep violations %d\n", violations);
  std::printf("sweep failures %d\n", failures);
  if (failures > 0) return kExitConfig;
  if (cfg.assert_bounds && violations > 0) return kExitBound;
  return kExitOk;
}

// Re-read a finished run directory, restate its outcome, and re-assert that
// the trace's final cumulative regret matches the summary.
inline int cmd_report(const std::string& out_dir, bool assert_bounds) {
  const std::string sum_path = out_dir + "/summary.txt";
  const std::string text = read_text_file(sum_path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "multiswitch-summary v1")
    throw ConfigError(sum_path + ": not a multiswitch-summary v1 file");
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos) throw ConfigError(sum_path + ": malformed line '" + line + "'");
    kv[line.substr(0, sp)] = line.substr(sp + 1);
    std::printf("%s\n", line.c_str());
  }
  for (const char* need : {"final_regret", "bound", "bound_satisfied"})
    if (!kv.count(need)) throw ConfigError(sum_path + ": missing key '" + need + "'");

  // Cross-check against the trace, if present.
  const std::string trace_path = out_dir + "/trace.csv";
  if (std::filesystem::exists(trace_path)) {
    const std::string trace = read_text_file(trace_path);
    std::istringstream tin(trace);
    std::string row, last;
    std::getline(tin, row);  // header
    while (std::getline(tin, row))
      if (!row.empty()) last = row;
    if (!last.empty()) {
      const std::size_t comma = last.rfind(',');
      const double cum = detail::parse_double(last.substr(comma + 1), trace_path);
      const double fin = detail::parse_double(kv["final_regret"], sum_path);
      if (std::abs(cum - fin) > 1e-9 * std::max(1.0, std::abs(fin)))
        throw ConfigError(out_dir + ": trace.csv final regret disagrees with summary.txt");
      std::printf("trace_consistent true\n");
    }
  }
  if (assert_bounds && kv["bound_satisfied"] != "true") {
    std::fprintf(stderr, "bound violated per %s\n", sum_path.c_str());
    return kExitBound;
  }
  return kExitOk;
}

}  // namespace multiswitch

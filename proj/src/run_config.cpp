// Copyright 2026 The SBW Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "sbw/run_config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace sbw {

using nlohmann::json;

ConfigError::ConfigError(std::string pointer, int line, const std::string& message)
    : std::runtime_error(message), pointer_(std::move(pointer)), line_(line) {}

namespace {

std::string EscapePointerToken(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

std::map<std::string, int> ValueLines(std::string_view text) {
  struct Frame {
    bool is_object;
    std::string pointer;
    std::string key;
    std::size_t index = 0;
    bool expecting_key = true;
  };
  std::map<std::string, int> lines;
  std::vector<Frame> stack;
  int line = 1;
  bool value_pending = true;  // the root value
  std::string last_string;

  auto value_pointer = [&]() -> std::string {
    if (stack.empty()) return "";
    const Frame& f = stack.back();
    return f.pointer + "/" +
           (f.is_object ? EscapePointerToken(f.key) : std::to_string(f.index));
  };
  auto start_value = [&]() {
    if (value_pending) {
      lines.emplace(value_pointer(), line);
      value_pending = false;
    }
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '"') {
      const bool is_key = !stack.empty() && stack.back().is_object &&
                          stack.back().expecting_key;
      if (!is_key) start_value();
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) {
          s += text[++i];
        } else {
          if (text[i] == '\n') ++line;
          s += text[i];
        }
      }
      if (is_key) last_string = std::move(s);
      continue;
    }
    switch (c) {
      case '{':
      case '[': {
        start_value();
        const std::string ptr = value_pointer();
        stack.push_back(Frame{c == '{', ptr, {}, 0, true});
        value_pending = c == '[';
        break;
      }
      case '}':
      case ']':
        stack.pop_back();
        value_pending = false;
        break;
      case ':':
        stack.back().key = last_string;
        stack.back().expecting_key = false;
        value_pending = true;
        break;
      case ',':
        if (stack.back().is_object) {
          stack.back().expecting_key = true;
        } else {
          ++stack.back().index;
          value_pending = true;
        }
        break;
      default:
        start_value();  // number, true, false, null
        break;
    }
  }
  return lines;
}

namespace {

class Reader {
 public:
  explicit Reader(std::map<std::string, int> lines) : lines_(std::move(lines)) {}

  [[noreturn]] void Fail(const std::string& pointer, const std::string& message) const {
    std::string p = pointer;
    int line = 0;
    // Fall back to the closest enclosing value with a known line.
    while (true) {
      auto it = lines_.find(p);
      if (it != lines_.end()) {
        line = it->second;
        break;
      }
      const auto slash = p.rfind('/');
      if (slash == std::string::npos) break;
      p.resize(slash);
    }
    throw ConfigError(pointer.empty() ? "/" : pointer, line, message);
  }

  const json& Object(const json& j, const std::string& ptr,
                     std::initializer_list<std::string_view> allowed) const {
    if (!j.is_object()) Fail(ptr, "expected an object");
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (std::string_view a : allowed) known = known || a == key;
      if (!known) Fail(ptr + "/" + EscapePointerToken(key), "unknown key '" + key + "'");
    }
    return j;
  }

  double Number(const json& j, const std::string& ptr) const {
    if (!j.is_number()) Fail(ptr, "expected a number");
    return j.get<double>();
  }

  double Positive(const json& j, const std::string& ptr) const {
    const double v = Number(j, ptr);
    if (!(v > 0.0) || !std::isfinite(v)) Fail(ptr, "must be positive");
    return v;
  }

  double NonNegative(const json& j, const std::string& ptr) const {
    const double v = Number(j, ptr);
    if (!(v >= 0.0) || !std::isfinite(v)) Fail(ptr, "must be non-negative");
    return v;
  }

  std::int64_t Integer(const json& j, const std::string& ptr, std::int64_t lo,
                       std::int64_t hi) const {
    if (!j.is_number_integer()) Fail(ptr, "expected an integer");
    if (j.is_number_unsigned() &&
        j.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
      Fail(ptr, "out of range");
    }
    const auto v = j.get<std::int64_t>();
    if (v < lo || v > hi) {
      Fail(ptr, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
  }

  std::uint64_t Seed(const json& j, const std::string& ptr) const {
    if (!j.is_number_unsigned()) Fail(ptr, "seed must be an unsigned 64-bit integer");
    return j.get<std::uint64_t>();
  }

  std::string String(const json& j, const std::string& ptr) const {
    if (!j.is_string()) Fail(ptr, "expected a string");
    return j.get<std::string>();
  }

  double Capacity(const json& j, const std::string& ptr) const {
    if (j.is_string()) {
      if (j.get<std::string>() == "unlimited") return std::numeric_limits<double>::infinity();
      Fail(ptr, "capacity must be a number or \"unlimited\"");
    }
    return NonNegative(j, ptr);
  }

 private:
  std::map<std::string, int> lines_;
};

GameSetup ParseGame(const Reader& r, const json& j) {
  const std::string p = "/game";
  r.Object(j, p, {"num_nodes", "num_users", "block_reward", "capacities", "costs",
                  "cost_distribution", "initial_purchase"});
  GameSetup g;
  if (!j.contains("num_nodes")) r.Fail(p, "missing num_nodes");
  if (!j.contains("num_users")) r.Fail(p, "missing num_users");
  if (!j.contains("block_reward")) r.Fail(p, "missing block_reward");
  g.num_nodes = static_cast<int>(r.Integer(j["num_nodes"], p + "/num_nodes", 1, 100000));
  g.num_users = static_cast<int>(r.Integer(j["num_users"], p + "/num_users", 1, 100000));
  g.block_reward = r.Positive(j["block_reward"], p + "/block_reward");
  if (j.contains("initial_purchase")) {
    g.initial_purchase = r.NonNegative(j["initial_purchase"], p + "/initial_purchase");
  }
  if (!j.contains("capacities")) r.Fail(p, "missing capacities");
  const json& caps = j["capacities"];
  g.capacities.clear();
  if (caps.is_array()) {
    if (caps.size() != static_cast<std::size_t>(g.num_users)) {
      r.Fail(p + "/capacities", "expected " + std::to_string(g.num_users) + " entries");
    }
    for (std::size_t m = 0; m < caps.size(); ++m) {
      g.capacities.push_back(r.Capacity(caps[m], p + "/capacities/" + std::to_string(m)));
    }
  } else {
    g.capacities.push_back(r.Capacity(caps, p + "/capacities"));
  }

  const bool has_matrix = j.contains("costs");
  const bool has_law = j.contains("cost_distribution");
  if (has_matrix == has_law) {
    r.Fail(p, "provide exactly one of costs or cost_distribution");
  }
  if (has_matrix) {
    const json& rows = j["costs"];
    const std::string cp = p + "/costs";
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(g.num_nodes)) {
      r.Fail(cp, "expected " + std::to_string(g.num_nodes) + " rows");
    }
    Matrix<double> costs(g.num_nodes, g.num_users);
    for (int n = 0; n < g.num_nodes; ++n) {
      const std::string rp = cp + "/" + std::to_string(n);
      const json& row = rows[static_cast<std::size_t>(n)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(g.num_users)) {
        r.Fail(rp, "expected " + std::to_string(g.num_users) + " entries");
      }
      for (int m = 0; m < g.num_users; ++m) {
        costs(n, m) = r.Positive(row[static_cast<std::size_t>(m)], rp + "/" + std::to_string(m));
      }
    }
    g.costs = std::move(costs);
  } else {
    const std::string dp = p + "/cost_distribution";
    const json& d = r.Object(j["cost_distribution"], dp, {"law", "lo", "hi"});
    if (!d.contains("law") || r.String(d["law"], dp + "/law") != "uniform") {
      r.Fail(dp + "/law", "only the uniform law is supported");
    }
    if (!d.contains("lo") || !d.contains("hi")) r.Fail(dp, "uniform law needs lo and hi");
    g.cost_law.lo = r.Positive(d["lo"], dp + "/lo");
    g.cost_law.hi = r.Positive(d["hi"], dp + "/hi");
    if (g.cost_law.hi < g.cost_law.lo) r.Fail(dp + "/hi", "hi must be >= lo");
  }
  return g;
}

SolverSettings ParseSolver(const Reader& r, const json& j) {
  const std::string p = "/solver";
  r.Object(j, p, {"eps_strategy", "eps_dev", "max_iters"});
  SolverSettings s;
  if (j.contains("eps_strategy")) s.eps_strategy = r.Positive(j["eps_strategy"], p + "/eps_strategy");
  if (j.contains("eps_dev")) s.eps_dev_fraction = r.Positive(j["eps_dev"], p + "/eps_dev");
  if (j.contains("max_iters")) {
    s.max_iters = static_cast<int>(r.Integer(j["max_iters"], p + "/max_iters", 1, 100000000));
  }
  return s;
}

ChainSettings ParseChain(const Reader& r, const json& j) {
  const std::string p = "/chain";
  r.Object(j, p, {"initial_balance", "contracts_price_share", "epoch_window", "rounds"});
  ChainSettings c;
  if (j.contains("initial_balance")) {
    c.initial_balance = r.NonNegative(j["initial_balance"], p + "/initial_balance");
  }
  if (j.contains("contracts_price_share")) {
    c.contracts_price_share = r.Positive(j["contracts_price_share"], p + "/contracts_price_share");
    if (c.contracts_price_share > 1.0) {
      r.Fail(p + "/contracts_price_share", "must be in (0, 1]");
    }
  }
  if (j.contains("epoch_window")) {
    const std::string w = r.String(j["epoch_window"], p + "/epoch_window");
    if (w == "epoch") {
      c.window = chain::ContributionWindow::kEpoch;
    } else if (w == "cumulative") {
      c.window = chain::ContributionWindow::kCumulative;
    } else {
      r.Fail(p + "/epoch_window", "must be \"epoch\" or \"cumulative\"");
    }
  }
  if (j.contains("rounds")) {
    c.rounds = static_cast<std::uint64_t>(
        r.Integer(j["rounds"], p + "/rounds", 0, 100000000));
  }
  return c;
}

std::vector<double> Perturbations(const Reader& r, const json& j, const std::string& p) {
  if (!j.is_array() || j.empty()) r.Fail(p, "expected a non-empty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ep = p + "/" + std::to_string(i);
    const double v = r.Number(j[i], ep);
    if (!(v > -1.0) || !std::isfinite(v)) r.Fail(ep, "must be greater than -1");
    out.push_back(v);
  }
  return out;
}

ExperimentSettings ParseExperiment(const Reader& r, const json& j) {
  const std::string p = "/experiment";
  if (!j.is_object()) r.Fail(p, "expected an object");
  if (!j.contains("kind")) r.Fail(p, "missing kind");
  ExperimentSettings e;
  const std::string kind = r.String(j["kind"], p + "/kind");
  try {
    e.kind = ExperimentKindFromString(kind);
  } catch (const std::invalid_argument&) {
    r.Fail(p + "/kind", "unknown experiment kind '" + kind + "'");
  }
  e.sweep = DefaultSweep(e.kind);
  auto range = [&](double& lo, double& hi, double& step) {
    if (j.contains("r_min")) lo = r.Positive(j["r_min"], p + "/r_min");
    if (j.contains("r_max")) hi = r.Positive(j["r_max"], p + "/r_max");
    if (j.contains("r_step")) step = r.Positive(j["r_step"], p + "/r_step");
    if (hi < lo) r.Fail(p + "/r_max", "r_max must be >= r_min");
  };
  switch (e.kind) {
    case ExperimentKind::kSurface: {
      r.Object(j, p, {"kind", "node", "user_a", "user_b", "resolution"});
      auto& s = std::get<SurfaceSweep>(e.sweep);
      if (j.contains("node")) s.node = r.Integer(j["node"], p + "/node", 0, 100000);
      if (j.contains("user_a")) s.user_a = r.Integer(j["user_a"], p + "/user_a", 0, 100000);
      if (j.contains("user_b")) s.user_b = r.Integer(j["user_b"], p + "/user_b", 0, 100000);
      if (j.contains("resolution")) s.resolution = r.Positive(j["resolution"], p + "/resolution");
      break;
    }
    case ExperimentKind::kConvergence: {
      r.Object(j, p, {"kind", "node", "perturbations"});
      auto& s = std::get<ConvergenceSweep>(e.sweep);
      if (j.contains("node")) s.node = r.Integer(j["node"], p + "/node", 0, 100000);
      if (j.contains("perturbations")) {
        s.perturbations = Perturbations(r, j["perturbations"], p + "/perturbations");
      }
      break;
    }
    case ExperimentKind::kRewardSweep: {
      r.Object(j, p, {"kind", "r_min", "r_max", "r_step"});
      auto& s = std::get<RewardSweep>(e.sweep);
      range(s.r_min, s.r_max, s.r_step);
      break;
    }
    case ExperimentKind::kScaleGrid: {
      r.Object(j, p, {"kind", "r_min", "r_max", "r_step", "node_counts", "num_users"});
      auto& s = std::get<ScaleGridSweep>(e.sweep);
      range(s.r_min, s.r_max, s.r_step);
      if (j.contains("node_counts")) {
        const json& counts = j["node_counts"];
        if (!counts.is_array() || counts.empty()) {
          r.Fail(p + "/node_counts", "expected a non-empty array");
        }
        s.node_counts.clear();
        for (std::size_t i = 0; i < counts.size(); ++i) {
          s.node_counts.push_back(static_cast<int>(
              r.Integer(counts[i], p + "/node_counts/" + std::to_string(i), 1, 100000)));
        }
      }
      if (j.contains("num_users")) {
        s.num_users = static_cast<int>(r.Integer(j["num_users"], p + "/num_users", 1, 100000));
      }
      break;
    }
  }
  return e;
}

}  // namespace

ExperimentSpec RunConfig::experiment_spec(int threads) const {
  if (!experiment) throw std::invalid_argument("config has no experiment section");
  ExperimentSpec spec;
  spec.kind = experiment->kind;
  spec.sweep = experiment->sweep;
  spec.base = game;
  spec.seed = seed;
  spec.solver = solver_options();
  spec.eps_dev_fraction = solver.eps_dev_fraction;
  spec.threads = threads;
  return spec;
}

RunConfig ParseRunConfig(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1;
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i + 1 < end; ++i) line += text[i] == '\n';
    throw ConfigError("", line, "malformed JSON: " + std::string(e.what()));
  }
  const Reader r(ValueLines(text));
  r.Object(root, "", {"seed", "output_dir", "game", "solver", "chain", "experiment"});
  RunConfig config;
  if (root.contains("seed")) config.seed = r.Seed(root["seed"], "/seed");
  if (root.contains("output_dir")) config.output_dir = r.String(root["output_dir"], "/output_dir");
  if (!root.contains("game")) r.Fail("", "missing game section");
  config.game = ParseGame(r, root["game"]);
  if (root.contains("solver")) config.solver = ParseSolver(r, root["solver"]);
  if (root.contains("chain")) config.chain = ParseChain(r, root["chain"]);
  if (root.contains("experiment")) config.experiment = ParseExperiment(r, root["experiment"]);
  return config;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str());
}

}  // namespace sbw

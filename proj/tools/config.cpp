#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>

#include "cli.hpp"
#include "toml.hpp"
#include "wide/error.hpp"
#include "wide/io.hpp"
#include "wide/torus.hpp"

namespace wide::cli {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"run", {"experiment", "seed", "out", "threads"}},
      {"grid", {"d", "n"}},
      {"law", {"kind", "p", "mu0", "sigma_half", "alpha", "delta"}},
      {"initial", {"kind", "k", "amplitude", "kmax", "decay", "prepare"}},
      {"wide", {"eta", "c4", "t_max", "t_study", "tau0", "ratio", "tau_cap", "convection", "stabiliser", "c0"}},
      {"minimizer",
       {"method", "grad_tol", "max_iters", "memory", "armijo_c1", "backtrack", "max_backtracks", "precond_refresh"}},
      {"reference", {"dt", "t_end", "solver_tol", "max_inner", "stokes", "cfl", "save_every"}},
      {"sweep", {"etas"}},
      {"truncation",
       {"L", "p", "eta", "s_prime", "m_min", "m_max", "eps", "centred", "split_rule", "split_value", "source", "nt",
        "t_end", "amplitude", "spike", "path", "brute_force"}},
      {"check", {"fields", "kmax"}}};
  return s;
}

[[noreturn]] void invalid(const std::string& msg) { throw Error("ConfigInvalid", msg); }

nlohmann::json to_json(const toml::node& n, const std::string& where) {
  if (auto v = n.as_integer()) return v->get();
  if (auto v = n.as_floating_point()) return v->get();
  if (auto v = n.as_boolean()) return v->get();
  if (auto v = n.as_string()) return v->get();
  if (auto a = n.as_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : *a) {
      if (e.is_array() || e.is_table()) invalid(where + ": nested arrays are not supported");
      out.push_back(to_json(e, where));
    }
    return out;
  }
  invalid(where + ": unsupported value type");
}

template <class T>
T get(const nlohmann::json& sec, const char* key, T def, const std::string& name) {
  if (!sec.contains(key)) return def;
  try {
    return sec.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    invalid(name + "." + key + " has the wrong type");
  }
}

std::vector<double> etas_of(const nlohmann::json& sec) {
  std::vector<double> e;
  if (!sec.is_array()) invalid("sweep.etas must be an array");
  for (const auto& x : sec) {
    if (!x.is_number()) invalid("sweep.etas must hold numbers");
    e.push_back(x.get<double>());
  }
  return e;
}

Field taylor_green(const TorusGrid& g, double a) {
  Field u = Field::vector(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto i = g.multi_index(n);
    const double x = g.coord(i[0]), y = g.coord(i[1]), z = g.d == 3 ? g.coord(i[2]) : 0.0;
    u(n, 0) = a * std::sin(x) * std::cos(y) * std::cos(z);
    u(n, 1) = -a * std::cos(x) * std::sin(y) * std::cos(z);
  }
  return u;
}

// a sin(k.x) along a unit polarisation orthogonal to k.
Field single_mode(const TorusGrid& g, const std::vector<int>& k, double a) {
  std::array<double, 3> kk{static_cast<double>(k[0]), static_cast<double>(k[1]), g.d == 3 ? static_cast<double>(k[2]) : 0.0};
  std::array<double, 3> pol{};
  if (g.d == 2) {
    pol = {-kk[1], kk[0], 0.0};
  } else {
    const std::array<double, 3> e = std::abs(kk[0]) <= std::abs(kk[1]) && std::abs(kk[0]) <= std::abs(kk[2])
                                         ? std::array<double, 3>{1, 0, 0}
                                         : std::abs(kk[1]) <= std::abs(kk[2]) ? std::array<double, 3>{0, 1, 0}
                                                                              : std::array<double, 3>{0, 0, 1};
    pol = {kk[1] * e[2] - kk[2] * e[1], kk[2] * e[0] - kk[0] * e[2], kk[0] * e[1] - kk[1] * e[0]};
  }
  const double norm = std::sqrt(pol[0] * pol[0] + pol[1] * pol[1] + pol[2] * pol[2]);
  Field u = Field::vector(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto i = g.multi_index(n);
    double ph = 0.0;
    for (int c = 0; c < g.d; ++c) ph += kk[c] * g.coord(i[c]);
    for (int c = 0; c < g.d; ++c) u(n, c) = a * pol[c] / norm * std::sin(ph);
  }
  return u;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    invalid(std::string("TOML parse error: ") + std::string(e.description()) + " at line " +
            std::to_string(e.source().begin.line));
  }
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, node] : tbl) {
    const std::string sec(key.str());
    const auto it = schema().find(sec);
    if (it == schema().end()) invalid("unknown section [" + sec + "]");
    const auto* t = node.as_table();
    if (!t) invalid("'" + sec + "' must be a section");
    j[sec] = nlohmann::json::object();
    for (const auto& [k2, v] : *t) {
      const std::string name(k2.str());
      if (!it->second.count(name)) invalid("unknown key " + sec + "." + name);
      j[sec][name] = to_json(v, sec + "." + name);
    }
  }
  auto sec = [&](const char* s) { return j.contains(s) ? j[s] : nlohmann::json::object(); };

  RunConfig c;
  const auto run = sec("run");
  c.experiment = get<std::string>(run, "experiment", "", "run");
  c.seed = get<std::uint64_t>(run, "seed", 0, "run");
  c.out = get<std::string>(run, "out", c.out, "run");
  c.threads = get<int>(run, "threads", 0, "run");

  const auto grid = sec("grid");
  c.grid.d = get<int>(grid, "d", 2, "grid");
  c.grid.n = get<int>(grid, "n", 16, "grid");
  if (c.grid.d != 2 && c.grid.d != 3) invalid("grid.d must be 2 or 3");
  if (c.grid.n < 4 || c.grid.n % 2 != 0 || c.grid.n > 512) invalid("grid.n must be even and in [4, 512]");
  c.grid = TorusGrid(c.grid.d, c.grid.n);

  if (j.contains("law")) c.law = j["law"];
  if (!c.law.contains("kind")) invalid("law.kind is required");

  const auto ini = sec("initial");
  c.initial.kind = get<std::string>(ini, "kind", c.initial.kind, "initial");
  c.initial.k = get<std::vector<int>>(ini, "k", c.initial.k, "initial");
  c.initial.amplitude = get<double>(ini, "amplitude", c.initial.amplitude, "initial");
  c.initial.kmax = get<int>(ini, "kmax", c.initial.kmax, "initial");
  c.initial.decay = get<double>(ini, "decay", c.initial.decay, "initial");
  c.initial.prepare = get<bool>(ini, "prepare", c.initial.prepare, "initial");

  try {
    c.wide = WideConfig::from_json(sec("wide"));
    c.solver = SolverConfig::from_json(sec("minimizer"));
    c.reference = ReferenceConfig::from_json(sec("reference"));
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("wrong value type: ") + e.what());
  }
  c.solver.seed = c.seed;
  if (j.contains("sweep") && j["sweep"].contains("etas")) c.etas = etas_of(j["sweep"]["etas"]);

  const auto tr = sec("truncation");
  nlohmann::json tj = tr;
  if (!tj.contains("p")) tj["p"] = c.law.value("p", 2.0);
  if (tr.contains("split_rule") || tr.contains("split_value")) {
    tj["split_rule"] = {{"kind", get<std::string>(tr, "split_rule", "rms_multiple", "truncation")},
                        {"value", get<double>(tr, "split_value", 8.0, "truncation")}};
  }
  try {
    c.truncation = TruncationConfig::from_json(tj);
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("wrong value type in [truncation]: ") + e.what());
  }
  c.tin.source = get<std::string>(tr, "source", c.tin.source, "truncation");
  c.tin.nt = get<std::size_t>(tr, "nt", c.tin.nt, "truncation");
  c.tin.t_end = get<double>(tr, "t_end", c.tin.t_end, "truncation");
  c.tin.amplitude = get<double>(tr, "amplitude", c.tin.amplitude, "truncation");
  c.tin.spike = get<double>(tr, "spike", c.tin.spike, "truncation");
  c.tin.path = get<std::string>(tr, "path", c.tin.path, "truncation");
  c.tin.brute_force = get<bool>(tr, "brute_force", c.tin.brute_force, "truncation");

  const auto ch = sec("check");
  c.check.fields = get<int>(ch, "fields", c.check.fields, "check");
  c.check.kmax = get<int>(ch, "kmax", c.check.kmax, "check");

  c.canonical = {{"run", {{"experiment", c.experiment}, {"seed", c.seed}}},
                 {"grid", {{"d", c.grid.d}, {"n", c.grid.n}}},
                 {"law", c.law},
                 {"initial",
                  {{"kind", c.initial.kind}, {"k", c.initial.k}, {"amplitude", c.initial.amplitude},
                   {"kmax", c.initial.kmax}, {"decay", c.initial.decay}, {"prepare", c.initial.prepare}}},
                 {"wide", c.wide.to_json()},
                 {"minimizer", c.solver.to_json()},
                 {"reference", c.reference.to_json()},
                 {"sweep", {{"etas", c.etas}}},
                 {"truncation", c.truncation.to_json()},
                 {"truncation_input",
                  {{"source", c.tin.source}, {"nt", c.tin.nt}, {"t_end", c.tin.t_end},
                   {"amplitude", c.tin.amplitude}, {"spike", c.tin.spike}, {"path", c.tin.path},
                   {"brute_force", c.tin.brute_force}}},
                 {"check", {{"fields", c.check.fields}, {"kmax", c.check.kmax}}}};
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    invalid(e.what());
  }
  return parse_config(text);
}

ConstitutiveLaw make_law(const RunConfig& c) {
  try {
    return ConstitutiveLaw::from_json(c.law, c.grid.d);
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("law: ") + e.what());
  }
}

Field initial_field(const RunConfig& c) {
  const auto& s = c.initial;
  if (s.kind == "taylor_green") return taylor_green(c.grid, s.amplitude);
  if (s.kind == "random") {
    Field u = random_solenoidal(c.grid, s.kmax, c.seed + 1, s.decay);
    u *= s.amplitude / std::max(u.max_abs(), 1e-300);
    return u;
  }
  if (s.kind == "mode") return single_mode(c.grid, s.k, s.amplitude);
  if (s.kind == "zero") return Field::vector(c.grid);
  invalid("unknown initial.kind '" + s.kind + "'");
}

void validate(const RunConfig& c) {
  static const std::set<std::string> kinds = {"minimize", "reference", "sweep", "truncate", "check-invariants"};
  if (!kinds.count(c.experiment)) invalid("unknown experiment '" + c.experiment + "'");
  if (c.threads < 0) invalid("run.threads must be non-negative");
  const ConstitutiveLaw law = make_law(c);
  if (c.initial.kind == "mode") {
    if (c.initial.k.size() < static_cast<std::size_t>(c.grid.d)) invalid("initial.k needs d entries");
    int k2 = 0;
    for (int a = 0; a < c.grid.d; ++a) {
      k2 += c.initial.k[a] * c.initial.k[a];
      if (std::abs(c.initial.k[a]) >= c.grid.n / 2) invalid("initial.k is not resolved by the grid");
    }
    if (k2 == 0) invalid("initial.k must be nonzero");
  }
  if (c.initial.kind == "random" && (c.initial.kmax < 1 || c.initial.kmax >= c.grid.n / 2))
    invalid("initial.kmax must lie in [1, n/2)");
  (void)initial_field(c);
  const std::string& e = c.experiment;
  const bool truncate = e == "truncate", pipeline = truncate && c.tin.source == "pipeline";
  if (e == "minimize" || e == "sweep" || pipeline) {
    c.wide.validate();
    (void)c.wide.resolved_c4(c.grid);
    c.solver.validate();
  }
  if (e == "reference" || e == "sweep" || pipeline) c.reference.validate();
  if (e == "sweep") {
    if (c.etas.empty()) invalid("sweep.etas must not be empty");
    for (std::size_t i = 0; i < c.etas.size(); ++i) {
      if (!(c.etas[i] > 0.0)) invalid("sweep.etas must be positive");
      if (i > 0 && !(c.etas[i] < c.etas[i - 1])) invalid("sweep.etas must be strictly decreasing");
    }
  }
  if (truncate) {
    c.truncation.validate();
    static const std::set<std::string> sources = {"rough", "zero", "file", "pipeline"};
    if (!sources.count(c.tin.source)) invalid("unknown truncation.source '" + c.tin.source + "'");
    if (c.tin.nt < 3) invalid("truncation.nt must be at least 3");
    if (!(c.tin.t_end > 0.0)) invalid("truncation.t_end must be positive");
    if (c.tin.source == "file" && !std::filesystem::exists(c.tin.path))
      invalid("truncation.path '" + c.tin.path + "' does not exist");
  }
  if (e == "check-invariants" && (c.check.fields < 1 || c.check.kmax < 1 || c.check.kmax >= c.grid.n / 2))
    invalid("check.fields must be positive and check.kmax in [1, n/2)");
  (void)law;
}

}  // namespace wide::cli

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

#include <fftw3.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>

#include "CLI11.hpp"
#include "cli.hpp"
#include "toml.hpp"
#include "wide/constitutive.hpp"
#include "wide/error.hpp"
#include "wide/io.hpp"
#include "wide/parallel.hpp"
#include "wide/torus.hpp"

#ifndef WIDE_VERSION
#define WIDE_VERSION "0.0.0"
#endif

namespace wide::cli {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

namespace {

// Output directory that remembers what it wrote.
struct Out {
  fs::path dir;
  std::vector<std::string> files;

  void text(const std::string& rel, const std::string& s) {
    write_text((dir / rel).string(), s);
    files.push_back(rel);
  }
  void json(const std::string& rel, const nlohmann::json& j) { text(rel, j.dump(2) + "\n"); }
  void field(const std::string& rel, const Field& f, nlohmann::json meta) {
    write_field((dir / rel).string(), f);
    files.push_back(rel);
    text(rel + ".json", meta.dump(2) + "\n");
  }
  void spacetime(const std::string& rel, const SpaceTimeField& f) {
    write_spacetime((dir / rel).string(), f);
    files.push_back(rel);
    text(rel + ".json", spacetime_meta(f).dump(2) + "\n");
  }
  void mask(const std::string& rel, const SpaceTimeField& window, const std::vector<std::uint8_t>& m) {
    write_mask((dir / rel).string(), window.grid, m);
    files.push_back(rel);
    auto meta = spacetime_meta(window);
    meta["rank"] = 0;
    meta["ncomp"] = 1;
    meta["payload"] = "u8";
    text(rel + ".json", meta.dump(2) + "\n");
  }
};

struct Ctx {
  RunConfig cfg;
  std::string config_text;
  std::string config_path;
  int threads = 1;
  Out out;
};

nlohmann::json versions() {
  return {{"wide", WIDE_VERSION},
          {"compiler", __VERSION__},
          {"fftw", std::string(fftw_version)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"tomlplusplus", std::to_string(TOML_LIB_MAJOR) + "." + std::to_string(TOML_LIB_MINOR) + "." +
                               std::to_string(TOML_LIB_PATCH)},
          {"openssl", std::string(OpenSSL_version(OPENSSL_VERSION))}};
}

void write_manifest(Ctx& c, int status) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : c.out.files) {
    const std::string bytes = read_text((c.out.dir / f).string());
    files.push_back({{"path", f}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }
  nlohmann::json m = {{"experiment", c.cfg.experiment},
                      {"config_path", c.config_path},
                      {"config_sha256", sha256_hex(c.config_text)},
                      {"canonical_config_sha256", sha256_hex(c.cfg.canonical.dump())},
                      {"config", c.cfg.canonical},
                      {"seed", c.cfg.seed},
                      {"threads", c.threads},
                      {"exit_code", status},
                      {"versions", versions()},
                      {"files", files}};
  write_text((c.out.dir / "manifest.json").string(), m.dump(2) + "\n");
}

int report_error(const fs::path& dir, const std::string& kind, const std::string& what, int code) {
  const nlohmann::json j = {{"error", kind}, {"message", what}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
  if (!dir.empty()) {
    try {
      write_text((dir / "error.json").string(), j.dump(2) + "\n");
    } catch (...) {
    }
  }
  return code;
}

void dump_trajectory(Out& out, const std::string& sub, const Trajectory& tr) {
  nlohmann::json index = {{"scheme", tr.scheme}, {"nodes", tr.size()}, {"t", tr.t}};
  if (std::isfinite(tr.eta)) index["eta"] = tr.eta;
  for (std::size_t m = 0; m < tr.size(); ++m) {
    char name[32];
    std::snprintf(name, sizeof name, "u_%04zu.bin", m);
    auto meta = field_meta(tr.u[m]);
    meta["t"] = tr.t[m];
    meta["node"] = m;
    out.field(sub + "/" + name, tr.u[m], meta);
  }
  out.json(sub + "/index.json", index);
}

const char* kDiagnosticsPlot = R"PY(import csv
import sys
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "diagnostics.csv"
rows = list(csv.DictReader(open(path)))
t = [float(r["t"]) for r in rows]
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
ax[0].plot(t, [float(r["E"]) for r in rows], label="E")
ax[0].plot(t, [float(r["D"]) for r in rows], label="D")
ax[0].set_xlabel("t")
ax[0].legend()
ax[1].plot(t, [float(r["r_ineq"]) for r in rows], label="r_ineq")
ax[1].plot(t, [float(r["r_eq"]) for r in rows], label="r_eq")
ax[1].axhline(0.0, color="k", lw=0.5)
ax[1].set_xlabel("t")
ax[1].legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
)PY";

const char* kSweepPlot = R"PY(import csv
import sys
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
rows = [r for r in csv.DictReader(open(path)) if not r.get("error")]
eta = [float(r["eta"]) for r in rows]
fig, ax = plt.subplots(1, 3, figsize=(13, 4))
ax[0].loglog([1 / e for e in eta], [float(r["I"]) for r in rows], "o-")
ax[0].set_xlabel("1/eta")
ax[0].set_ylabel("I_eta(u_eta)")
ax[1].loglog(eta, [float(r["distance"]) for r in rows], "o-")
ax[1].set_xlabel("eta")
ax[1].set_ylabel("distance to reference")
ax[2].semilogx(eta, [float(r["max_abs_r_eq"]) for r in rows], "o-", label="|r_eq|")
ax[2].semilogx(eta, [float(r["min_r_ineq"]) for r in rows], "s-", label="min r_ineq")
ax[2].set_xlabel("eta")
ax[2].legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
)PY";

const char* kTruncationPlot = R"PY(import csv
import sys
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "constants.csv"
rows = list(csv.DictReader(open(path)))
fig, ax = plt.subplots(figsize=(8, 4))
ax.bar([r["name"] for r in rows], [float(r["value"]) for r in rows])
ax.set_yscale("log")
ax.tick_params(axis="x", rotation=60)
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
)PY";

Field starting_field(const RunConfig& c, const ConstitutiveLaw& law, double eta) {
  Field u0 = initial_field(c);
  if (c.initial.prepare) u0 = prepare_initial_data(u0, eta, law, c.wide.c0).u;
  return u0;
}

int cmd_minimize(Ctx& c) {
  const auto law = make_law(c.cfg);
  const Field u0 = starting_field(c.cfg, law, c.cfg.wide.eta);
  const auto res = minimize(c.cfg.wide, c.cfg.solver, u0, law);
  dump_trajectory(c.out, "trajectory", res.traj);
  const auto rep = energy_report(res.traj, law);
  c.out.text("diagnostics.csv", rep.to_csv());
  nlohmann::json j = {{"solver", res.to_json()}, {"diagnostics", rep.summary()}, {"law", law.to_json()},
                      {"wide", c.cfg.wide.to_json()}};
  c.out.json("diagnostics.json", j);
  c.out.text("plot_diagnostics.py", kDiagnosticsPlot);
  if (!res.converged) throw Error("SolverFailure", "minimiser stopped with flag " + res.flag);
  return 0;
}

int cmd_reference(Ctx& c) {
  const auto law = make_law(c.cfg);
  const Field u0 = starting_field(c.cfg, law, c.cfg.wide.eta);
  ReferenceStats stats;
  const auto tr = run_reference(c.cfg.reference, u0, law, &stats);
  dump_trajectory(c.out, "trajectory", tr);
  const auto rep = energy_report(tr, law);
  c.out.text("diagnostics.csv", rep.to_csv());
  const auto lh = leray_hopf_check(tr, law, u0);
  c.out.json("diagnostics.json", {{"diagnostics", rep.summary()},
                                  {"leray_hopf", lh.to_json()},
                                  {"stats", {{"steps", stats.steps}, {"max_inner", stats.max_inner}, {"max_cfl", stats.max_cfl}}},
                                  {"reference", c.cfg.reference.to_json()}});
  c.out.text("plot_diagnostics.py", kDiagnosticsPlot);
  if (!lh.energy_ok) throw Error("SolverFailure", "energy inequality violated by the reference run");
  return 0;
}

int cmd_sweep(Ctx& c) {
  const auto law = make_law(c.cfg);
  const Field u0 = initial_field(c.cfg);
  const auto ref = run_reference(c.cfg.reference, u0, law);
  dump_trajectory(c.out, "reference", ref);
  std::vector<Trajectory> mins;
  const auto rep = eta_sweep(c.cfg.etas, u0, law, ref, c.cfg.wide, c.cfg.solver, &mins);
  for (std::size_t i = 0; i < mins.size(); ++i) dump_trajectory(c.out, "minimiser_" + std::to_string(i), mins[i]);
  c.out.text("sweep.csv", rep.to_csv());
  c.out.json("sweep.json", rep.to_json());
  c.out.text("plot_sweep.py", kSweepPlot);
  for (const auto& r : rep.rows)
    if (!r.error.empty()) throw Error("SolverFailure", "sweep entry eta = " + std::to_string(r.eta) + ": " + r.error);
  return 0;
}

// curl* of a skew potential with two modulated random modes and a space-time bump.
SpaceTimeField rough_input(const RunConfig& c) {
  const auto& g = c.grid;
  const std::size_t nt = c.tin.nt;
  const double tau = c.tin.t_end / static_cast<double>(nt - 1);
  const Field s1 = random_skew(g, 3, c.seed + 11), s2 = random_skew(g, std::min(5, g.n / 2 - 1), c.seed + 12);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double t0 = (0.3 + 0.4 * u(rng)) * c.tin.t_end;
  std::array<double, 3> x0{};
  for (int a = 0; a < g.d; ++a) x0[a] = 2.0 * M_PI * u(rng);
  SpaceTimeField psi(g, g.d * g.d, nt, 0.0, tau);
  for (std::size_t k = 0; k < nt; ++k) {
    const double t = psi.time(k);
    Field f = s1;
    f *= c.tin.amplitude * std::cos(3.0 * t);
    f.axpy(c.tin.amplitude * std::sin(7.0 * t), s2);
    for (std::size_t n = 0; n < g.size(); ++n) {
      const auto i = g.multi_index(n);
      double r2 = 0.0;
      for (int a = 0; a < g.d; ++a) {
        double dx = g.coord(i[a]) - x0[a];
        dx -= 2.0 * M_PI * std::round(dx / (2.0 * M_PI));
        r2 += dx * dx;
      }
      const double b = c.tin.spike * std::exp(-r2 / 0.15 - (t - t0) * (t - t0) / (4.0 * tau * tau));
      f(n, 1) += b;
      f(n, g.d) -= b;
    }
    psi.set_slice(k, f);
  }
  return map_slices(psi, [](const Field& s) { return curl_star(s); });
}

SpaceTimeField truncation_input(Ctx& c) {
  const auto& t = c.cfg.tin;
  if (t.source == "zero")
    return SpaceTimeField(c.cfg.grid, c.cfg.grid.d, t.nt, 0.0, t.t_end / static_cast<double>(t.nt - 1));
  if (t.source == "rough") return rough_input(c.cfg);
  if (t.source == "file") return read_spacetime(t.path);
  // pipeline: minimiser and reference run from the same datum
  const auto law = make_law(c.cfg);
  WideConfig wc = c.cfg.wide;
  wc.eta = c.cfg.truncation.eta;
  wc.t_study = std::max(wc.t_study, t.t_end);
  const Field u0 = starting_field(c.cfg, law, wc.eta);
  const auto res = minimize(wc, c.cfg.solver, u0, law);
  ReferenceConfig rc = c.cfg.reference;
  rc.t_end = std::max(rc.t_end, t.t_end);
  const auto ref = run_reference(rc, u0, law);
  return prepare_w(res.traj, ref, wc.eta, {t.t_end, t.nt});
}

int cmd_truncate(Ctx& c, const SpaceTimeField& w) {
  const auto& cfg = c.cfg.truncation;
  const auto R = truncate_velocity(w, cfg);
  nlohmann::json rep = R.report.to_json();
  rep["input"] = c.cfg.canonical["truncation_input"];
  rep["window"] = spacetime_meta(w);
  bool oracle_ok = true;
  if (c.cfg.tin.brute_force) {
    double worst = 0.0;
    const SpaceTimeField* fs3[3] = {&R.data.v, &R.data.grad, &R.data.hess};
    for (const auto* f : fs3) {
      const auto mag = f->magnitude();
      for (Metric m : {Metric::Parabolic, Metric::Elliptic}) {
        const auto a = maximal_function(mag, m, cfg);
        const auto b = maximal_function_brute(mag, m, cfg.kappa(), cfg.eta, cfg.centred);
        const auto a2 = cfg.centred ? a : maximal_function_noncentred(mag, m, cfg.kappa(), cfg.eta);
        for (std::size_t i = 0; i < b.data.size(); ++i)
          worst = std::max(worst, std::abs(a2.data[i] - b.data[i]) / std::max(b.data[i], 1e-300));
      }
    }
    oracle_ok = worst <= 1e-12;
    rep["maximal_oracle"] = {{"fields", {"v", "grad v", "hess v"}}, {"max_rel_diff", worst}, {"tolerance", 1e-12},
                             {"pass", oracle_ok}};
  }
  c.out.json("truncation_report.json", rep);
  c.out.json("cover.json", R.cover.to_json());
  c.out.mask("masks/bad.bin", w, R.bad.mask);
  c.out.mask("masks/class1.bin", w, R.bad.class1);
  c.out.mask("masks/class2.bin", w, R.bad.class2);
  c.out.mask("masks/changed.bin", w, R.trunc.changed);
  c.out.spacetime("fields/w.bin", w);
  c.out.spacetime("fields/wL.bin", R.wL);
  std::ostringstream csv;
  csv << "name,value\n" << std::setprecision(17);
  const auto& b = R.trunc.bounds;
  const std::pair<const char*, double> rows[] = {
      {"C_w2inf", b.c_w2inf},     {"C_dt", b.c_dt},           {"C_dt_grad", b.c_dt_grad},
      {"C_dtt", b.c_dtt},         {"ladder_value", b.ladder_value}, {"ladder_grad", b.ladder_grad},
      {"T1", R.report.t1},        {"T2", R.report.t2},        {"T5", R.report.t5},
      {"bad_measure", b.bad_measure}, {"changed_measure", b.changed_measure}, {"rhs", b.rhs}};
  for (const auto& [n, v] : rows) csv << n << ',' << v << '\n';
  c.out.text("constants.csv", csv.str());
  c.out.text("plot_truncation.py", kTruncationPlot);
  if (!oracle_ok) throw Error("OracleMismatch", "maximal function differs from the brute-force evaluation");
  if (!R.trunc.bounds.good_identity) throw Error("TruncationDefect", "v^L differs from v on the good set");
  if (!R.cover.checks.pass()) throw Error("TruncationDefect", "cover checks failed");
  return 0;
}

int cmd_check(Ctx& c) {
  const auto& g = c.cfg.grid;
  const int F = c.cfg.check.fields, K = c.cfg.check.kmax;
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  auto add = [&](const std::string& name, double value, double tol, bool lower = false) {
    const bool ok = lower ? value >= -tol : value <= tol;
    all = all && ok;
    checks.push_back({{"name", name}, {"value", value}, {"tolerance", tol}, {"pass", ok}});
  };
  double rt = 0.0, dc = 0.0, lp = 0.0;
  for (int i = 0; i < F; ++i) {
    const std::uint64_t s = c.cfg.seed * 1000 + static_cast<std::uint64_t>(i);
    const Field w = random_solenoidal(g, K, s);
    Field back = curl_star(potential_T(w));
    back -= w;
    rt = std::max(rt, back.max_abs() / std::max(w.max_abs(), 1e-300));
    const Field v = random_skew(g, K, s + 7);
    dc = std::max(dc, divergence(curl_star(v)).max_abs() / std::max(v.max_abs(), 1e-300));
    const Field u = random_field(g, g.d, K, s + 13);
    lp = std::max(lp, divergence(leray_project(u)).max_abs() / std::max(u.max_abs(), 1e-300));
  }
  add("curl_star(T w) = w", rt, 1e-10);
  add("div curl_star = 0", dc, 1e-12);
  add("div leray_project = 0", lp, 1e-10);

  const auto law = make_law(c.cfg);
  std::mt19937_64 rng(c.cfg.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto sym_tf = [&] {
    Mat m{};
    const int d = g.d;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) m[i * d + j] = m[j * d + i] = nd(rng);
    double tr = 0.0;
    for (int i = 0; i < d; ++i) tr += m[i * d + i];
    for (int i = 0; i < d; ++i) m[i * d + i] -= tr / d;
    return m;
  };
  double mono = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Mat a = sym_tf(), b = sym_tf();
    const Mat da = dw_value(law, a), db = dw_value(law, b);
    double s = 0.0;
    for (int k = 0; k < g.d * g.d; ++k) s += (da[k] - db[k]) * (a[k] - b[k]);
    mono = std::min(mono, s);
  }
  add("monotone DW", mono, 1e-12, true);

  const TorusGrid g8(2, 8);
  SpaceTimeField f(g8, 1, 8, 0.0, 0.05);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (double& x : f.data) x = ud(rng);
  double mf = 0.0;
  for (Metric m : {Metric::Parabolic, Metric::Elliptic}) {
    const auto a = maximal_function(f, m, 1.0, 0.1), b = maximal_function_brute(f, m, 1.0, 0.1);
    for (std::size_t i = 0; i < a.data.size(); ++i) mf = std::max(mf, std::abs(a.data[i] - b.data[i]) / b.data[i]);
  }
  add("maximal function = brute force", mf, 1e-12);

  std::vector<std::uint8_t> mask(12 * 256, 0);
  for (int k = 3; k < 9; ++k)
    for (int i = 4; i < 10; ++i)
      for (int j = 2; j < 7; ++j) mask[k * 256 + TorusGrid(2, 16).node({i, j, 0})] = 1;
  const auto cover = whitney_cover(BadSet::from_mask(TorusGrid(2, 16), 12, 0.0, 0.05, mask), TruncationConfig{});
  add("cover checks (Q1-Q7, partition)", cover.checks.pass() ? 0.0 : 1.0, 0.0);
  add("partition defect", cover.checks.partition_defect, 1e-10);

  c.out.json("invariants.json", {{"checks", checks}, {"pass", all}});
  std::ostringstream csv;
  csv << "name,value,tolerance,pass\n" << std::setprecision(17);
  for (const auto& ch : checks)
    csv << '"' << ch["name"].get<std::string>() << "\"," << ch["value"].get<double>() << ','
        << ch["tolerance"].get<double>() << ',' << (ch["pass"].get<bool>() ? 1 : 0) << '\n';
  c.out.text("invariants.csv", csv.str());
  if (!all) throw Error("InvariantViolation", "at least one invariant check failed");
  return 0;
}

int resolve_threads(int flag, int from_config) {
  if (flag > 0) return flag;
  if (const char* e = std::getenv("WIDE_THREADS")) {
    const int v = std::atoi(e);
    if (v > 0) return v;
  }
  if (from_config > 0) return from_config;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Weighted inertia-dissipation-energy experiments on the torus"};
  app.require_subcommand(1);
  std::string config, out;
  std::int64_t seed = -1;
  int threads = 0;
  const std::pair<const char*, const char*> names[] = {
      {"minimize", "minimise the WIDE functional for one eta"},
      {"reference", "run the time-stepping reference solver"},
      {"sweep", "minimise over a decreasing list of eta against one reference run"},
      {"truncate", "solenoidal Lipschitz truncation of a space-time field"},
      {"check-invariants", "operator identities on random fields"}};
  for (const auto& [n, help] : names) {
    auto* sub = app.add_subcommand(n, help);
    sub->add_option("--config", config, "run configuration (TOML)")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "seed override");
    sub->add_option("--threads", threads, "worker threads (fallback: WIDE_THREADS)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  Ctx c;
  c.config_path = config;
  SpaceTimeField tin;
  try {
    c.config_text = read_text(config);
    c.cfg = parse_config(c.config_text);
    if (!c.cfg.experiment.empty() && c.cfg.experiment != cmd)
      throw Error("ConfigInvalid", "config is for '" + c.cfg.experiment + "', not '" + cmd + "'");
    c.cfg.experiment = cmd;
    c.cfg.canonical["run"]["experiment"] = cmd;
    if (seed >= 0) {
      c.cfg.seed = static_cast<std::uint64_t>(seed);
      c.cfg.solver.seed = c.cfg.seed;
      c.cfg.canonical["run"]["seed"] = c.cfg.seed;
      c.cfg.canonical["minimizer"]["seed"] = c.cfg.seed;
    }
    if (!out.empty()) c.cfg.out = out;
    validate(c.cfg);
    if (cmd == "truncate" && c.cfg.tin.source == "file") {
      tin = read_spacetime(c.cfg.tin.path);
      if (tin.rank() != 1) throw Error("ConfigInvalid", "truncation input must be a vector field");
    }
  } catch (const Error& e) {
    return report_error(out.empty() ? fs::path() : fs::path(out), e.kind() == "IOError" ? "ConfigInvalid" : e.kind(),
                        e.what(), 2);
  } catch (const std::exception& e) {
    return report_error(out.empty() ? fs::path() : fs::path(out), "ConfigInvalid", e.what(), 2);
  }

  c.out.dir = c.cfg.out;
  c.threads = resolve_threads(threads, c.cfg.threads);
  set_threads(c.threads);
  int status = 0;
  try {
    fs::create_directories(c.out.dir);
    fs::remove(c.out.dir / "error.json");
    if (cmd == "minimize") status = cmd_minimize(c);
    else if (cmd == "reference") status = cmd_reference(c);
    else if (cmd == "sweep") status = cmd_sweep(c);
    else if (cmd == "truncate") {
      if (c.cfg.tin.source != "file") tin = truncation_input(c);
      status = cmd_truncate(c, tin);
    } else status = cmd_check(c);
  } catch (const Error& e) {
    status = report_error(c.out.dir, e.kind(), e.what(), 3);
  } catch (const std::exception& e) {
    status = report_error(c.out.dir, "ComputeFailure", e.what(), 3);
  }
  try {
    write_manifest(c, status);
  } catch (const std::exception& e) {
    std::cerr << "manifest: " << e.what() << "\n";
    if (status == 0) status = 3;
  }
  return status;
}

}  // namespace wide::cli

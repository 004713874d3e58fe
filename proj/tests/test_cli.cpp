/// @file test_cli.cpp
/// @brief Subcommands, exit codes, manifests and the binary field format.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "wide/error.hpp"
#include "wide/io.hpp"
#include "wide/torus.hpp"

using namespace wide;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = WIDE_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wide_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "wide");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

int run_config(const std::string& cmd, const std::string& cfg, const fs::path& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> a = {cmd, "--config", kConfigs + "/" + cfg, "--out", out.string(), "--threads", "1"};
  a.insert(a.end(), extra.begin(), extra.end());
  return run_cli(a);
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(read_text(p.string())); }

std::size_t lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("wide_cli_cfg_" + name + ".toml");
  write_text(p.string(), text);
  return p;
}

}  // namespace

TEST_CASE("sha256 of known vectors") {
  CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("field files round trip and carry the documented header") {
  const auto dir = scratch("io");
  const TorusGrid g(2, 8);
  const Field u = random_solenoidal(g, 3, 5);
  write_field((dir / "u.bin").string(), u);
  const std::string bytes = read_text((dir / "u.bin").string());
  REQUIRE(bytes.size() == 14 + 64 * 2 * 8);
  CHECK(bytes.substr(0, 4) == "WIDE");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 2);
  CHECK(bytes[9] == 1);
  CHECK(static_cast<unsigned char>(bytes[10]) == 8);
  const Field back = read_field((dir / "u.bin").string());
  CHECK(back.grid() == g);
  CHECK(back.values() == u.values());

  SpaceTimeField st(TorusGrid(3, 8), 9, 3, -0.5, 0.25);
  for (std::size_t i = 0; i < st.data.size(); ++i) st.data[i] = 0.001 * static_cast<double>(i) - 1.0;
  write_spacetime((dir / "st.bin").string(), st);
  write_sidecar((dir / "st.bin").string(), spacetime_meta(st));
  const auto st2 = read_spacetime((dir / "st.bin").string());
  CHECK(st2.nt == 3);
  CHECK(st2.ncomp == 9);
  CHECK(st2.t0 == -0.5);
  CHECK(st2.tau == 0.25);
  CHECK(st2.data == st.data);
  CHECK(read_header((dir / "st.bin").string()).rank == 2);

  std::vector<std::uint8_t> m(2 * 64, 0);
  m[3] = m[100] = 1;
  write_mask((dir / "m.bin").string(), g, m);
  const auto h = read_header((dir / "m.bin").string());
  CHECK(h.u8);
  CHECK(h.slices == 2);
  TorusGrid gm;
  CHECK(read_mask((dir / "m.bin").string(), &gm) == m);
  CHECK(gm == g);
  CHECK_THROWS_AS(read_field((dir / "m.bin").string()), Error);
  write_text((dir / "junk.bin").string(), "WIDX0000000000000000");
  CHECK_THROWS_AS(read_field((dir / "junk.bin").string()), Error);
  std::string cut = bytes.substr(0, bytes.size() - 3);
  write_text((dir / "cut.bin").string(), cut);
  CHECK_THROWS_AS(read_field((dir / "cut.bin").string()), Error);
}

TEST_CASE("minimize smoke run, artifacts and determinism") {
  const auto a = scratch("min_a"), b = scratch("min_b");
  REQUIRE(run_config("minimize", "stokes_mode.toml", a) == 0);
  const auto idx = load(a / "trajectory" / "index.json");
  const std::size_t nodes = idx["nodes"].get<std::size_t>();
  const std::string csv = read_text((a / "diagnostics.csv").string());
  CHECK(lines(csv) == nodes + 1);
  CHECK(fs::exists(a / "plot_diagnostics.py"));
  CHECK(fs::exists(a / "trajectory" / "u_0000.bin"));
  CHECK(load(a / "diagnostics.json")["solver"]["converged"].get<bool>());

  const auto man = load(a / "manifest.json");
  CHECK(man["exit_code"] == 0);
  CHECK(man["seed"] == 1);
  for (const auto& f : man["files"]) CHECK(f["sha256"] == cli::sha256_hex(read_text((a / f["path"].get<std::string>()).string())));

  REQUIRE(run_config("minimize", "stokes_mode.toml", b) == 0);
  CHECK(read_text((b / "diagnostics.csv").string()) == csv);
  const auto man2 = load(b / "manifest.json");
  CHECK(man2["files"] == man["files"]);
  CHECK(man2["canonical_config_sha256"] == man["canonical_config_sha256"]);
}

TEST_CASE("configuration errors exit with status 2") {
  SUBCASE("p below the 2d/(d+2) bound") {
    const auto out = scratch("bad_p");
    CHECK(run_config("minimize", "bad_exponent.toml", out) == 2);
    const auto err = load(out / "error.json");
    CHECK(err["exit_code"] == 2);
    CHECK(err["message"].get<std::string>().find("2d/(d+2)") != std::string::npos);
  }
  SUBCASE("invalid level range") {
    CHECK(run_config("truncate", "truncate_bad_levels.toml", scratch("levels")) == 2);
  }
  SUBCASE("unknown key") {
    const auto p = write_config("unknown", "[grid]\nd = 2\nn = 8\nwidth = 3\n");
    const auto out = scratch("unknown");
    CHECK(run_cli({"minimize", "--config", p.string(), "--out", out.string()}) == 2);
    CHECK(load(out / "error.json")["message"].get<std::string>().find("grid.width") != std::string::npos);
  }
  SUBCASE("unknown section, bad syntax, wrong type, mismatched experiment") {
    for (const char* text : {"[solver]\nx = 1\n", "[grid\nd = 2\n", "[grid]\nn = \"eight\"\n",
                             "[run]\nexperiment = \"reference\"\n", "[sweep]\netas = [0.1, -0.2]\n"}) {
      CAPTURE(text);
      const auto p = write_config("misc", text);
      CHECK(run_cli({"sweep", "--config", p.string(), "--out", scratch("misc").string()}) == 2);
    }
  }
  SUBCASE("missing file and missing subcommand") {
    CHECK(run_cli({"minimize", "--config", "/nonexistent/x.toml"}) == 2);
    CHECK(run_cli({}) == 2);
  }
}

TEST_CASE("compute failures exit with status 3 and keep partial artifacts") {
  const auto p = write_config("fail", R"(
[run]
experiment = "minimize"
[grid]
d = 2
n = 8
[initial]
kind = "taylor_green"
[law]
kind = "power_law"
p = 2.5
[minimizer]
grad_tol = 1e-14
max_iters = 2
)");
  const auto out = scratch("fail");
  CHECK(run_cli({"minimize", "--config", p.string(), "--out", out.string()}) == 3);
  CHECK(load(out / "error.json")["error"] == "SolverFailure");
  CHECK(fs::exists(out / "diagnostics.csv"));
  CHECK(load(out / "manifest.json")["exit_code"] == 3);
}

TEST_CASE("truncate: identity on zero input, embedded oracle, rough input") {
  SUBCASE("zero") {
    const auto out = scratch("tz");
    REQUIRE(run_config("truncate", "truncate_zero.toml", out) == 0);
    const auto r = load(out / "truncation_report.json");
    CHECK(r["identity"].get<bool>());
    CHECK(r["bad_set"]["count"] == 0);
  }
  SUBCASE("brute-force window") {
    const auto out = scratch("tb");
    REQUIRE(run_config("truncate", "truncate_brute.toml", out) == 0);
    const auto r = load(out / "truncation_report.json");
    CHECK(r["maximal_oracle"]["pass"].get<bool>());
    CHECK(r["bad_set"]["count"].get<int>() > 0);
  }
  SUBCASE("rough input writes masks, fields and the cover") {
    const auto out = scratch("tr");
    REQUIRE(run_config("truncate", "truncate_rough.toml", out) == 0);
    const auto r = load(out / "truncation_report.json");
    CHECK(r["max_div"].get<double>() <= 1e-10);
    CHECK(r["bounds"]["good_identity"].get<bool>());
    TorusGrid g;
    const auto bad = read_mask((out / "masks" / "bad.bin").string(), &g);
    const auto changed = read_mask((out / "masks" / "changed.bin").string());
    REQUIRE(bad.size() == changed.size());
    for (std::size_t i = 0; i < bad.size(); ++i)
      if (changed[i]) CHECK(bad[i] == 1);
    const auto wL = read_spacetime((out / "fields" / "wL.bin").string());
    CHECK(wL.nt == 24);
    CHECK(wL.rank() == 1);
    const auto cover = load(out / "cover.json");
    CHECK(cover["cubes"].size() == r["cover"]["cubes"].get<std::size_t>());
    // feeding the stored field back in reproduces the report
    const auto p = write_config("file", "[run]\nexperiment = \"truncate\"\n[grid]\nd = 2\nn = 16\n[truncation]\nL = 2.0\n"
                                        "eta = 0.05\nsource = \"file\"\npath = \"" +
                                            (out / "fields" / "w.bin").string() + "\"\n");
    const auto out2 = scratch("tf");
    REQUIRE(run_cli({"truncate", "--config", p.string(), "--out", out2.string()}) == 0);
    CHECK(load(out2 / "truncation_report.json")["bounds"] == r["bounds"]);
  }
}

TEST_CASE("check-invariants and sweep") {
  const auto out = scratch("check");
  REQUIRE(run_config("check-invariants", "check.toml", out) == 0);
  const auto inv = load(out / "invariants.json");
  CHECK(inv["pass"].get<bool>());
  CHECK(inv["checks"].size() >= 6);

  const auto sw = scratch("sweep");
  REQUIRE(run_config("sweep", "sweep_stokes.toml", sw) == 0);
  const auto s = load(sw / "sweep.json");
  CHECK(s["rows"].size() == 2);
  CHECK(std::isfinite(s["slope"].get<double>()));
  CHECK(fs::exists(sw / "sweep.csv"));
  CHECK(fs::exists(sw / "minimiser_1" / "index.json"));
}

TEST_CASE("seed and thread overrides are recorded") {
  const auto out = scratch("seed");
  setenv("WIDE_THREADS", "2", 1);
  REQUIRE(run_cli({"check-invariants", "--config", kConfigs + "/check.toml", "--out", out.string(), "--seed", "11"}) == 0);
  unsetenv("WIDE_THREADS");
  const auto m = load(out / "manifest.json");
  CHECK(m["seed"] == 11);
  CHECK(m["threads"] == 2);
  CHECK(m["config"]["minimizer"]["seed"] == 11);
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wide/field.hpp"
#include "wide/minimizer.hpp"
#include "wide/reference.hpp"
#include "wide/truncation.hpp"
#include "wide/wide.hpp"

namespace wide::cli {

struct InitialSpec {
  std::string kind = "mode";  // mode, taylor_green, random
  std::vector<int> k{1, 0, 0};
  double amplitude = 1.0;
  int kmax = 3;
  double decay = 0.0;
  bool prepare = false;  // apply prepare_initial_data at the run's eta
};

// Source of the velocity difference fed to the truncation.
struct TruncationInput {
  std::string source = "rough";  // rough, zero, file, pipeline
  std::size_t nt = 33;
  double t_end = 1.0;
  double amplitude = 2.0;
  double spike = 5.0;
  std::string path;
  bool brute_force = false;  // embed the maximal-function oracle comparison
};

struct CheckSpec {
  int fields = 20;
  int kmax = 4;
};

/// Parsed and validated run configuration.
struct RunConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string out = "out";
  int threads = 0;
  TorusGrid grid{2, 16};
  nlohmann::json law = {{"kind", "newtonian"}, {"mu0", 0.5}};
  InitialSpec initial;
  WideConfig wide;
  SolverConfig solver;
  ReferenceConfig reference;
  std::vector<double> etas{0.2, 0.1};
  TruncationConfig truncation;
  TruncationInput tin;
  CheckSpec check;
  nlohmann::json canonical;  // every section after defaults, stable key order
};

// Strict TOML subset: sections and keys outside the schema are rejected.
// Throws Error("ConfigInvalid", ...) or the validation error of a module.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Builds every object the run needs so that invalid input fails before compute.
void validate(const RunConfig& c);

Field initial_field(const RunConfig& c);
ConstitutiveLaw make_law(const RunConfig& c);

std::string sha256_hex(const std::string& bytes);

int run(int argc, char** argv);

}  // namespace wide::cli

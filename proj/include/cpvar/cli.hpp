// Command-line front end: estimate, pvar, simulate and study verbs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cpvar/process.hpp"
#include "cpvar/stepfn.hpp"
#include "cpvar/truth.hpp"

namespace cpvar::cli {

// Parsed study/simulation config. Absent keys keep these defaults.
struct Config {
  TruthSpec truth{1.0, 0.0, 0.0, 5.0, std::nullopt, std::nullopt};
  std::size_t n = 200;
  std::vector<std::size_t> n_list{25, 50, 100, 200, 400, 800, 1600, 3200};
  std::optional<std::size_t> replications;  // "B"; study-specific default
  double p = 1.5;
  double t = 2.0;
  DesignKind design = DesignKind::observed;
  std::uint64_t seed = 1;
  std::size_t n_max = 10000;
  std::size_t window_start = 100;
};

// Flat JSON object with keys lambda, censor_rate, terminal_rate, tau, n,
// n_list, B, p, t, design, seed, z_prob, z_multiplier, cap, n_max,
// window_start. Unknown keys are rejected.
Config parse_config(std::string_view json_text);
Config load_config(const std::filesystem::path& path);

// Step-function CSV with header `time,value`.
StepFunction read_step(std::istream& in);
void write_step(const StepFunction& f, std::ostream& out);

// Runs one command; returns the process exit status. Errors are reported
// on `err` as a single line `ERROR <code>: <message>`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cpvar::cli

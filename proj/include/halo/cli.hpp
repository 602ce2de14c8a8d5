#pragma once

// Command-line entry point composing the pipeline stages:
//   filter, translate, detect, mitigate, build-prefs, analyze, cpo-check,
//   cpo-loss, simulate
// Exit codes: 0 success, 2 config error, 3 backend error, 4 data error,
// 5 verification failure, 1 internal error.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "halo/config.hpp"
#include "halo/core.hpp"

namespace halo::cli {

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Deterministic sentences of 8 to 20 distinct pseudo-words each.
std::vector<Sentence> synthetic_corpus(std::uint64_t seed, std::size_t n, const std::string& lang);

struct SimulationOptions {
  std::size_t n = 10000;
  std::filesystem::path out_dir;
  bool over_http = false;  // serve the mocks on a loopback port and use the HTTP clients
};

// Runs translate -> detect -> mitigate -> build-prefs against the mock
// backends and writes sentences, translations, D_h, mitigated, preference and
// report files plus a manifest into out_dir. Returns the report.
nlohmann::json simulate(const config::PipelineConfig& cfg, const SimulationOptions& opts);

}  // namespace halo::cli

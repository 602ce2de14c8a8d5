#pragma once

// Verification battery for the CPO kernels: algebraic identities over random
// draws, known values, monotonicity and finite-difference gradient checks.

#include <cstdint>
#include <string>
#include <vector>

#include "halo/cpo.hpp"
#include "json.hpp"

namespace halo::cpo {

struct CheckRow {
  std::string name;
  double measured = 0.0;   // error or value being bounded
  double tolerance = 0.0;  // pass when measured <= tolerance
  bool passed = false;
  std::string detail;
};

struct CheckOptions {
  std::uint64_t seed = 0;
  int draws = 10000;
  double fd_step = 1e-5;
  double grad_tolerance = 1e-4;
  double beta = kDefaultBeta;
};

std::vector<CheckRow> run_check_battery(const CheckOptions& opts = {});

bool all_passed(const std::vector<CheckRow>& rows);
nlohmann::json to_json(const std::vector<CheckRow>& rows);
// Fixed-width text table, one row per check.
std::string format_table(const std::vector<CheckRow>& rows);

}  // namespace halo::cpo

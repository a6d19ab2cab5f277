#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfl/nugget.hpp"
#include "cfl/protocol.hpp"

namespace cfl {

struct MainAttackConfig {
  std::int64_t trials = 10000;
  std::int64_t nugget_budget = 10000;
  std::int64_t table_budget = 100000;
  double epsilon = 0;
  int h_cap = 8;  // monitored parties entering the sweep
  std::int64_t pilot_trials = 2000;
  std::uint64_t seed = 1;
  bool run_coupling = true;
  std::string force_route;             // "", "mart", "dp" or "sing"
  std::optional<NuggetResult> nugget;  // reuse a precomputed structure
};

struct AttackResult {
  std::string kind;  // mart, dp, sing, or null when there is nothing to attack
  int z = 0;         // trigger direction of the winning adversary
  int h = -1;        // attacked party
  int target_bit = 0;   // output bit the measured shift favors (pilot-chosen)
  double p_hat = 0.5;   // Pr[delivered output == target_bit] under attack
  double p_honest = 0.5;  // same probability over honest executions
  double bias = 0;        // p_hat - p_honest
  double se = 0;          // standard error of the bias (both measurements)
  double ci_lo = 0, ci_hi = 1;  // Wilson interval for p_hat
  std::int64_t trials = 0;
  std::vector<std::int64_t> abort_round_hist;  // slot r also counts completed runs
  bool coupling_ok = true;
  std::int64_t coupling_trials = 0;
  double bound = 0;
  std::string bound_desc;
  int sweep_multiplicity = 0;  // candidates tried; Bonferroni context for the bias
  double gamma = 0;            // certified deviation scale (0 on the fold route)
  NuggetResult nugget;
};

// Find (or adopt) the nugget, dispatch on its level to the fold, noisy-gap or
// singleton adversary, sweep direction z and monitored party h with pilot
// runs, then measure the winner's delivered-output bias over fresh trials.
// With run_coupling the same machinery is re-run with disabled triggers and
// must reproduce the honest output on shared coins trial by trial.
AttackResult main_attack(const ProtocolDef& proto, const MainAttackConfig& config);

}  // namespace cfl

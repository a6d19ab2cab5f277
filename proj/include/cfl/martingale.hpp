#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfl/prob.hpp"
#include "cfl/rng.hpp"

namespace cfl {

struct Sequence {
  std::vector<double> x;  // indices 0..r, values in [0,1]
};

struct DiffSequence {
  std::vector<double> y;  // indices 1..r
};

struct Ensemble {
  int r = 0;
  std::string generator;
  std::uint64_t seed = 0;
  std::vector<Sequence> sequences;
};

enum class MartingaleFlavor { weak, sos_weak };

struct MartingaleReport {
  MartingaleFlavor flavor = MartingaleFlavor::weak;
  double delta_hat = 0.0;    // worst |E[x_{i+1}] - E[x_i]| over evaluated bins
  double delta_hat_z = 0.0;  // worst deviation in standard-error units
  double gamma_hat = 0.0;  // step mass in bins whose deviation exceeds the threshold by > 3 SE
  std::int64_t evaluated_bins = 0;
  std::int64_t skipped_bins = 0;  // bins under min_count
  double skipped_mass = 0.0;      // fraction of steps living in skipped bins
  bool inconclusive = false;      // no bin reached min_count
};

struct ExMachinaReport {
  double mean_diff = 0.0;  // mean of (x_r^2 - x_0^2) - sum y^2 per sequence
  double se_diff = 0.0;
  double lhs = 0.0;  // |mean_diff|
  double rhs = 0.0;  // 2*r*delta + 3*se_diff
  double slack = 0.0;
  bool ok = false;
};

struct GapStats {
  double p_sos = 0.0;  // Pr[sum of squared diffs >= 1/16]
  double p_jump = 0.0;  // Pr[some |y_i| >= 1/(4*sqrt(r))]
  double se_sos = 0.0;
  double se_jump = 0.0;
  double ci_sos_lo = 0.0, ci_sos_hi = 0.0;    // Wilson, z=1.96
  double ci_jump_lo = 0.0, ci_jump_hi = 0.0;
  std::int64_t endpoint_violations = 0;  // x_0 != 1/2 or x_r not in {0,1}
  std::int64_t trials = 0;
};

DiffSequence diffs(const Sequence& seq);
double sum_of_squares(const Sequence& seq);
Sequence coupled_u_sequence(const Sequence& seq);

MartingaleReport classify(const Ensemble& ens, const Grid& grid, MartingaleFlavor flavor,
                          double delta_threshold, int min_count = 30);
ExMachinaReport check_ex_machina(const Ensemble& ens, double delta);
GapStats gap_stats(const Ensemble& ens);

// Wilson score interval for a binomial proportion at z=1.96.
std::pair<double, double> wilson_interval(std::int64_t hits, std::int64_t trials);

// Generators: "constant", "drift", "alljump", "majority_doob", "corrupted_mix".
// mix_fraction is only read by corrupted_mix (fraction of smooth-ramp sequences).
Ensemble generate_ensemble(const std::string& name, int r, int count, std::uint64_t seed,
                           double mix_fraction = 0.0);
std::vector<std::string> ensemble_generator_names();

// Exact conditional-expectation table for the r-round majority process:
// table[i][s] = Pr[majority of r fair coins is 1 | s heads among the first i].
std::vector<std::vector<double>> majority_doob_table(int r);

}  // namespace cfl

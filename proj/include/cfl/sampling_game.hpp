#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cfl/prob.hpp"
#include "cfl/rng.hpp"

namespace cfl {

struct SamplingInstance {
  int n = 0;  // parties
  int r = 0;  // rounds
  std::vector<std::vector<double>> values;  // values[i][h], round i+1, party h
  double gamma = 0.0;
  double lambda = 0.0;
  double p = 0.0;
  std::vector<double> row_means;  // filled by finalize()

  void finalize();  // validates invariants and caches the round means
  bool finalized() const { return static_cast<int>(row_means.size()) == r; }
  double mean(int i) const { return row_means[i]; }
  double leave_out(int i, int h) const {
    return (row_means[i] - p * values[i][h]) / (1.0 - p);
  }
  double sigma(int h) const;  // max_i |mean(i) - values[i][h]|
};

struct Outcome {
  int chosen_h = 0;
  int halt_round = 0;  // 1-based; r means no early halt
  double reward = 0.0;
};

struct BoundReport {
  std::vector<int> similar, nonsimilar;
  std::vector<double> v;  // per-party values of the reward lower bound
  double lower_bound = 0.0;
  bool max_mean_ge_gamma = false;  // some halting round has mean >= gamma
  bool similar_halt_ok = true;     // halt prob >= 1/6 on similar parties when triggered
};

struct CorollaryBound {
  double general = 0.0;
  double simplified = 0.0;
  bool simplified_applies = false;
  bool alpha_precondition_ok = true;
};

struct SigmaTailReport {
  bool precondition_ok = false;
  double outlier_lhs = 0.0, outlier_bound = 0.0;
  double exsquared_lhs = 0.0, exsquared_bound = 0.0;
  bool outlier_ok = false, exsquared_ok = false;
};

Outcome run_lapexp(const SamplingInstance& inst, SeedStream& stream);
Outcome run_lapexp_with_h(const SamplingInstance& inst, int h, SeedStream& stream);
Outcome run_threshold(const SamplingInstance& inst, double tsh, bool leave_out_mean, int h);

// lambda < 0 defaults to gamma/(4*log2 r); p < 0 defaults to 1/n.
SamplingInstance adversarial_instance(int r, double tsh, double sigma, double gamma,
                                      double lambda = -1.0, double p = -1.0);

std::vector<double> estimate_halt_probs(const SamplingInstance& inst, SeedStream& stream,
                                        int runs_per_party = 10000);
BoundReport theorem_42_bound(const SamplingInstance& inst, const std::vector<double>& halt_probs);
CorollaryBound corollary_43_bound(double alpha, double beta, double gamma, double delta,
                                  double lambda, double p, int r);

// dist holds (value, mass) atoms of the distribution of sigma^h over transcripts
SigmaTailReport check_sigma_tail_bounds(const std::vector<std::pair<double, double>>& dist,
                                        double alpha, double beta, double lambda, double p);

}  // namespace cfl

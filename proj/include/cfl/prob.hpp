#pragma once

#include <cstdint>
#include <vector>

#include "cfl/rng.hpp"

namespace cfl {

struct LaplaceParam {
  double lambda;
  explicit LaplaceParam(double l);
};

// discretization grid {0, delta, 2*delta, ...}
struct Grid {
  double delta;
  explicit Grid(double d);
};

// one run of Bernoulli trial probabilities p_1..p_r; for first-success use
// the last entry must be 1 (the process always stops at round r)
struct BernoulliSeq {
  std::vector<double> p;
};

// inverse-CDF transform; u = 0.5 is the median 0
double laplace_from_uniform(const LaplaceParam& param, double u);

double sample_laplace(const LaplaceParam& param, SeedStream& stream);

// Pr[Lap(lambda) >= threshold], closed form
double laplace_tail(const LaplaceParam& param, double threshold);

struct RatioReport {
  double p = 0;
  double p_prime = 0;
  double eps = 0;  // |gamma' - gamma|
  bool precondition_ok = false;
  bool ratio_ok = false;
};

// p = Pr[Lap >= lambda*gamma], p' = Pr[Lap >= lambda*gamma']; checks that
// both ratios p/p' and p'/p lie in 1 +- 5*eps
RatioReport check_laplace_ratio(double gamma, double gamma_prime, const LaplaceParam& param);

// largest multiple of grid.delta that is <= x (near-multiples within 1e-12
// of the next grid point are snapped up before flooring)
double round_down(double x, const Grid& grid);

// q_i = p_i * prod_{j<i} (1 - p_j); requires p_r = 1 so the q sum to 1
std::vector<double> first_success_dist(const BernoulliSeq& seq);

struct BernoulliLemmaReport {
  bool precondition_ok = false;  // four ratio families admit eps <= 1
  double eps = 0;                // smallest eps satisfying all ratio conditions
  double a1_err = 0;             // |sum_i q_i * (sum_{j<=i} p_j) - 1|
  double a1_err_prime = 0;
  double a2_worst = 0;  // max_i (lhs_i - bound_i); <= 0 when the lemma holds
  double a3_worst = 0;
  double a5_lhs = 0;
  double a5_bound = 0;
  bool a1_ok = false;
  bool a2_ok = false;
  bool a3_ok = false;
  bool a5_ok = false;
  bool all_ok() const { return precondition_ok && a1_ok && a2_ok && a3_ok && a5_ok; }
};

// numeric check of the first-success lemmas: the telescoping identity (A.1),
// the survival-product gap bound (A.2), the per-index |q_i - q'_i| bound
// (A.3) and the total-variation bound sum|q_i - q'_i| <= 4 eps (1 - q_r) (A.5)
BernoulliLemmaReport verify_bernoulli_lemmas(const BernoulliSeq& seq, const BernoulliSeq& seq_prime);

// bound 2*exp(-eps^2) on the half-sample mean deviation event; n must be even
double hoeffding_halfsample_bound(std::int64_t n, double eps);

}  // namespace cfl

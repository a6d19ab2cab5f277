#include "cfl/prob.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfl {

LaplaceParam::LaplaceParam(double l) : lambda(l) {
  if (!(l > 0)) throw std::invalid_argument("LaplaceParam: lambda must be positive");
}

Grid::Grid(double d) : delta(d) {
  if (!(d > 0) || d > 1) throw std::invalid_argument("Grid: delta must lie in (0,1]");
}

double laplace_from_uniform(const LaplaceParam& param, double u) {
  const double c = u - 0.5;
  if (c == 0) return 0.0;
  double a = 1.0 - 2.0 * std::fabs(c);
  if (a < 0x1.0p-53) a = 0x1.0p-53;  // guard log(0) at the u=0 endpoint
  const double mag = -param.lambda * std::log(a);
  return c < 0 ? -mag : mag;
}

double sample_laplace(const LaplaceParam& param, SeedStream& stream) {
  // one stream element per draw, for determinism and replay
  return laplace_from_uniform(param, stream.next_uniform());
}

double laplace_tail(const LaplaceParam& param, double threshold) {
  if (threshold >= 0) return 0.5 * std::exp(-threshold / param.lambda);
  return 1.0 - 0.5 * std::exp(threshold / param.lambda);
}

RatioReport check_laplace_ratio(double gamma, double gamma_prime, const LaplaceParam& param) {
  RatioReport rep;
  rep.eps = std::fabs(gamma_prime - gamma);
  rep.precondition_ok = rep.eps <= 1.0;
  rep.p = laplace_tail(param, param.lambda * gamma);
  rep.p_prime = laplace_tail(param, param.lambda * gamma_prime);
  if (!rep.precondition_ok) return rep;
  const double lo = 1.0 - 5.0 * rep.eps;
  const double hi = 1.0 + 5.0 * rep.eps;
  const double r1 = rep.p / rep.p_prime;
  const double r2 = rep.p_prime / rep.p;
  rep.ratio_ok = r1 >= lo && r1 <= hi && r2 >= lo && r2 <= hi;
  return rep;
}

double round_down(double x, const Grid& grid) {
  if (x < 0 || x > 1) throw std::invalid_argument("round_down: x must lie in [0,1]");
  const double q = x / grid.delta;
  double k = std::floor(q);
  if (q - k >= 1.0 - 1e-12) k += 1.0;  // snap float near-multiples
  return k * grid.delta;
}

std::vector<double> first_success_dist(const BernoulliSeq& seq) {
  if (seq.p.empty()) throw std::invalid_argument("first_success_dist: empty sequence");
  for (double v : seq.p)
    if (v < 0 || v > 1) throw std::invalid_argument("first_success_dist: probability outside [0,1]");
  if (seq.p.back() != 1.0)
    throw std::invalid_argument("first_success_dist: last trial probability must be 1");
  std::vector<double> q(seq.p.size());
  double survive = 1.0;
  for (std::size_t i = 0; i < seq.p.size(); ++i) {
    q[i] = seq.p[i] * survive;
    survive *= 1.0 - seq.p[i];
  }
  return q;
}

namespace {

// deviation |a/b - 1| with the 0/0 convention; negative means inadmissible
double ratio_dev(double a, double b) {
  if (b == 0) return a == 0 ? 0.0 : -1.0;
  return std::fabs(a / b - 1.0);
}

}  // namespace

BernoulliLemmaReport verify_bernoulli_lemmas(const BernoulliSeq& seq, const BernoulliSeq& seq_prime) {
  if (seq.p.size() != seq_prime.p.size())
    throw std::invalid_argument("verify_bernoulli_lemmas: length mismatch");
  const std::size_t r = seq.p.size();
  BernoulliLemmaReport rep;

  // smallest eps covering the four ratio families
  double eps = 0;
  bool admissible = true;
  for (std::size_t i = 0; i < r; ++i) {
    const double p = seq.p[i], pp = seq_prime.p[i];
    for (double d : {ratio_dev(p, pp), ratio_dev(pp, p), ratio_dev(1 - pp, 1 - p), ratio_dev(1 - p, 1 - pp)}) {
      if (d < 0) admissible = false;
      eps = std::max(eps, d);
    }
  }
  rep.eps = eps;
  rep.precondition_ok = admissible && eps <= 1.0;
  if (!rep.precondition_ok) return rep;

  const auto q = first_success_dist(seq);
  const auto qp = first_success_dist(seq_prime);

  // A.1: sum_i q_i * (sum_{j<=i} p_j) = 1, each sequence separately
  auto a1 = [](const std::vector<double>& p, const std::vector<double>& q) {
    double cum = 0, total = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      cum += p[i];
      total += q[i] * cum;
    }
    return std::fabs(total - 1.0);
  };
  rep.a1_err = a1(seq.p, q);
  rep.a1_err_prime = a1(seq_prime.p, qp);
  rep.a1_ok = rep.a1_err <= 1e-12 && rep.a1_err_prime <= 1e-12;

  // A.2 / A.3 with the pointwise-minimum sequence p~
  double prod = 1, prod_p = 1, prod_min = 1, cum_min = 0;
  double a2_worst = -1e300, a3_worst = -1e300;
  for (std::size_t i = 0; i < r; ++i) {
    const double pm = std::min(seq.p[i], seq_prime.p[i]);
    const double prod_min_before = prod_min;
    prod *= 1 - seq.p[i];
    prod_p *= 1 - seq_prime.p[i];
    prod_min *= 1 - pm;
    cum_min += pm;
    const double a2_lhs = std::fabs(prod_p - prod);
    const double a2_bound = 3 * eps * prod_min * cum_min;
    a2_worst = std::max(a2_worst, a2_lhs - a2_bound);
    const double a3_lhs = std::fabs(q[i] - qp[i]);
    const double a3_bound = 3 * eps * pm * prod_min_before * (1.0 / 3.0 + cum_min);
    a3_worst = std::max(a3_worst, a3_lhs - a3_bound);
  }
  rep.a2_worst = a2_worst;
  rep.a3_worst = a3_worst;
  rep.a2_ok = a2_worst <= 1e-12;
  rep.a3_ok = a3_worst <= 1e-12;

  // A.5: sum_{i<r} |q_i - q'_i| <= 4 eps (1 - q_r)
  double tv = 0;
  for (std::size_t i = 0; i + 1 < r; ++i) tv += std::fabs(q[i] - qp[i]);
  rep.a5_lhs = tv;
  rep.a5_bound = 4 * eps * (1 - q.back());
  rep.a5_ok = tv <= rep.a5_bound + 1e-12;
  return rep;
}

double hoeffding_halfsample_bound(std::int64_t n, double eps) {
  if (n <= 0 || n % 2 != 0)
    throw std::invalid_argument("hoeffding_halfsample_bound: n must be positive and even");
  if (eps < 0) throw std::invalid_argument("hoeffding_halfsample_bound: eps must be >= 0");
  return 2.0 * std::exp(-eps * eps);
}

}  // namespace cfl

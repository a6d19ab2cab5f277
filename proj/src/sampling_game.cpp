#include "cfl/sampling_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfl {

void SamplingInstance::finalize() {
  if (n < 1) throw std::invalid_argument("sampling instance: need at least one party");
  if (r < 1) throw std::invalid_argument("sampling instance: need at least one round");
  if (static_cast<int>(values.size()) != r)
    throw std::invalid_argument("sampling instance: values must have r rows");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("sampling instance: gamma outside [0,1]");
  if (lambda <= 0.0) throw std::invalid_argument("sampling instance: lambda must be positive");
  if (p < 0.0 || p > 0.5) throw std::invalid_argument("sampling instance: p outside [0,1/2]");
  for (const auto& row : values) {
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("sampling instance: row width must be n");
    for (double v : row)
      if (v < -1.0 || v > 1.0) throw std::invalid_argument("sampling instance: value outside [-1,1]");
  }
  for (int h = 1; h < n; ++h)
    if (values[r - 1][h] != values[r - 1][0])
      throw std::invalid_argument("sampling instance: last round values must agree across parties");
  row_means.assign(r, 0.0);
  for (int i = 0; i < r; ++i) {
    double s = 0.0;
    for (int h = 0; h < n; ++h) s += values[i][h];
    row_means[i] = s / n;
  }
}

double SamplingInstance::sigma(int h) const {
  double worst = 0.0;
  for (int i = 0; i < r; ++i) worst = std::max(worst, std::fabs(row_means[i] - values[i][h]));
  return worst;
}

namespace {

void require_finalized(const SamplingInstance& inst, const char* who) {
  if (!inst.finalized()) throw std::runtime_error(std::string(who) + ": instance not finalized");
}

}  // namespace

Outcome run_lapexp_with_h(const SamplingInstance& inst, int h, SeedStream& stream) {
  require_finalized(inst, "run_lapexp");
  if (h < 0 || h >= inst.n) throw std::invalid_argument("run_lapexp: party out of range");
  const LaplaceParam noise(inst.lambda);
  for (int i = 0; i + 1 < inst.r; ++i) {
    const double nu = sample_laplace(noise, stream);
    if (inst.leave_out(i, h) + nu >= inst.gamma) return {h, i + 1, inst.values[i][h]};
  }
  return {h, inst.r, inst.values[inst.r - 1][h]};
}

Outcome run_lapexp(const SamplingInstance& inst, SeedStream& stream) {
  require_finalized(inst, "run_lapexp");
  const int h = static_cast<int>(stream.next_below(static_cast<std::uint64_t>(inst.n)));
  return run_lapexp_with_h(inst, h, stream);
}

Outcome run_threshold(const SamplingInstance& inst, double tsh, bool leave_out_mean, int h) {
  require_finalized(inst, "run_threshold");
  if (h < 0 || h >= inst.n) throw std::invalid_argument("run_threshold: party out of range");
  for (int i = 0; i + 1 < inst.r; ++i) {
    const double v = leave_out_mean ? inst.leave_out(i, h) : inst.mean(i);
    if (v + 1e-12 >= tsh) return {h, i + 1, inst.values[i][h]};
  }
  return {h, inst.r, inst.values[inst.r - 1][h]};
}

SamplingInstance adversarial_instance(int r, double tsh, double sigma, double gamma,
                                      double lambda, double p) {
  if (r < 3) throw std::invalid_argument("adversarial_instance: need r >= 3");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("adversarial_instance: gamma outside [0,1]");
  if (tsh < 0.0 || tsh > gamma) throw std::invalid_argument("adversarial_instance: tsh outside [0,gamma]");
  if (sigma < 0.0 || sigma > tsh) throw std::invalid_argument("adversarial_instance: sigma outside [0,tsh]");
  SamplingInstance inst;
  inst.n = r - 1;
  inst.r = r;
  inst.gamma = gamma;
  inst.lambda = lambda < 0.0 ? gamma / (4.0 * std::log2(static_cast<double>(r))) : lambda;
  inst.p = p < 0.0 ? 1.0 / inst.n : p;
  inst.values.assign(r, std::vector<double>(inst.n, tsh));
  for (int i = 0; i + 1 < r; ++i) inst.values[i][i] = tsh - sigma;
  inst.values[r - 1].assign(inst.n, gamma);
  inst.finalize();
  return inst;
}

std::vector<double> estimate_halt_probs(const SamplingInstance& inst, SeedStream& stream,
                                        int runs_per_party) {
  require_finalized(inst, "estimate_halt_probs");
  if (runs_per_party < 1) throw std::invalid_argument("estimate_halt_probs: need at least one run");
  std::vector<double> probs(inst.n, 0.0);
  for (int h = 0; h < inst.n; ++h) {
    SeedStream party = stream.derive({static_cast<std::uint64_t>(h)});
    int halts = 0;
    for (int t = 0; t < runs_per_party; ++t)
      if (run_lapexp_with_h(inst, h, party).halt_round != inst.r) ++halts;
    probs[h] = static_cast<double>(halts) / runs_per_party;
  }
  return probs;
}

BoundReport theorem_42_bound(const SamplingInstance& inst, const std::vector<double>& halt_probs) {
  require_finalized(inst, "theorem_42_bound");
  if (static_cast<int>(halt_probs.size()) != inst.n)
    throw std::invalid_argument("theorem_42_bound: need one halt probability per party");
  BoundReport rep;
  rep.v.resize(inst.n);
  const double cutoff = inst.p > 0.0 ? inst.lambda * (1.0 - inst.p) / inst.p
                                     : std::numeric_limits<double>::infinity();
  double sum_v = 0.0;
  for (int h = 0; h < inst.n; ++h) {
    const double sh = inst.sigma(h);
    if (sh <= cutoff) {
      rep.similar.push_back(h);
      const double penalty =
          inst.p > 0.0 ? 40.0 * sh * sh * inst.p / (inst.lambda * (1.0 - inst.p)) : 0.0;
      rep.v[h] = halt_probs[h] * (inst.gamma / 2.0 - penalty);
    } else {
      rep.nonsimilar.push_back(h);
      rep.v[h] = -4.0 * sh;
    }
    sum_v += rep.v[h];
  }
  rep.lower_bound = sum_v / inst.n - inst.r * std::exp(-inst.gamma / (2.0 * inst.lambda));
  for (int i = 0; i + 1 < inst.r; ++i)
    if (inst.mean(i) >= inst.gamma) rep.max_mean_ge_gamma = true;
  if (rep.max_mean_ge_gamma)
    for (int h : rep.similar)
      if (halt_probs[h] < 1.0 / 6.0 - 1e-9) rep.similar_halt_ok = false;
  return rep;
}

CorollaryBound corollary_43_bound(double alpha, double beta, double gamma, double delta,
                                  double lambda, double p, int r) {
  if (r < 1) throw std::invalid_argument("corollary_43_bound: r must be positive");
  if (lambda <= 0.0 || lambda >= 1.0)
    throw std::invalid_argument("corollary_43_bound: lambda must be in (0,1)");
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("corollary_43_bound: negative parameter");
  CorollaryBound out;
  const double penalty = p > 0.0 ? 40.0 * alpha * alpha * p / (lambda * (1.0 - p)) : 0.0;
  out.general = (delta - beta / 2.0) / 6.0 * (gamma / 2.0 - penalty) - 168.0 * alpha * beta -
                8.0 * alpha * beta * std::log2(1.0 / lambda) -
                r / 2.0 * std::exp(-gamma / (2.0 * lambda));
  out.simplified = gamma * delta / 125.0 - 1.0 / (2.0 * r);
  out.alpha_precondition_ok = p <= 0.0 || alpha <= lambda * (1.0 - p) / (2.0 * p);
  const double logr = std::log2(static_cast<double>(r));
  out.simplified_applies =
      p > 0.0 && logr > 0.0 && gamma >= 1.0 / (256.0 * std::sqrt(static_cast<double>(r))) &&
      std::fabs(lambda - gamma / (4.0 * logr)) <= 1e-12 &&
      alpha <= gamma / (16.0 * logr) * std::sqrt((1.0 - p) / p) &&
      beta <= delta / (16.0 * std::sqrt((1.0 - p) / p));
  return out;
}

SigmaTailReport check_sigma_tail_bounds(const std::vector<std::pair<double, double>>& dist,
                                        double alpha, double beta, double lambda, double p) {
  if (lambda <= 0.0 || lambda >= 1.0)
    throw std::invalid_argument("check_sigma_tail_bounds: lambda must be in (0,1)");
  if (p <= 0.0 || p > 0.5) throw std::invalid_argument("check_sigma_tail_bounds: p outside (0,1/2]");
  if (alpha <= 0.0 || beta < 0.0)
    throw std::invalid_argument("check_sigma_tail_bounds: alpha must be positive, beta non-negative");
  double total = 0.0, top = 0.0;
  for (const auto& [v, m] : dist) {
    if (m < 0.0) throw std::invalid_argument("check_sigma_tail_bounds: negative mass");
    if (v < 0.0) throw std::invalid_argument("check_sigma_tail_bounds: negative value");
    total += m;
    top = std::max(top, v);
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("check_sigma_tail_bounds: masses must sum to 1");

  SigmaTailReport rep;
  // dyadic tail precondition, checked with a strict comparison so that the
  // canonical distribution with tails exactly beta/rho at every level is admissible
  rep.precondition_ok = true;
  for (double level = alpha, cap = beta; level <= top; level *= 2.0, cap /= 2.0) {
    double above = 0.0;
    for (const auto& [v, m] : dist)
      if (v > level) above += m;
    if (above > cap + 1e-12) {
      rep.precondition_ok = false;
      break;
    }
  }

  const double m_cut = (1.0 - p) * lambda / p;
  for (const auto& [v, m] : dist) {
    if (v >= m_cut) rep.outlier_lhs += v * m;
    if (v >= alpha && v <= m_cut) rep.exsquared_lhs += v * v * m;
  }
  rep.outlier_bound = 2.0 * alpha * beta * std::log2(1.0 / lambda) + 2.0 * alpha * beta;
  rep.exsquared_bound = 4.0 * (1.0 - p) * lambda * alpha * beta / p;
  if (rep.precondition_ok) {
    rep.outlier_ok = rep.outlier_lhs <= rep.outlier_bound + 1e-12;
    rep.exsquared_ok = rep.exsquared_lhs <= rep.exsquared_bound + 1e-12;
  }
  return rep;
}

}  // namespace cfl

#include "cfl/martingale.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace cfl {

DiffSequence diffs(const Sequence& seq) {
  DiffSequence d;
  if (seq.x.empty()) return d;
  d.y.resize(seq.x.size() - 1);
  for (std::size_t i = 1; i < seq.x.size(); ++i) d.y[i - 1] = seq.x[i] - seq.x[i - 1];
  return d;
}

double sum_of_squares(const Sequence& seq) {
  double s = 0.0;
  for (std::size_t i = 1; i < seq.x.size(); ++i) {
    const double y = seq.x[i] - seq.x[i - 1];
    s += y * y;
  }
  return s;
}

Sequence coupled_u_sequence(const Sequence& seq) {
  Sequence u;
  u.x.resize(seq.x.size());
  if (seq.x.empty()) return u;
  u.x[0] = seq.x[0];
  double sos = 0.0;  // sum over j < i of y_j^2
  bool frozen = false;
  for (std::size_t i = 1; i < seq.x.size(); ++i) {
    if (sos > 1.0 / 16.0) frozen = true;
    u.x[i] = frozen ? u.x[i - 1] : seq.x[i];
    const double y = seq.x[i] - seq.x[i - 1];
    sos += y * y;
  }
  return u;
}

namespace {

struct BinStats {
  std::int64_t count = 0;
  double sum_step = 0.0;  // sum of x_{i+1} - x_i over members
  double sum_step_sq = 0.0;
};

struct BinKey {
  std::int32_t round;
  std::int64_t x_idx;
  std::int64_t sos_idx;
  bool operator==(const BinKey&) const = default;
};

struct BinKeyHash {
  std::size_t operator()(const BinKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.round);
    h = h * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(k.x_idx);
    h = h * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(k.sos_idx);
    h ^= h >> 31;
    return static_cast<std::size_t>(h * 0xbf58476d1ce4e5b9ull);
  }
};

std::int64_t grid_index(double x, const Grid& grid) {
  return static_cast<std::int64_t>(std::llround(round_down(x, grid) / grid.delta));
}

}  // namespace

MartingaleReport classify(const Ensemble& ens, const Grid& grid, MartingaleFlavor flavor,
                          double delta_threshold, int min_count) {
  if (ens.sequences.empty()) throw std::invalid_argument("classify: empty ensemble");
  if (min_count < 1) throw std::invalid_argument("classify: min_count must be positive");
  const int r = ens.r;
  // the sum-of-squares conditioning value is snapped to the squared grid step
  const double sos_step = grid.delta * grid.delta;

  std::unordered_map<BinKey, BinStats, BinKeyHash> bins;
  for (const Sequence& seq : ens.sequences) {
    if (static_cast<int>(seq.x.size()) != r + 1)
      throw std::invalid_argument("classify: sequence length mismatch");
    double sos = 0.0;
    for (int i = 0; i < r; ++i) {
      BinKey key{i, grid_index(seq.x[i], grid), 0};
      if (flavor == MartingaleFlavor::sos_weak)
        key.sos_idx = static_cast<std::int64_t>(std::floor(sos / sos_step + 1e-9));
      const double step = seq.x[i + 1] - seq.x[i];
      BinStats& b = bins[key];
      b.count += 1;
      b.sum_step += step;
      b.sum_step_sq += step * step;
      sos += step * step;
    }
  }

  MartingaleReport rep;
  rep.flavor = flavor;
  const double total_steps = static_cast<double>(ens.sequences.size()) * r;
  double violating_steps = 0.0, skipped_steps = 0.0;
  for (const auto& [key, b] : bins) {
    if (b.count < min_count) {
      rep.skipped_bins += 1;
      skipped_steps += static_cast<double>(b.count);
      continue;
    }
    rep.evaluated_bins += 1;
    const double n = static_cast<double>(b.count);
    const double mean = b.sum_step / n;
    const double dev = std::fabs(mean);
    const double var = std::max(0.0, b.sum_step_sq / n - mean * mean);
    const double se = std::sqrt(var / n);
    const double z = se > 0 ? dev / se : (dev > 0 ? 1e18 : 0.0);
    if (dev > rep.delta_hat) rep.delta_hat = dev;
    if (z > rep.delta_hat_z) rep.delta_hat_z = z;
    // a bin violates only when its deviation exceeds the threshold beyond sampling noise
    if (dev > delta_threshold + 3.0 * se) violating_steps += n;
  }
  rep.gamma_hat = violating_steps / total_steps;
  rep.skipped_mass = skipped_steps / total_steps;
  rep.inconclusive = rep.evaluated_bins == 0;
  return rep;
}

ExMachinaReport check_ex_machina(const Ensemble& ens, double delta) {
  if (ens.sequences.empty()) throw std::invalid_argument("check_ex_machina: empty ensemble");
  const double n = static_cast<double>(ens.sequences.size());
  double sum = 0.0, sum_sq = 0.0;
  for (const Sequence& seq : ens.sequences) {
    const double x0 = seq.x.front(), xr = seq.x.back();
    const double d = (xr * xr - x0 * x0) - sum_of_squares(seq);
    sum += d;
    sum_sq += d * d;
  }
  ExMachinaReport rep;
  rep.mean_diff = sum / n;
  const double var = std::max(0.0, sum_sq / n - rep.mean_diff * rep.mean_diff);
  rep.se_diff = std::sqrt(var / n);
  rep.lhs = std::fabs(rep.mean_diff);
  rep.rhs = 2.0 * ens.r * delta + 3.0 * rep.se_diff;
  rep.slack = rep.rhs - rep.lhs;
  rep.ok = rep.lhs <= rep.rhs;
  return rep;
}

std::pair<double, double> wilson_interval(std::int64_t hits, std::int64_t trials) {
  if (trials <= 0) return {0.0, 1.0};
  const double z = 1.96;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

GapStats gap_stats(const Ensemble& ens) {
  if (ens.sequences.empty()) throw std::invalid_argument("gap_stats: empty ensemble");
  GapStats g;
  g.trials = static_cast<std::int64_t>(ens.sequences.size());
  const double jump_threshold = 1.0 / (4.0 * std::sqrt(static_cast<double>(ens.r)));
  std::int64_t sos_hits = 0, jump_hits = 0;
  for (const Sequence& seq : ens.sequences) {
    if (std::fabs(seq.x.front() - 0.5) > 1e-9 ||
        (std::fabs(seq.x.back()) > 1e-9 && std::fabs(seq.x.back() - 1.0) > 1e-9))
      g.endpoint_violations += 1;
    double sos = 0.0;
    bool jumped = false;
    for (std::size_t i = 1; i < seq.x.size(); ++i) {
      const double y = seq.x[i] - seq.x[i - 1];
      sos += y * y;
      if (std::fabs(y) >= jump_threshold) jumped = true;
    }
    if (sos >= 1.0 / 16.0) ++sos_hits;
    if (jumped) ++jump_hits;
  }
  const double n = static_cast<double>(g.trials);
  g.p_sos = sos_hits / n;
  g.p_jump = jump_hits / n;
  g.se_sos = std::sqrt(g.p_sos * (1 - g.p_sos) / n);
  g.se_jump = std::sqrt(g.p_jump * (1 - g.p_jump) / n);
  std::tie(g.ci_sos_lo, g.ci_sos_hi) = wilson_interval(sos_hits, g.trials);
  std::tie(g.ci_jump_lo, g.ci_jump_hi) = wilson_interval(jump_hits, g.trials);
  return g;
}

std::vector<std::vector<double>> majority_doob_table(int r) {
  if (r < 1) throw std::invalid_argument("majority_doob_table: r must be positive");
  std::vector<std::vector<double>> table(r + 1);
  table[r].resize(r + 1);
  for (int s = 0; s <= r; ++s) table[r][s] = 2 * s > r ? 1.0 : 0.0;
  for (int i = r - 1; i >= 0; --i) {
    table[i].resize(i + 1);
    for (int s = 0; s <= i; ++s) table[i][s] = 0.5 * (table[i + 1][s] + table[i + 1][s + 1]);
  }
  return table;
}

namespace {

Sequence smooth_ramp(int r) {
  Sequence seq;
  seq.x.resize(r + 1);
  for (int i = 0; i <= r; ++i) seq.x[i] = 0.5 + static_cast<double>(i) / (2.0 * r);
  return seq;
}

}  // namespace

Ensemble generate_ensemble(const std::string& name, int r, int count, std::uint64_t seed,
                           double mix_fraction) {
  if (r < 1) throw std::invalid_argument("generate_ensemble: r must be positive");
  if (count < 1) throw std::invalid_argument("generate_ensemble: count must be positive");
  Ensemble ens;
  ens.r = r;
  ens.generator = name;
  ens.seed = seed;
  ens.sequences.reserve(count);
  SeedStream stream(seed);

  if (name == "constant") {
    Sequence seq;
    seq.x.assign(r + 1, 0.5);
    ens.sequences.assign(count, seq);
  } else if (name == "drift") {
    Sequence seq;
    seq.x.resize(r + 1);
    for (int i = 0; i <= r; ++i) seq.x[i] = std::min(1.0, 0.1 * i);
    ens.sequences.assign(count, seq);
  } else if (name == "alljump") {
    for (int t = 0; t < count; ++t) {
      Sequence seq;
      seq.x.assign(r + 1, static_cast<double>(stream.next_bit()));
      seq.x[0] = 0.5;
      ens.sequences.push_back(std::move(seq));
    }
  } else if (name == "majority_doob" || name == "corrupted_mix") {
    const auto table = majority_doob_table(r);
    for (int t = 0; t < count; ++t) {
      if (name == "corrupted_mix" && stream.next_uniform() < mix_fraction) {
        ens.sequences.push_back(smooth_ramp(r));
        continue;
      }
      Sequence seq;
      seq.x.resize(r + 1);
      int heads = 0;
      seq.x[0] = table[0][0];
      for (int i = 1; i <= r; ++i) {
        heads += static_cast<int>(stream.next_bit());
        seq.x[i] = table[i][heads];
      }
      ens.sequences.push_back(std::move(seq));
    }
  } else {
    throw std::invalid_argument("generate_ensemble: unknown generator " + name);
  }
  return ens;
}

std::vector<std::string> ensemble_generator_names() {
  return {"constant", "drift", "alljump", "majority_doob", "corrupted_mix"};
}

}  // namespace cfl

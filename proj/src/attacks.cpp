#include "cfl/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cfl/prob.hpp"

namespace cfl {

namespace {

void check_direction(int z) {
  if (z != 0 && z != 1) throw std::invalid_argument("attack direction must be 0 or 1");
}

PartySet draw_survivor(const std::vector<PartySet>& options, SeedStream& stream) {
  return options[static_cast<std::size_t>(stream.next_below(options.size()))];
}

TupleSet sample_half(const TupleSet& from, std::size_t m, SeedStream& stream) {
  std::vector<PartySet> pool = from.tuples;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(stream.next_below(pool.size() - j));
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(m);
  return TupleSet{from.k, std::move(pool)};
}

}  // namespace

MartAdversary::MartAdversary(TupleSet s, TupleSet s_prime, int z, int h,
                             std::shared_ptr<const GameValueTable> table,
                             double threshold_override)
    : s_(std::move(s)), table_(std::move(table)) {
  check_direction(z);
  if (!table_ || table_->r < 1) throw std::invalid_argument("mart_attack: missing game table");
  if (s_.tuples.empty()) throw std::invalid_argument("mart_attack: empty estimation set");
  if (table_->b_den != static_cast<std::int64_t>(s_.size()))
    throw std::invalid_argument("mart_attack: table was built for a different tuple set");
  if (!tuple_select(s_, h).tuples.empty())
    throw std::invalid_argument("mart_attack: attacked party appears in the estimation set");
  survivors_ = tuple_select(s_prime, h).tuples;
  if (survivors_.empty())
    throw std::invalid_argument("mart_attack: no surviving tuple contains the attacked party");
  sign_ = z == 1 ? 1.0 : -1.0;
  threshold_ =
      threshold_override >= 0 ? threshold_override : 1.0 / (64.0 * std::sqrt(table_->r));
}

void MartAdversary::begin_trial(SeedStream&) {
  x_idx_ = table_->x_den / 2;
  sos_idx_ = 0;
  g_ = 1;
  x_at_decision_ = 0.5;
}

Decision MartAdversary::on_round(int round, const std::vector<TrajectoryView>& trajectories,
                                 const TranscriptView&, SeedStream& stream) {
  const TrajectoryView& t = trajectories.at(0);
  const std::int64_t b_num = t.num(round);
  const std::int64_t b_prev_num = t.num(round - 1);
  const ContextKey key{static_cast<std::int32_t>(b_num), static_cast<std::int32_t>(b_prev_num),
                       x_idx_, sos_idx_, static_cast<std::uint8_t>(g_)};
  const std::int32_t mu = table_->lookup(round, key);
  const double x = static_cast<double>(mu) / table_->x_den;
  const double b = t.b(round);
  const double b_prev = t.b(round - 1);

  const bool fire_before = round == 1 ? sign_ * (b - 0.5) > threshold_
                                      : g_ == 1 && sign_ * (b_prev - x) > threshold_;
  if (fire_before) {
    x_at_decision_ = x;
    return Decision::abort_before(draw_survivor(survivors_, stream));
  }
  if (round > 1 && g_ == 1 && sign_ * (b - x) > threshold_) {
    x_at_decision_ = x;
    return Decision::abort_after(draw_survivor(survivors_, stream));
  }

  g_ = trigger_g(x, b, b_prev, g_, table_->r);
  const std::int64_t step = mu - x_idx_;
  sos_idx_ += step * step;
  x_idx_ = mu;
  x_at_decision_ = x;
  return Decision::none();
}

DpAdversary::DpAdversary(TupleSet s1, TupleSet s0, int z, int h, double gamma, int r)
    : gamma_(gamma) {
  check_direction(z);
  if (r < 2) throw std::invalid_argument("dp_attack: needs at least two rounds");
  if (std::isnan(gamma) || gamma <= 0) throw std::invalid_argument("dp_attack: bad gamma");
  s1_leave_ = tuple_remove(s1, h);
  s0_leave_ = tuple_remove(s0, h);
  if (s1_leave_.tuples.empty() || s0_leave_.tuples.empty())
    throw std::invalid_argument("dp_attack: leave-one-out set is empty");
  survivors_ = tuple_select(z == 1 ? s1 : s0, h).tuples;
  if (survivors_.empty())
    throw std::invalid_argument("dp_attack: no surviving tuple contains the attacked party");
  lambda_ = gamma / (4.0 * std::log2(static_cast<double>(r)));
}

Decision DpAdversary::on_round(int round, const std::vector<TrajectoryView>& trajectories,
                               const TranscriptView&, SeedStream& stream) {
  if (!std::isfinite(gamma_)) return Decision::none();
  const double gap = trajectories.at(0).b(round) - trajectories.at(1).b(round);
  const double noise = sample_laplace(LaplaceParam(lambda_), stream);
  if (gap + noise > gamma_)
    return Decision::abort_before(draw_survivor(survivors_, stream));
  return Decision::none();
}

SingAdversary::SingAdversary(TupleSet s1, TupleSet s0, int z, int h, double gamma,
                             SeedStream& stream)
    : gamma_(gamma) {
  check_direction(z);
  if (std::isnan(gamma) || gamma < 0) throw std::invalid_argument("sing_attack: bad gamma");
  const TupleSet own = tuple_select(z == 1 ? s1 : s0, h);
  if (own.size() != 1)
    throw std::invalid_argument("sing_attack: attacked party must pin a unique tuple");
  survivor_ = own.tuples[0];
  const TupleSet rem1 = tuple_remove(s1, h);
  const TupleSet rem0 = tuple_remove(s0, h);
  const std::size_t m1 = s1.size() / 2;
  const std::size_t m0 = s0.size() / 2;
  if (m1 < 1 || m0 < 1 || m1 > rem1.size() || m0 > rem0.size())
    throw std::invalid_argument("sing_attack: cannot halve the tuple sets around h");
  e1_ = sample_half(rem1, m1, stream);
  e0_ = sample_half(rem0, m0, stream);
}

Decision SingAdversary::on_round(int round, const std::vector<TrajectoryView>& trajectories,
                                 const TranscriptView&, SeedStream&) {
  const double gap = trajectories.at(0).b(round) - trajectories.at(1).b(round);
  if (gap > 0.75 * gamma_) return Decision::abort_before(survivor_);
  return Decision::none();
}

Ci93Adversary::Ci93Adversary(const ProtocolDef& proto, double threshold_override)
    : proto_(&proto) {
  const int total_bits = proto.n * proto.coin_bits;
  if (total_bits < 1 || total_bits > 20)
    throw std::invalid_argument("ci93_attack: coin space too large to enumerate");
  if (proto.r < 1 || proto.r > 63) throw std::invalid_argument("ci93_attack: bad round count");
  threshold_ = threshold_override >= 0 ? threshold_override : 1.0 / (2.0 * std::sqrt(proto.r));

  const std::uint64_t space = 1ull << total_bits;
  out_.resize(space);
  z_bits_.resize(space);
  const PartySet honest{0};
  for (std::uint64_t idx = 0; idx < space; ++idx) {
    const Coins coins = Coins::from_index(proto.n, proto.coin_bits, idx);
    auto [tx, out] = run_honest(proto, coins);
    out_[idx] = static_cast<std::uint8_t>(out);
    std::uint64_t bits = 0;
    for (int i = 0; i <= proto.r; ++i)
      bits |= static_cast<std::uint64_t>(backup_value(proto, coins, tx, honest, i) & 1) << i;
    z_bits_[idx] = bits;
  }
}

void Ci93Adversary::begin_trial(SeedStream&) {
  alive_.resize(out_.size());
  std::iota(alive_.begin(), alive_.end(), 0u);
  seen_.msgs.clear();
}

Decision Ci93Adversary::on_round(int round, const std::vector<TrajectoryView>&,
                                 const TranscriptView& transcript, SeedStream&) {
  std::vector<std::uint32_t> still;
  still.reserve(alive_.size());
  for (std::uint32_t idx : alive_) {
    const Coins coins = Coins::from_index(proto_->n, proto_->coin_bits, idx);
    bool match = true;
    for (int p = 0; p < proto_->n && match; ++p)
      match = proto_->next_message(p, round, coins, seen_) == transcript.msg(p, round);
    if (match) still.push_back(idx);
  }
  alive_ = std::move(still);
  if (alive_.empty())
    throw std::runtime_error("ci93_attack: observed transcript leaves the enumerated support");

  double out_sum = 0;
  double fallback_sum = 0;
  for (std::uint32_t idx : alive_) {
    out_sum += out_[idx];
    fallback_sum += (z_bits_[idx] >> (round - 1)) & 1;
  }
  const double x = out_sum / static_cast<double>(alive_.size());
  const double w = fallback_sum / static_cast<double>(alive_.size());
  if (x - w >= threshold_) return Decision::abort_before(PartySet{0});

  std::vector<Message> row;
  row.reserve(static_cast<std::size_t>(proto_->n));
  for (int p = 0; p < proto_->n; ++p) row.push_back(transcript.msg(p, round));
  seen_.msgs.push_back(std::move(row));
  return Decision::none();
}

std::unique_ptr<MartAdversary> mart_attack(const TupleSet& s, const TupleSet& s_prime, int z,
                                           int h, std::shared_ptr<const GameValueTable> table,
                                           double threshold_override) {
  return std::make_unique<MartAdversary>(s, s_prime, z, h, std::move(table), threshold_override);
}

std::unique_ptr<DpAdversary> dp_attack(const TupleSet& s1, const TupleSet& s0, int z, int h,
                                       double gamma, int r) {
  return std::make_unique<DpAdversary>(s1, s0, z, h, gamma, r);
}

std::unique_ptr<SingAdversary> sing_attack(const TupleSet& s1, const TupleSet& s0, int z, int h,
                                           double gamma, SeedStream& stream) {
  return std::make_unique<SingAdversary>(s1, s0, z, h, gamma, stream);
}

std::unique_ptr<Ci93Adversary> ci93_attack(const ProtocolDef& proto, double threshold_override) {
  return std::make_unique<Ci93Adversary>(proto, threshold_override);
}

HalfSampleStats half_sample_event_stats(const ProtocolDef& proto, const TupleSet& s1,
                                        const TupleSet& s0, int h, double alpha, int trials,
                                        SeedStream& stream) {
  if (trials < 1) throw std::invalid_argument("half_sample_event_stats: trials must be positive");
  if (!(alpha > 0)) throw std::invalid_argument("half_sample_event_stats: alpha must be positive");
  const TupleSet rem1 = tuple_remove(s1, h);
  const TupleSet rem0 = tuple_remove(s0, h);
  const std::size_t m1 = s1.size() / 2;
  const std::size_t m0 = s0.size() / 2;
  if (m1 < 1 || m0 < 1 || m1 > rem1.size() || m0 > rem0.size())
    throw std::invalid_argument("half_sample_event_stats: cannot halve the tuple sets around h");

  const double cut = alpha / (8.0 * std::sqrt(proto.n));
  HalfSampleStats stats;
  stats.trials = trials;
  stats.bound = std::min(1.0, 4.0 * proto.r * std::exp(-alpha * alpha / 192.0));

  for (int t = 0; t < trials; ++t) {
    SeedStream trial = stream.derive({static_cast<std::uint64_t>(t)});
    SeedStream coin_stream = trial.derive({0});
    SeedStream half_stream = trial.derive({1});
    const Coins coins = Coins::sample(proto.n, proto.coin_bits, coin_stream);
    const auto [tx, out] = run_honest(proto, coins);
    (void)out;
    const TupleSet e1 = sample_half(rem1, m1, half_stream);
    const TupleSet e0 = sample_half(rem0, m0, half_stream);
    const BackupTrajectory full1 = backup_trajectory(proto, coins, tx, s1);
    const BackupTrajectory full0 = backup_trajectory(proto, coins, tx, s0);
    const BackupTrajectory half1 = backup_trajectory(proto, coins, tx, e1);
    const BackupTrajectory half0 = backup_trajectory(proto, coins, tx, e0);
    bool hit = false;
    for (int i = 1; i <= proto.r && !hit; ++i)
      hit = std::abs(half1.value(i) - full1.value(i)) >= cut ||
            std::abs(half0.value(i) - full0.value(i)) >= cut;
    if (hit) ++stats.hits;
  }
  stats.freq = static_cast<double>(stats.hits) / trials;
  return stats;
}

}  // namespace cfl

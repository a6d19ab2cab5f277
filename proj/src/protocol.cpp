#include "cfl/protocol.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace cfl {

PartySet make_party_set(std::vector<int> parties) {
  std::sort(parties.begin(), parties.end());
  parties.erase(std::unique(parties.begin(), parties.end()), parties.end());
  return parties;
}

PartySet full_party_set(int n) {
  PartySet s(n);
  for (int i = 0; i < n; ++i) s[i] = i;
  return s;
}

bool contains_party(const PartySet& set, int party) {
  return std::binary_search(set.begin(), set.end(), party);
}

Coins Coins::sample(int n, int bits_per_party, SeedStream& stream) {
  if (n < 1 || bits_per_party < 1) throw std::invalid_argument("coins: bad shape");
  Coins c;
  c.n = n;
  c.bits_per_party = bits_per_party;
  c.stride = (bits_per_party + 63) / 64;
  c.words.resize(static_cast<std::size_t>(n) * c.stride);
  for (auto& w : c.words) w = stream.next_u64();
  return c;
}

Coins Coins::from_index(int n, int bits_per_party, std::uint64_t index) {
  if (n < 1 || bits_per_party < 1) throw std::invalid_argument("coins: bad shape");
  if (n * bits_per_party > 63) throw std::invalid_argument("coins: index form needs n*bits <= 63");
  Coins c;
  c.n = n;
  c.bits_per_party = bits_per_party;
  c.stride = 1;
  c.words.assign(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < n * bits_per_party; ++j)
    if ((index >> j) & 1u)
      c.words[j / bits_per_party] |= 1ull << (j % bits_per_party);
  return c;
}

TupleSet choose_all(const PartySet& base, int k) {
  if (k < 0) throw std::invalid_argument("choose_all: negative arity");
  TupleSet out;
  out.k = k;
  if (k == 0) {
    out.tuples.push_back({});
    return out;
  }
  if (k > static_cast<int>(base.size())) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    PartySet tuple(k);
    for (int i = 0; i < k; ++i) tuple[i] = base[idx[i]];
    out.tuples.push_back(std::move(tuple));
    int i = k - 1;
    while (i >= 0 && idx[i] == static_cast<int>(base.size()) - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

TupleSet tuple_select(const TupleSet& set, int party) {
  TupleSet out;
  out.k = set.k;
  for (const auto& t : set.tuples)
    if (contains_party(t, party)) out.tuples.push_back(t);
  return out;
}

TupleSet tuple_remove(const TupleSet& set, int party) {
  TupleSet out;
  out.k = set.k;
  for (const auto& t : set.tuples)
    if (!contains_party(t, party)) out.tuples.push_back(t);
  return out;
}

TupleSet tuple_concat(const TupleSet& a, const TupleSet& b) {
  PartySet base_a, base_b;
  for (const auto& t : a.tuples) base_a.insert(base_a.end(), t.begin(), t.end());
  for (const auto& t : b.tuples) base_b.insert(base_b.end(), t.begin(), t.end());
  base_a = make_party_set(std::move(base_a));
  base_b = make_party_set(std::move(base_b));
  for (int p : base_a)
    if (contains_party(base_b, p)) throw std::invalid_argument("tuple_concat: overlapping bases");
  TupleSet out;
  out.k = a.k + b.k;
  out.tuples.reserve(a.tuples.size() * b.tuples.size());
  for (const auto& ta : a.tuples)
    for (const auto& tb : b.tuples) {
      PartySet merged;
      merged.reserve(ta.size() + tb.size());
      std::merge(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(merged));
      out.tuples.push_back(std::move(merged));
    }
  return out;
}

std::pair<Transcript, int> run_honest(const ProtocolDef& proto, const Coins& coins) {
  Transcript tx;
  tx.msgs.resize(proto.r);
  for (int i = 0; i < proto.r; ++i) {
    tx.msgs[i].resize(proto.n);
    for (int p = 0; p < proto.n; ++p) {
      tx.msgs[i][p] = proto.next_message(p, i + 1, coins, tx);
#ifndef NDEBUG
      if (proto.next_message(p, i + 1, coins, tx) != tx.msgs[i][p])
        throw std::runtime_error("protocol next_message is not deterministic");
#endif
    }
  }
  const int out = proto.residual_output(full_party_set(proto.n), coins, tx, proto.r);
  return {tx, out};
}

int backup_value(const ProtocolDef& proto, const Coins& coins, const Transcript& tx,
                 const PartySet& tuple, int round) {
  if (tuple.empty()) throw std::invalid_argument("backup_value: empty party set");
  if (round < 0 || round > proto.r) throw std::invalid_argument("backup_value: round out of range");
  return proto.residual_output(tuple, coins, tx, round);
}

int backup_value(const ProtocolDef& proto, const Coins& coins, const PartySet& tuple, int round) {
  return backup_value(proto, coins, run_honest(proto, coins).first, tuple, round);
}

double avg_backup(const ProtocolDef& proto, const Coins& coins, const Transcript& tx,
                  const TupleSet& set, int round) {
  if (set.tuples.empty()) throw std::runtime_error("avg_backup: empty tuple set");
  std::int64_t sum = 0;
  for (const auto& t : set.tuples) sum += backup_value(proto, coins, tx, t, round);
  return static_cast<double>(sum) / static_cast<double>(set.tuples.size());
}

double avg_backup(const ProtocolDef& proto, const Coins& coins, const TupleSet& set, int round) {
  return avg_backup(proto, coins, run_honest(proto, coins).first, set, round);
}

BackupTrajectory backup_trajectory(const ProtocolDef& proto, const Coins& coins,
                                   const Transcript& tx, const TupleSet& set) {
  if (set.tuples.empty()) throw std::runtime_error("backup_trajectory: empty tuple set");
  BackupTrajectory traj;
  traj.num.assign(proto.r + 1, 0);
  traj.denom = static_cast<std::int64_t>(set.tuples.size());
  if (proto.backup_batch && proto.r <= 63) {
    std::vector<std::uint64_t> packed;
    proto.backup_batch(coins, tx, set.tuples, packed);
    for (const std::uint64_t w : packed)
      for (int i = 0; i <= proto.r; ++i) traj.num[i] += (w >> i) & 1u;
  } else {
    for (const auto& t : set.tuples)
      for (int i = 0; i <= proto.r; ++i) traj.num[i] += backup_value(proto, coins, tx, t, i);
  }
  return traj;
}

double TrajectoryView::b(int i) const {
  if (i < 0 || i > upto_) throw std::runtime_error("trajectory view: round not yet visible");
  return traj_->value(i);
}

std::int64_t TrajectoryView::num(int i) const {
  if (i < 0 || i > upto_) throw std::runtime_error("trajectory view: round not yet visible");
  return traj_->num[i];
}

const Message& TranscriptView::msg(int party, int round) const {
  if (round < 1 || round > upto_) throw std::runtime_error("transcript view: round not yet visible");
  return tx_->msgs[round - 1][party];
}

RunResult run_with_adversary(const ProtocolDef& proto, Adversary& adv, const PartySet& honest_set,
                             const Coins& coins, SeedStream& decision_stream) {
  if (honest_set.empty()) throw std::invalid_argument("run_with_adversary: no honest parties");
  for (int p : honest_set)
    if (p < 0 || p >= proto.n) throw std::invalid_argument("run_with_adversary: bad honest party");

  adv.begin_trial(decision_stream);

  const std::vector<TupleSet> monitored = adv.monitored();
  for (const auto& set : monitored)
    for (const auto& tuple : set.tuples)
      for (int p : tuple)
        if (contains_party(honest_set, p))
          throw std::runtime_error("run_with_adversary: monitored tuple contains an honest party");

  // fail-stop: corrupted parties play honestly until the abort, so the honest
  // transcript and the backup trajectories are known up front
  auto [tx, honest_run_out] = run_honest(proto, coins);
  std::vector<BackupTrajectory> trajectories;
  trajectories.reserve(monitored.size());
  for (const auto& set : monitored) trajectories.push_back(backup_trajectory(proto, coins, tx, set));

  RunResult res;
  res.abort_round = proto.r;
  for (int j = 1; j <= proto.r; ++j) {
    std::vector<TrajectoryView> views;
    views.reserve(trajectories.size());
    for (const auto& t : trajectories) views.emplace_back(&t, j);
    const TranscriptView tview(&tx, j);
    Decision d = adv.on_round(j, views, tview, decision_stream);
    if (d.kind == Decision::Kind::none) continue;
    res.aborted = true;
    res.decision_round = j;
    res.abort_round = d.kind == Decision::Kind::abort_before ? j - 1 : j;
    res.survivors = std::move(d.survivors);
    break;
  }
  if (!res.aborted) res.survivors = full_party_set(proto.n);

  if (res.survivors.empty()) throw std::runtime_error("run_with_adversary: empty survivor set");
  for (int p : res.survivors)
    if (p < 0 || p >= proto.n) throw std::runtime_error("run_with_adversary: bad survivor");
  for (int p : honest_set)
    if (!contains_party(res.survivors, p))
      throw std::runtime_error("run_with_adversary: honest party missing from survivors");

  res.honest_out = res.aborted
                       ? proto.residual_output(res.survivors, coins, tx, res.abort_round)
                       : honest_run_out;
  return res;
}

RunResult run_with_adversary(const ProtocolDef& proto, Adversary& adv, const PartySet& honest_set,
                             SeedStream& trial_stream) {
  SeedStream coin_stream = trial_stream.derive({0});
  SeedStream decision_stream = trial_stream.derive({1});
  const Coins coins = Coins::sample(proto.n, proto.coin_bits, coin_stream);
  return run_with_adversary(proto, adv, honest_set, coins, decision_stream);
}

std::string transcript_to_jsonl(const ProtocolDef& proto, const Coins& coins,
                                const RunResult& result) {
  static const char* hex = "0123456789abcdef";
  const auto [tx, out] = run_honest(proto, coins);
  (void)out;
  const int last = result.aborted ? result.decision_round : proto.r;
  const bool before_send = result.aborted && result.abort_round == result.decision_round - 1;

  std::string doc;
  for (int i = 1; i <= last; ++i) {
    nlohmann::json line;
    line["round"] = i;
    auto& msgs = line["msgs"] = nlohmann::json::object();
    auto& aborts = line["aborts"] = nlohmann::json::array();
    for (int p = 0; p < proto.n; ++p) {
      const bool alive = contains_party(result.survivors, p);
      if (i == last && result.aborted && !alive) aborts.push_back(p);
      if (i == last && before_send && !alive) continue;  // abort message replaces the round message
      std::string enc;
      for (unsigned char ch : tx.msgs[i - 1][p]) {
        enc += hex[ch >> 4];
        enc += hex[ch & 0xf];
      }
      msgs[std::to_string(p)] = enc;
    }
    doc += line.dump();
    doc += '\n';
  }
  return doc;
}

}  // namespace cfl

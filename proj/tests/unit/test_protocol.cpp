#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "cfl/protocol.hpp"
#include "cfl/protocols.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cfl;

namespace {

std::string repo_path(const std::string& rel) {
  const char* root = std::getenv("CFL_REPO_ROOT");
  return std::string(root ? root : ".") + "/" + rel;
}

struct NullAdversary : Adversary {
  std::string kind() const override { return "null"; }
  std::vector<TupleSet> monitored() const override { return {}; }
  Decision on_round(int, const std::vector<TrajectoryView>&, const TranscriptView&,
                    SeedStream&) override {
    return Decision::none();
  }
};

// aborts all parties but `keep` at round `when`, before or after sending
struct FixedAbort : Adversary {
  PartySet keep;
  int when = 1;
  bool after = false;
  std::string kind() const override { return "fixed-abort"; }
  std::vector<TupleSet> monitored() const override { return {}; }
  Decision on_round(int round, const std::vector<TrajectoryView>&, const TranscriptView&,
                    SeedStream&) override {
    if (round != when) return Decision::none();
    return after ? Decision::abort_after(keep) : Decision::abort_before(keep);
  }
};

}  // namespace

TEST_CASE("party set helpers") {
  CHECK(make_party_set({3, 1, 2, 1}) == PartySet{1, 2, 3});
  CHECK(full_party_set(4) == PartySet{0, 1, 2, 3});
  CHECK(contains_party({1, 4, 7}, 4));
  CHECK_FALSE(contains_party({1, 4, 7}, 5));
}

TEST_CASE("coins from_index maps bit j to party j / bits, coin j % bits") {
  Coins c = Coins::from_index(3, 4, (1ull << 0) | (1ull << 5) | (1ull << 11));
  CHECK(c.bit(0, 0));
  CHECK_FALSE(c.bit(0, 1));
  CHECK(c.bit(1, 1));
  CHECK(c.bit(2, 3));
  CHECK_FALSE(c.bit(2, 2));
  CHECK_THROWS_AS(Coins::from_index(8, 8, 0), std::invalid_argument);
}

TEST_CASE("coins sample is stream-deterministic") {
  SeedStream a(42), b(42), c(43);
  Coins x = Coins::sample(5, 130, a);
  Coins y = Coins::sample(5, 130, b);
  Coins z = Coins::sample(5, 130, c);
  CHECK(x.words == y.words);
  CHECK(x.words != z.words);
  CHECK(x.stride == 3);
  CHECK(x.words.size() == 15);
}

TEST_CASE("tuple algebra matches the set identities") {
  TupleSet s = choose_all({1, 2, 3}, 2);
  REQUIRE(s.tuples == std::vector<PartySet>{{1, 2}, {1, 3}, {2, 3}});
  CHECK(s.k == 2);

  TupleSet sel = tuple_select(s, 1);
  TupleSet rem = tuple_remove(s, 1);
  CHECK(sel.tuples == std::vector<PartySet>{{1, 2}, {1, 3}});
  CHECK(rem.tuples == std::vector<PartySet>{{2, 3}});

  TupleSet cat = tuple_concat(TupleSet{1, {{1}}}, TupleSet{1, {{2}, {3}}});
  CHECK(cat.k == 2);
  CHECK(cat.tuples == std::vector<PartySet>{{1, 2}, {1, 3}});
  CHECK_THROWS_AS(tuple_concat(TupleSet{1, {{1}}}, TupleSet{1, {{1}, {2}}}), std::invalid_argument);

  CHECK(choose_all({1, 2, 3}, 0).tuples == std::vector<PartySet>{{}});

  // partition property on a larger set
  TupleSet big = choose_all(full_party_set(6), 2);
  TupleSet s3 = tuple_select(big, 3);
  TupleSet r3 = tuple_remove(big, 3);
  CHECK(s3.size() + r3.size() == big.size());
  std::set<PartySet> all(big.tuples.begin(), big.tuples.end());
  for (const auto& t : s3.tuples) {
    CHECK(contains_party(t, 3));
    CHECK(all.count(t) == 1);
  }
  for (const auto& t : r3.tuples) {
    CHECK_FALSE(contains_party(t, 3));
    CHECK(all.count(t) == 1);
  }
}

TEST_CASE("run_honest: one-round parity on all-zero coins gives 0 and replays identically") {
  ProtocolDef parity = parity_coin(3, 1);
  Coins zero = Coins::from_index(3, parity.coin_bits, 0);
  auto [tx, out] = run_honest(parity, zero);
  CHECK(out == 0);
  REQUIRE(tx.rounds() == 1);
  CHECK(tx.msgs[0] == std::vector<Message>{"0", "0", "0"});

  SeedStream s(7);
  Coins c = Coins::sample(3, parity.coin_bits, s);
  auto [tx1, out1] = run_honest(parity, c);
  auto [tx2, out2] = run_honest(parity, c);
  CHECK(out1 == out2);
  CHECK(tx1.msgs == tx2.msgs);
}

TEST_CASE("run_honest: majority(3,3) is exactly unbiased over all coin assignments") {
  ProtocolDef maj = majority_coin(3, 3);
  const int total_bits = 3 * maj.coin_bits;
  REQUIRE(total_bits == 18);
  std::int64_t ones = 0;
  for (std::uint64_t idx = 0; idx < (1ull << total_bits); ++idx) {
    Coins c = Coins::from_index(3, maj.coin_bits, idx);
    ones += run_honest(maj, c).second;
  }
  CHECK(ones == (1ll << total_bits) / 2);
}

TEST_CASE("backup boundary: full party set at round r equals the honest output") {
  ProtocolDef maj = majority_coin(3, 3);
  for (std::uint64_t idx = 0; idx < (1ull << 18); ++idx) {
    Coins c = Coins::from_index(3, maj.coin_bits, idx);
    if (backup_value(maj, c, full_party_set(3), 3) != run_honest(maj, c).second) {
      REQUIRE(false);
    }
  }

  ProtocolDef par = parity_coin(4, 2);
  for (std::uint64_t idx = 0; idx < (1ull << 16); ++idx) {
    Coins c = Coins::from_index(4, par.coin_bits, idx);
    if (backup_value(par, c, full_party_set(4), 2) != run_honest(par, c).second) {
      REQUIRE(false);
    }
  }
}

TEST_CASE("backup at round 0 is the tuple's private completion") {
  ProtocolDef maj = majority_coin(3, 3);
  // party 1's round-0 backup is the majority of its own residual bits and is
  // unchanged by every other party's coins
  std::int64_t ones = 0;
  for (std::uint64_t own = 0; own < 64; ++own) {
    const int v = backup_value(maj, Coins::from_index(3, 6, own << 6), {1}, 0);
    ones += v;
    for (std::uint64_t other = 1; other < 64; ++other) {
      const std::uint64_t idx = (own << 6) | other | (other << 12);
      if (backup_value(maj, Coins::from_index(3, 6, idx), {1}, 0) != v) REQUIRE(false);
    }
  }
  CHECK(ones == 32);

  CHECK_THROWS_AS(backup_value(maj, Coins::from_index(3, 6, 0), {}, 0), std::invalid_argument);
  CHECK_THROWS_AS(backup_value(maj, Coins::from_index(3, 6, 0), {1}, 4), std::invalid_argument);
  CHECK_THROWS_AS(backup_value(maj, Coins::from_index(3, 6, 0), {1}, -1), std::invalid_argument);
}

TEST_CASE("avg_backup averages tuple backups") {
  ProtocolDef par = parity_coin(4, 1);
  // residual bits (bit 1 per party) set to 0,1,1,0
  Coins c = Coins::from_index(4, 2, (1ull << 3) | (1ull << 5));
  TupleSet singles{1, {{0}, {1}, {2}, {3}}};
  CHECK(avg_backup(par, c, singles, 0) == doctest::Approx(0.5));
  CHECK(avg_backup(par, c, TupleSet{1, {{1}}}, 0) == backup_value(par, c, {1}, 0));
  CHECK(avg_backup(par, c, TupleSet{2, {{1, 2}}}, 0) == 0.0);  // XOR of equal bits
  CHECK_THROWS_AS(avg_backup(par, c, TupleSet{}, 0), std::runtime_error);

  BackupTrajectory traj = backup_trajectory(par, c, run_honest(par, c).first, singles);
  CHECK(traj.denom == 4);
  CHECK(traj.rounds() == 1);
  CHECK(traj.value(0) == doctest::Approx(0.5));
}

TEST_CASE("null adversary reproduces the honest run") {
  ProtocolDef maj = majority_coin(5, 3);
  NullAdversary adv;
  for (int t = 0; t < 200; ++t) {
    SeedStream trial = SeedStream(991).derive({(std::uint64_t)t});
    SeedStream coin_stream = trial.derive({0});
    Coins c = Coins::sample(5, maj.coin_bits, coin_stream);
    SeedStream decisions = trial.derive({1});
    RunResult res = run_with_adversary(maj, adv, {0, 1}, c, decisions);
    CHECK_FALSE(res.aborted);
    CHECK(res.abort_round == 3);
    CHECK(res.decision_round == 0);
    CHECK(res.survivors == full_party_set(5));
    CHECK(res.honest_out == run_honest(maj, c).second);

    // outer overload derives the same coins from path {0}
    SeedStream trial2 = SeedStream(991).derive({(std::uint64_t)t});
    RunResult res2 = run_with_adversary(maj, adv, {0, 1}, trial2);
    CHECK(res2.honest_out == res.honest_out);
  }
}

TEST_CASE("abort before round 1 leaves the survivor its round-0 backup") {
  ProtocolDef maj = majority_coin(5, 3);
  FixedAbort adv;
  adv.keep = {2};
  adv.when = 1;
  SeedStream master(17);
  for (int t = 0; t < 100; ++t) {
    SeedStream cs = master.derive({(std::uint64_t)t});
    Coins c = Coins::sample(5, maj.coin_bits, cs);
    SeedStream ds = master.derive({(std::uint64_t)t, 99});
    RunResult res = run_with_adversary(maj, adv, {2}, c, ds);
    CHECK(res.aborted);
    CHECK(res.abort_round == 0);
    CHECK(res.decision_round == 1);
    CHECK(res.honest_out == backup_value(maj, c, {2}, 0));
  }
}

TEST_CASE("abort after round i delivers Bckp(U, i) on the scripted oracle") {
  ProtocolDef tiny = scripted(repo_path("configs/scripted_tiny.json"));
  REQUIRE(tiny.n == 3);
  REQUIRE(tiny.r == 3);
  FixedAbort adv;
  adv.keep = {1};
  adv.after = true;
  SeedStream unused(0);
  for (int when = 1; when <= 2; ++when) {
    adv.when = when;
    for (std::uint64_t idx = 0; idx < (1ull << 12); ++idx) {
      Coins c = Coins::from_index(3, tiny.coin_bits, idx);
      SeedStream ds = unused.derive({idx});
      RunResult res = run_with_adversary(tiny, adv, {1}, c, ds);
      if (res.abort_round != when) REQUIRE(false);
      if (res.honest_out != backup_value(tiny, c, {1}, when)) REQUIRE(false);
    }
  }
}

TEST_CASE("rushing: round-i views expose honest round-i messages and nothing later") {
  ProtocolDef maj = majority_coin(3, 3);

  struct Probe : Adversary {
    int fail = 0;
    int saw_round = 0;
    std::string kind() const override { return "probe"; }
    std::vector<TupleSet> monitored() const override { return {TupleSet{1, {{1}, {2}}}}; }
    Decision on_round(int round, const std::vector<TrajectoryView>& trajs,
                      const TranscriptView& tx, SeedStream&) override {
      saw_round = round;
      if (trajs.size() != 1) ++fail;
      const TrajectoryView& t = trajs[0];
      (void)t.b(round);  // current round visible
      (void)tx.msg(0, round);
      if (round < 3) {
        try {
          (void)tx.msg(0, round + 1);
          ++fail;
        } catch (const std::runtime_error&) {
        }
        try {
          (void)t.b(round + 1);
          ++fail;
        } catch (const std::runtime_error&) {
        }
      }
      // abort exactly when the honest round-1 message reads 1
      if (round == 1 && tx.msg(0, 1) == "1") return Decision::abort_before({0});
      return Decision::none();
    }
  };

  Probe adv;
  int aborts = 0;
  for (int t = 0; t < 100; ++t) {
    SeedStream cs = SeedStream(333).derive({(std::uint64_t)t});
    Coins c = Coins::sample(3, maj.coin_bits, cs);
    SeedStream ds = SeedStream(334).derive({(std::uint64_t)t});
    RunResult res = run_with_adversary(maj, adv, {0}, c, ds);
    CHECK(adv.fail == 0);
    const bool bit = c.bit(0, 0);
    CHECK(res.aborted == bit);
    aborts += res.aborted;
    if (!res.aborted) CHECK(adv.saw_round == 3);
  }
  CHECK(aborts > 20);
  CHECK(aborts < 80);
}

TEST_CASE("monitored tuples may not contain honest parties") {
  ProtocolDef maj = majority_coin(3, 3);
  struct BadMonitor : NullAdversary {
    std::vector<TupleSet> monitored() const override { return {TupleSet{1, {{0}}}}; }
  };
  BadMonitor adv;
  SeedStream s(1);
  CHECK_THROWS_AS(run_with_adversary(maj, adv, {0}, s), std::runtime_error);
}

TEST_CASE("survivors must cover the honest set") {
  ProtocolDef maj = majority_coin(3, 3);
  FixedAbort adv;
  adv.keep = {1};  // honest party 0 missing
  SeedStream s(2);
  CHECK_THROWS_AS(run_with_adversary(maj, adv, {0}, s), std::runtime_error);
}

TEST_CASE("transcript dump is one JSON line per round with abort markers") {
  ProtocolDef maj = majority_coin(3, 3);
  SeedStream cs(5);
  Coins c = Coins::sample(3, maj.coin_bits, cs);

  NullAdversary null;
  SeedStream d1(6);
  std::string full = transcript_to_jsonl(maj, c, run_with_adversary(maj, null, {0}, c, d1));
  std::vector<nlohmann::json> lines;
  for (std::size_t pos = 0; pos < full.size();) {
    std::size_t nl = full.find('\n', pos);
    lines.push_back(nlohmann::json::parse(full.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  REQUIRE(lines.size() == 3);
  CHECK(lines[0]["round"] == 1);
  CHECK(lines[0]["msgs"].size() == 3);
  CHECK(lines[0]["aborts"].empty());
  // single-byte messages '0'/'1' encode as 30/31
  std::string enc = lines[1]["msgs"]["1"].get<std::string>();
  CHECK((enc == "30" || enc == "31"));
  CHECK((enc == "31") == c.bit(1, 1));

  FixedAbort ab;
  ab.keep = {0};
  ab.when = 2;
  SeedStream d2(7);
  std::string cut = transcript_to_jsonl(maj, c, run_with_adversary(maj, ab, {0}, c, d2));
  lines.clear();
  for (std::size_t pos = 0; pos < cut.size();) {
    std::size_t nl = cut.find('\n', pos);
    lines.push_back(nlohmann::json::parse(cut.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  REQUIRE(lines.size() == 2);
  CHECK(lines[1]["aborts"] == nlohmann::json::array({1, 2}));
  CHECK(lines[1]["msgs"].size() == 1);  // before-send: only the honest message went out
}

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cfl/rng.hpp"

namespace cfl {

using PartySet = std::vector<int>;  // sorted, unique
using Message = std::string;

PartySet make_party_set(std::vector<int> parties);
PartySet full_party_set(int n);
bool contains_party(const PartySet& set, int party);

// pre-sampled randomness for a full execution, whole 64-bit words per party
struct Coins {
  int n = 0;
  int bits_per_party = 0;
  int stride = 0;  // words per party
  std::vector<std::uint64_t> words;

  static Coins sample(int n, int bits_per_party, SeedStream& stream);
  // deterministic assignment for exhaustive enumeration; bit j of index is
  // party j / bits_per_party, coin index j % bits_per_party (n*bits <= 63)
  static Coins from_index(int n, int bits_per_party, std::uint64_t index);

  bool bit(int party, int idx) const {
    return (words[static_cast<std::size_t>(party) * stride + idx / 64] >> (idx % 64)) & 1u;
  }
  std::uint64_t low_word(int party) const { return words[static_cast<std::size_t>(party) * stride]; }
};

struct Transcript {
  std::vector<std::vector<Message>> msgs;  // msgs[i][p]: round i+1 message of party p
  int rounds() const { return static_cast<int>(msgs.size()); }
};

struct ProtocolDef {
  std::string name;
  int n = 0;
  int r = 0;
  int coin_bits = 0;  // per party
  std::function<Message(int party, int round, const Coins&, const Transcript&)> next_message;
  std::function<int(const PartySet& survivors, const Coins&, const Transcript&, int prefix_rounds)>
      residual_output;
  // optional fast path: out[t] holds Bckp(tuples[t], i) in bit i, for i = 0..r (needs r <= 63)
  std::function<void(const Coins&, const Transcript&, const std::vector<PartySet>& tuples,
                     std::vector<std::uint64_t>& out)>
      backup_batch;
};

struct TupleSet {
  int k = 0;
  std::vector<PartySet> tuples;
  std::size_t size() const { return tuples.size(); }
};

TupleSet choose_all(const PartySet& base, int k);
TupleSet tuple_select(const TupleSet& set, int party);
TupleSet tuple_remove(const TupleSet& set, int party);
TupleSet tuple_concat(const TupleSet& a, const TupleSet& b);

struct BackupTrajectory {
  std::vector<std::int64_t> num;  // index i: sum of Bckp(U, i) over tuples
  std::int64_t denom = 0;
  double value(int i) const { return static_cast<double>(num[i]) / static_cast<double>(denom); }
  int rounds() const { return static_cast<int>(num.size()) - 1; }
};

std::pair<Transcript, int> run_honest(const ProtocolDef& proto, const Coins& coins);

int backup_value(const ProtocolDef& proto, const Coins& coins, const PartySet& tuple, int round);
int backup_value(const ProtocolDef& proto, const Coins& coins, const Transcript& tx,
                 const PartySet& tuple, int round);
double avg_backup(const ProtocolDef& proto, const Coins& coins, const TupleSet& set, int round);
double avg_backup(const ProtocolDef& proto, const Coins& coins, const Transcript& tx,
                  const TupleSet& set, int round);
BackupTrajectory backup_trajectory(const ProtocolDef& proto, const Coins& coins,
                                   const Transcript& tx, const TupleSet& set);

// adversary-facing read views; both refuse indices the rushing order hides
class TrajectoryView {
 public:
  TrajectoryView(const BackupTrajectory* traj, int upto) : traj_(traj), upto_(upto) {}
  double b(int i) const;
  std::int64_t num(int i) const;  // exact numerator over denom()
  std::int64_t denom() const { return traj_->denom; }
  int upto() const { return upto_; }

 private:
  const BackupTrajectory* traj_;
  int upto_;
};

class TranscriptView {
 public:
  TranscriptView(const Transcript* tx, int upto) : tx_(tx), upto_(upto) {}
  const Message& msg(int party, int round) const;
  int upto() const { return upto_; }

 private:
  const Transcript* tx_;
  int upto_;
};

struct Decision {
  enum class Kind { none, abort_before, abort_after };
  Kind kind = Kind::none;
  PartySet survivors;

  static Decision none() { return {}; }
  static Decision abort_before(PartySet s) { return {Kind::abort_before, std::move(s)}; }
  static Decision abort_after(PartySet s) { return {Kind::abort_after, std::move(s)}; }
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string kind() const = 0;
  // tuple sets whose backup trajectories the engine maintains; must avoid honest parties
  virtual std::vector<TupleSet> monitored() const = 0;
  virtual void begin_trial(SeedStream&) {}
  virtual Decision on_round(int round, const std::vector<TrajectoryView>& trajectories,
                            const TranscriptView& transcript, SeedStream& stream) = 0;
};

struct RunResult {
  int honest_out = 0;
  int abort_round = 0;  // transcript prefix the survivors completed from; r if no abort
  PartySet survivors;
  bool aborted = false;
  int decision_round = 0;  // round of the abort decision; 0 if none
};

RunResult run_with_adversary(const ProtocolDef& proto, Adversary& adv, const PartySet& honest_set,
                             SeedStream& trial_stream);
RunResult run_with_adversary(const ProtocolDef& proto, Adversary& adv, const PartySet& honest_set,
                             const Coins& coins, SeedStream& decision_stream);

// one JSON line per delivered round ({"round":i,"msgs":{party:hex},"aborts":[...]});
// a before-send abort drops the aborting parties' final-round messages
std::string transcript_to_jsonl(const ProtocolDef& proto, const Coins& coins,
                                const RunResult& result);

}  // namespace cfl

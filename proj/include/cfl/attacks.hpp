#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cfl/game_table.hpp"
#include "cfl/protocol.hpp"
#include "cfl/rng.hpp"

namespace cfl {

// Fail-stop adversary driven by the game-value fold over the monitored set's
// backup trajectory. At round j it freezes X at level j and fires on a
// deviation of B_{j-1} (withholding round j) or B_j (after delivering round
// j); round 1 instead compares B_1 against 1/2. The surviving tuple is drawn
// uniformly from the tuples of s_prime containing h.
class MartAdversary : public Adversary {
 public:
  MartAdversary(TupleSet s, TupleSet s_prime, int z, int h,
                std::shared_ptr<const GameValueTable> table, double threshold_override);

  std::string kind() const override { return "mart"; }
  std::vector<TupleSet> monitored() const override { return {s_}; }
  void begin_trial(SeedStream&) override;
  Decision on_round(int round, const std::vector<TrajectoryView>& trajectories,
                    const TranscriptView& transcript, SeedStream& stream) override;

  // level of the last fold value frozen by a fired trigger, or r when the
  // trial ran to completion; the matching game value, for the expectation
  // preservation checks
  double x_at_decision() const { return x_at_decision_; }

 private:
  TupleSet s_;
  std::vector<PartySet> survivors_;  // tuples of s_prime containing h
  double sign_ = 1;
  std::shared_ptr<const GameValueTable> table_;
  double threshold_ = 0;

  std::int32_t x_idx_ = 0;
  std::int64_t sos_idx_ = 0;
  int g_ = 1;
  double x_at_decision_ = 0.5;
};

// Per round adds one Laplace(gamma / 4 log2 r) draw to the backup gap between
// the two leave-h-out sets and aborts everyone but a uniform tuple of
// s_z containing h before the round's messages go out.
class DpAdversary : public Adversary {
 public:
  DpAdversary(TupleSet s1, TupleSet s0, int z, int h, double gamma, int r);

  std::string kind() const override { return "dp"; }
  std::vector<TupleSet> monitored() const override { return {s1_leave_, s0_leave_}; }
  Decision on_round(int round, const std::vector<TrajectoryView>& trajectories,
                    const TranscriptView& transcript, SeedStream& stream) override;

  double lambda() const { return lambda_; }

 private:
  TupleSet s1_leave_;
  TupleSet s0_leave_;
  std::vector<PartySet> survivors_;  // tuples of s_z containing h
  double gamma_ = 0;
  double lambda_ = 0;
};

// Samples, once at construction, half-size subsets of the two sets avoiding h
// and fires when their backup gap crosses 3*gamma/4; the survivor is the
// unique tuple of s_z containing h.
class SingAdversary : public Adversary {
 public:
  SingAdversary(TupleSet s1, TupleSet s0, int z, int h, double gamma, SeedStream& stream);

  std::string kind() const override { return "sing"; }
  std::vector<TupleSet> monitored() const override { return {e1_, e0_}; }
  Decision on_round(int round, const std::vector<TrajectoryView>& trajectories,
                    const TranscriptView& transcript, SeedStream& stream) override;

  const TupleSet& e1() const { return e1_; }
  const TupleSet& e0() const { return e0_; }

 private:
  TupleSet e1_;
  TupleSet e0_;
  PartySet survivor_;
  double gamma_ = 0;
};

// Exhaustive transcript-conditioned baseline: enumerates the full coin space,
// tracks the assignments consistent with the observed messages, and aborts
// before round i once E[out | transcript] exceeds the honest side's expected
// fallback E[Bckp({0}, i-1) | transcript] by the threshold. Assumes party 0
// is the honest party; biases its output toward zero.
class Ci93Adversary : public Adversary {
 public:
  explicit Ci93Adversary(const ProtocolDef& proto, double threshold_override = -1);

  std::string kind() const override { return "ci93"; }
  std::vector<TupleSet> monitored() const override { return {}; }
  void begin_trial(SeedStream&) override;
  Decision on_round(int round, const std::vector<TrajectoryView>& trajectories,
                    const TranscriptView& transcript, SeedStream& stream) override;

 private:
  const ProtocolDef* proto_;
  double threshold_ = 0;
  std::vector<std::uint8_t> out_;          // per coin index
  std::vector<std::uint64_t> z_bits_;      // bit i: Bckp({0}, i) for that index
  std::vector<std::uint32_t> alive_;
  Transcript seen_;
};

std::unique_ptr<MartAdversary> mart_attack(const TupleSet& s, const TupleSet& s_prime, int z,
                                           int h, std::shared_ptr<const GameValueTable> table,
                                           double threshold_override = -1);
std::unique_ptr<DpAdversary> dp_attack(const TupleSet& s1, const TupleSet& s0, int z, int h,
                                       double gamma, int r);
std::unique_ptr<SingAdversary> sing_attack(const TupleSet& s1, const TupleSet& s0, int z, int h,
                                           double gamma, SeedStream& stream);
std::unique_ptr<Ci93Adversary> ci93_attack(const ProtocolDef& proto,
                                           double threshold_override = -1);

// frequency, over honest executions with fresh half-subsets each trial, of
// either half straying from its full set's trajectory by alpha/(8 sqrt n)
// at any round, against the 4r exp(-alpha^2/192) tail bound
struct HalfSampleStats {
  int trials = 0;
  int hits = 0;
  double freq = 0;
  double bound = 0;
};

HalfSampleStats half_sample_event_stats(const ProtocolDef& proto, const TupleSet& s1,
                                        const TupleSet& s0, int h, double alpha, int trials,
                                        SeedStream& stream);

}  // namespace cfl

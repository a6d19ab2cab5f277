#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfl/protocol.hpp"
#include "cfl/rng.hpp"

namespace cfl {

// jump trigger: passes no_jump through while the game value still hugs either
// trajectory point (within 1/(64 sqrt r)), clears to 0 forever otherwise
int trigger_g(double x, double y, double y_prime, int no_jump, int r);

// context of a level-i game-value lookup, everything held as exact grid
// indices: b, b_prev are trajectory numerators over the table's b_den,
// x_idx counts steps of 1/(200r), sos_idx counts steps of 1/(200r)^2
struct ContextKey {
  std::int32_t b_num = 0;
  std::int32_t b_prev_num = 0;
  std::int32_t x_idx = 0;
  std::int64_t sos_idx = 0;
  std::uint8_t g = 0;
  bool operator==(const ContextKey&) const = default;
};

struct ContextKeyHash {
  std::size_t operator()(const ContextKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    auto fold = [&h](std::uint64_t v) { h = (h ^ v) * 1099511628211ull; };
    fold(static_cast<std::uint32_t>(k.b_num));
    fold(static_cast<std::uint32_t>(k.b_prev_num));
    fold(static_cast<std::uint32_t>(k.x_idx));
    fold(static_cast<std::uint64_t>(k.sos_idx));
    fold(k.g);
    return static_cast<std::size_t>(h);
  }
};

struct MuEntry {
  std::int32_t mu_idx = 0;   // the game value as an x-grid index
  std::int64_t p_c = 0;      // samples in this context with out = 1
  std::int64_t q_c = 0;      // samples in this context
};

enum class BuildMode { automatic, sampled, exact };

struct GameValueTable {
  int r = 0;
  int x_den = 0;           // 200r, the x grid denominator
  std::int64_t b_den = 0;  // tuple count of the set the table was built on
  bool exact = false;
  std::int64_t budget = 0;  // per-level sample count in sampled mode
  std::vector<std::unordered_map<ContextKey, MuEntry, ContextKeyHash>> mu;  // level i at mu[i-1]

  double delta() const { return 1.0 / x_den; }
  // unseen contexts return the conditioning value unchanged
  std::int32_t lookup(int level, const ContextKey& key) const;
};

// game-value trace along one trajectory; index i holds the state after round i
struct XTrace {
  std::vector<std::int32_t> x_idx;
  std::vector<std::int64_t> sos_idx;
  std::vector<int> g;
  std::vector<double> x;
  int rounds() const { return static_cast<int>(x.size()) - 1; }
};

// estimate the per-context conditional output expectations level by level,
// replaying each level's samples through the levels already built; with mode
// automatic, coin spaces of at most 2^20 assignments are enumerated exactly
GameValueTable build_x(const ProtocolDef& proto, const TupleSet& set, std::int64_t n_samples,
                       SeedStream& stream, BuildMode mode = BuildMode::automatic);

XTrace eval_x(const GameValueTable& table, const BackupTrajectory& traj);

void save_game_table(const GameValueTable& table, const std::string& path);
GameValueTable load_game_table(const std::string& path);

}  // namespace cfl

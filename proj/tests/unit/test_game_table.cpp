#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "cfl/game_table.hpp"
#include "cfl/protocol.hpp"
#include "cfl/protocols.hpp"
#include "doctest.h"

using namespace cfl;

namespace {

std::string repo_path(const std::string& rel) {
  const char* root = std::getenv("CFL_REPO_ROOT");
  return std::string(root ? root : ".") + "/" + rel;
}

using Row = std::tuple<std::int32_t, std::int32_t, std::int32_t, std::int64_t, int, std::int32_t,
                       std::int64_t, std::int64_t>;  // b, b', x, sos, g, mu, q, p

std::vector<Row> sorted_level(const GameValueTable& t, int level) {
  std::vector<Row> rows;
  for (const auto& [k, e] : t.mu[level - 1])
    rows.emplace_back(k.b_num, k.b_prev_num, k.x_idx, k.sos_idx, int(k.g), e.mu_idx, e.q_c, e.p_c);
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

TEST_CASE("trigger passes no_jump through near either trajectory point") {
  // r=25 puts the nearness cutoff at 1/320
  CHECK(trigger_g(0.5, 0.5, 0.9, 1, 25) == 1);
  CHECK(trigger_g(0.5, 0.9, 0.9, 1, 25) == 0);
  CHECK(trigger_g(0.5, 0.5, 0.9, 0, 25) == 0);
  CHECK(trigger_g(0.5, 0.9, 0.5, 1, 25) == 1);
  // boundary is strict: exactly 1/320 away is a jump
  CHECK(trigger_g(0.5, 0.5 + 1.0 / 320, 0.9, 1, 25) == 0);
  CHECK(trigger_g(0.5, 0.5 + 1.0 / 320 - 1e-12, 0.9, 1, 25) == 1);
  CHECK_THROWS_AS(trigger_g(0.5, 0.5, 0.5, 1, 0), std::invalid_argument);
}

TEST_CASE("exact game table on the tiny scripted protocol matches the enumeration oracle") {
  ProtocolDef tiny = scripted(repo_path("configs/scripted_tiny.json"));
  TupleSet set{1, {{0}, {1}}};
  SeedStream stream(1);
  GameValueTable t = build_x(tiny, set, 1, stream);

  CHECK(t.exact);
  CHECK(t.r == 3);
  CHECK(t.x_den == 600);
  CHECK(t.b_den == 2);
  REQUIRE(t.mu.size() == 3);
  CHECK(t.mu[0].size() == 5);
  CHECK(t.mu[1].size() == 9);
  CHECK(t.mu[2].size() == 14);

  // every context: counts cover the full coin space and the value is the
  // floored conditional expectation
  for (int level = 1; level <= 3; ++level) {
    std::int64_t total = 0;
    for (const auto& [k, e] : t.mu[level - 1]) {
      total += e.q_c;
      CHECK(e.mu_idx == (e.p_c * 600) / e.q_c);
      CHECK(e.mu_idx >= 0);
      CHECK(e.mu_idx <= 600);
    }
    CHECK(total == 4096);
  }

  const std::vector<Row> level1 = {
      {0, 0, 300, 0, 1, 150, 512, 128}, {0, 2, 300, 0, 1, 450, 512, 384},
      {1, 1, 300, 0, 1, 300, 2048, 1024}, {2, 0, 300, 0, 1, 450, 512, 384},
      {2, 2, 300, 0, 1, 150, 512, 128}};
  CHECK(sorted_level(t, 1) == level1);

  const std::vector<Row> level2_head = {{0, 0, 150, 22500, 0, 150, 512, 128},
                                        {0, 1, 300, 0, 1, 0, 512, 0},
                                        {0, 2, 150, 22500, 0, 0, 256, 0},
                                        {0, 2, 450, 22500, 0, 300, 256, 128},
                                        {1, 1, 300, 0, 1, 300, 1024, 512}};
  auto l2 = sorted_level(t, 2);
  l2.resize(5);
  CHECK(l2 == level2_head);

  const std::vector<Row> level3_head = {{0, 0, 0, 45000, 0, 0, 256, 0},
                                        {0, 0, 0, 90000, 1, 0, 512, 0},
                                        {0, 0, 150, 22500, 0, 0, 384, 0},
                                        {0, 0, 300, 45000, 0, 0, 128, 0},
                                        {0, 1, 300, 0, 1, 0, 512, 0}};
  auto l3 = sorted_level(t, 3);
  l3.resize(5);
  CHECK(l3 == level3_head);
}

TEST_CASE("constant-output protocol collapses every game value to the mean") {
  ProtocolDef bad = scripted(repo_path("configs/scripted_bad.json"));
  TupleSet set{1, {{0}, {1}}};
  SeedStream stream(2);
  GameValueTable t = build_x(bad, set, 1, stream);
  CHECK(t.exact);
  for (const auto& m : t.mu) {
    CHECK_FALSE(m.empty());
    for (const auto& [k, e] : m) {
      CHECK(e.mu_idx == t.x_den);  // round_down(E[out]=1, delta) = 1
      CHECK(e.p_c == e.q_c);
    }
  }
}

TEST_CASE("empty table evaluates to the constant half trace") {
  GameValueTable t;
  t.r = 3;
  t.x_den = 600;
  t.b_den = 2;
  t.mu.resize(3);

  BackupTrajectory traj;
  traj.denom = 2;
  traj.num = {1, 1, 1, 1};
  XTrace trace = eval_x(t, traj);
  CHECK(trace.x == std::vector<double>{0.5, 0.5, 0.5, 0.5});
  CHECK(trace.sos_idx == std::vector<std::int64_t>{0, 0, 0, 0});
  CHECK(trace.g == std::vector<int>{1, 1, 1, 1});

  // unseen contexts pass the conditioning value through
  CHECK(t.lookup(1, ContextKey{2, 0, 450, 0, 1}) == 450);
  CHECK_THROWS_AS(t.lookup(0, ContextKey{}), std::invalid_argument);
  CHECK_THROWS_AS(t.lookup(4, ContextKey{}), std::invalid_argument);

  BackupTrajectory wrong;
  wrong.denom = 3;
  wrong.num = {1, 1, 1, 1};
  CHECK_THROWS_AS(eval_x(t, wrong), std::invalid_argument);
  BackupTrajectory short_traj;
  short_traj.denom = 2;
  short_traj.num = {1, 1};
  CHECK_THROWS_AS(eval_x(t, short_traj), std::invalid_argument);
}

TEST_CASE("a trajectory jump clears the trigger for good") {
  GameValueTable t;
  t.r = 3;
  t.x_den = 600;
  t.b_den = 2;
  t.mu.resize(3);

  BackupTrajectory traj;
  traj.denom = 2;
  traj.num = {1, 2, 0, 0};  // B = 1/2, 1, 0, 0 against a constant-half trace
  XTrace trace = eval_x(t, traj);
  CHECK(trace.g == std::vector<int>{1, 1, 0, 0});
}

TEST_CASE("evaluated traces stay on the grids") {
  ProtocolDef tiny = scripted(repo_path("configs/scripted_tiny.json"));
  TupleSet set{1, {{0}, {1}}};
  SeedStream stream(3);
  GameValueTable t = build_x(tiny, set, 1, stream);
  for (std::uint64_t idx = 0; idx < (1ull << 12); ++idx) {
    Coins c = Coins::from_index(3, 4, idx);
    auto [tx, out] = run_honest(tiny, c);
    (void)out;
    XTrace trace = eval_x(t, backup_trajectory(tiny, c, tx, set));
    if (trace.x_idx[0] != 300) REQUIRE(false);
    if (trace.g[0] != 1) REQUIRE(false);
    for (int i = 1; i <= 3; ++i) {
      if (trace.x_idx[i] < 0 || trace.x_idx[i] > 600) REQUIRE(false);
      if (trace.x[i] != trace.x_idx[i] / 600.0) REQUIRE(false);
      const std::int64_t step = trace.x_idx[i] - trace.x_idx[i - 1];
      if (trace.sos_idx[i] - trace.sos_idx[i - 1] != step * step) REQUIRE(false);
      if (trace.g[i - 1] == 0 && trace.g[i] != 0) REQUIRE(false);
    }
  }
}

TEST_CASE("sampled tables converge to the exact conditionals along their own fold") {
  ProtocolDef tiny = scripted(repo_path("configs/scripted_tiny.json"));
  TupleSet set{1, {{0}, {1}}};
  SeedStream stream(20260816);
  const std::int64_t n_samples = 50000;
  GameValueTable t = build_x(tiny, set, n_samples, stream, BuildMode::sampled);
  CHECK_FALSE(t.exact);
  CHECK(t.budget == n_samples);

  // exact per-context occupancy and conditional mean, folding the full coin
  // space through the sampled table itself
  std::vector<std::map<std::array<std::int64_t, 5>, std::pair<std::int64_t, std::int64_t>>> oracle(
      3);
  for (std::uint64_t idx = 0; idx < (1ull << 12); ++idx) {
    Coins c = Coins::from_index(3, 4, idx);
    auto [tx, out] = run_honest(tiny, c);
    BackupTrajectory traj = backup_trajectory(tiny, c, tx, set);
    XTrace trace = eval_x(t, traj);
    for (int level = 1; level <= 3; ++level) {
      std::array<std::int64_t, 5> key{traj.num[level], traj.num[level - 1],
                                      trace.x_idx[level - 1], trace.sos_idx[level - 1],
                                      trace.g[level - 1]};
      auto& cell = oracle[level - 1][key];
      cell.first += out;
      cell.second += 1;
    }
  }

  int checked = 0;
  for (int level = 1; level <= 3; ++level) {
    for (const auto& [k, e] : t.mu[level - 1]) {
      if (e.q_c < 100) continue;
      const std::array<std::int64_t, 5> key{k.b_num, k.b_prev_num, k.x_idx, k.sos_idx, k.g};
      auto it = oracle[level - 1].find(key);
      REQUIRE(it != oracle[level - 1].end());
      const double exact_cond =
          double(it->second.first) / double(it->second.second);
      const double sampled = double(e.mu_idx) / t.x_den;
      const double tol = 1.0 / 600 + 3 * std::sqrt(0.25 / double(e.q_c));
      CHECK(std::abs(sampled - exact_cond) <= tol);
      ++checked;
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("game tables survive a save and load round trip") {
  ProtocolDef tiny = scripted(repo_path("configs/scripted_tiny.json"));
  TupleSet set{1, {{0}, {1}}};
  SeedStream stream(7);
  GameValueTable t = build_x(tiny, set, 500, stream, BuildMode::sampled);

  const std::string path = "/tmp/cfl_table_roundtrip.json";
  save_game_table(t, path);
  GameValueTable back = load_game_table(path);
  CHECK(back.r == t.r);
  CHECK(back.x_den == t.x_den);
  CHECK(back.b_den == t.b_den);
  CHECK(back.exact == t.exact);
  CHECK(back.budget == t.budget);
  REQUIRE(back.mu.size() == t.mu.size());
  for (std::size_t i = 0; i < t.mu.size(); ++i) {
    CHECK(back.mu[i].size() == t.mu[i].size());
    for (const auto& [k, e] : t.mu[i]) {
      auto it = back.mu[i].find(k);
      REQUIRE(it != back.mu[i].end());
      CHECK(it->second.mu_idx == e.mu_idx);
      CHECK(it->second.p_c == e.p_c);
      CHECK(it->second.q_c == e.q_c);
    }
  }

  CHECK_THROWS_AS(load_game_table("/tmp/definitely_missing_table.json"), std::runtime_error);
  {
    std::ofstream bad("/tmp/cfl_table_bad.json");
    bad << "{\"schema\":\"game-table-v1\",\"r\":2,\"x_den\":600}";
  }
  CHECK_THROWS_AS(load_game_table("/tmp/cfl_table_bad.json"), std::runtime_error);
}

TEST_CASE("build_x rejects bad inputs") {
  ProtocolDef tiny = scripted(repo_path("configs/scripted_tiny.json"));
  SeedStream stream(9);
  CHECK_THROWS_AS(build_x(tiny, TupleSet{}, 10, stream), std::invalid_argument);
  TupleSet set{1, {{0}}};
  CHECK_THROWS_AS(build_x(tiny, set, 0, stream), std::invalid_argument);
  ProtocolDef big = majority_coin(16, 9);  // 16*18 coin bits, far beyond enumeration
  CHECK_THROWS_AS(build_x(big, set, 10, stream, BuildMode::exact), std::invalid_argument);
}

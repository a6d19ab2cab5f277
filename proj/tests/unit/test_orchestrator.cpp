#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "cfl/nugget.hpp"
#include "cfl/orchestrator.hpp"
#include "cfl/protocols.hpp"
#include "cfl/rng.hpp"
#include "doctest.h"

using namespace cfl;

namespace {

std::string repo_path(const std::string& rel) {
  const char* root = std::getenv("CFL_REPO_ROOT");
  REQUIRE(root != nullptr);
  return std::string(root) + "/" + rel;
}

std::int64_t hist_total(const AttackResult& res) {
  std::int64_t total = 0;
  for (std::int64_t c : res.abort_round_hist) total += c;
  return total;
}

}  // namespace

TEST_CASE("main attack takes the fold route on majority and shifts the coin") {
  const ProtocolDef proto = majority_coin(128, 9);
  MainAttackConfig cfg;
  cfg.trials = 4000;
  cfg.pilot_trials = 400;
  cfg.h_cap = 4;
  cfg.nugget_budget = 2000;
  cfg.table_budget = 30000;
  cfg.seed = 1;
  const AttackResult res = main_attack(proto, cfg);

  CHECK(res.kind == "mart");
  CHECK(res.nugget.k == 1);
  CHECK(res.nugget.k_star == 2);
  CHECK(res.nugget.prov.direct_k1_gap_detected);
  CHECK(res.sweep_multiplicity == 8);
  CHECK(res.trials == 4000);
  CHECK(res.bias >= 3 * res.se);
  CHECK(res.p_hat > res.p_honest);
  CHECK(res.ci_lo > 0.5);
  CHECK(res.coupling_ok);
  CHECK(res.coupling_trials == 500);
  CHECK(res.abort_round_hist.size() == 10);
  CHECK(hist_total(res) == 4000);
  CHECK(res.bound == doctest::Approx(1.0 / 20));
  CHECK(res.gamma == 0);
}

TEST_CASE("main attack takes the noisy-gap route on the planted protocol") {
  const ProtocolDef proto = planted_gap_protocol();
  NuggetPartition part;
  planted_gap_partition(part.a1, part.a0, part.p);
  SeedStream nstream(77);
  MainAttackConfig cfg;
  cfg.nugget = nugget_finder(proto, 500, 0.0, nstream, &part);
  cfg.trials = 2000;
  cfg.pilot_trials = 200;
  cfg.h_cap = 3;
  cfg.seed = 5;
  const AttackResult res = main_attack(proto, cfg);

  CHECK(res.kind == "dp");
  CHECK(res.nugget.k_star == 2);
  CHECK(res.gamma == doctest::Approx(5.0 / (256.0 * std::sqrt(5.0))));
  CHECK(res.sweep_multiplicity == 6);
  CHECK(std::abs(res.bias) >= 0.2);
  CHECK(std::abs(res.bias) >= 5 * res.se);
  CHECK(res.coupling_ok);
  // the planted gap dwarfs the noise scale, so every run dies immediately
  CHECK(res.abort_round_hist[0] == 2000);
}

TEST_CASE("main attack reports zero bias when the output is predetermined") {
  const ProtocolDef proto = scripted(repo_path("configs/scripted_bad.json"));
  MainAttackConfig cfg;
  cfg.trials = 1000;
  cfg.pilot_trials = 100;
  cfg.nugget_budget = 50;
  cfg.seed = 2;
  const AttackResult res = main_attack(proto, cfg);

  CHECK(res.kind == "mart");
  CHECK(res.sweep_multiplicity == 2);
  CHECK(std::abs(res.bias) <= 3 * res.se + 1e-12);
  CHECK(res.p_hat == res.p_honest);
  CHECK(res.coupling_ok);
  CHECK(hist_total(res) == 1000);
}

TEST_CASE("main attack achieves the one-round edge on grouped parity") {
  const ProtocolDef proto = group_parties(parity_coin(5, 1), 2);
  MainAttackConfig cfg;
  cfg.trials = 2048;
  cfg.pilot_trials = 256;
  cfg.nugget_budget = 200;
  cfg.seed = 3;
  const AttackResult res = main_attack(proto, cfg);

  CHECK(res.kind == "mart");
  CHECK(res.nugget.k == 1);
  CHECK(res.nugget.k_star == 2);
  CHECK(res.p_hat == doctest::Approx(0.75).epsilon(0.06));
  CHECK(res.bias >= 0.2);
  CHECK(res.coupling_ok);
}

TEST_CASE("main attack with zero trials returns an empty measurement") {
  const ProtocolDef proto = scripted(repo_path("configs/scripted_bad.json"));
  MainAttackConfig cfg;
  cfg.trials = 0;
  cfg.pilot_trials = 20;
  cfg.nugget_budget = 50;
  const AttackResult res = main_attack(proto, cfg);

  CHECK(res.trials == 0);
  CHECK(res.p_hat == 0.5);
  CHECK(res.p_honest == 0.5);
  CHECK(res.bias == 0.0);
  CHECK(res.coupling_trials == 0);
  CHECK(res.coupling_ok);
  CHECK(hist_total(res) == 0);
}

TEST_CASE("main attack rejects bad configuration") {
  const ProtocolDef proto = majority_coin(8, 3);

  MainAttackConfig cfg;
  cfg.trials = -1;
  CHECK_THROWS_AS(main_attack(proto, cfg), std::invalid_argument);

  cfg = MainAttackConfig{};
  cfg.pilot_trials = -5;
  CHECK_THROWS_AS(main_attack(proto, cfg), std::invalid_argument);

  cfg = MainAttackConfig{};
  cfg.h_cap = 0;
  CHECK_THROWS_AS(main_attack(proto, cfg), std::invalid_argument);

  cfg = MainAttackConfig{};
  cfg.force_route = "fold";
  CHECK_THROWS_AS(main_attack(proto, cfg), std::invalid_argument);

  cfg = MainAttackConfig{};
  SeedStream nstream(4);
  cfg.nugget = nugget_finder(majority_coin(12, 3), 200, 0.0, nstream);
  CHECK_THROWS_AS(main_attack(proto, cfg), std::invalid_argument);
}

#include "cfl/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "cfl/attacks.hpp"
#include "cfl/game_table.hpp"
#include "cfl/martingale.hpp"
#include "cfl/rng.hpp"

namespace cfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  int z = 0;
  int h = -1;
  int target = 1;
};

// the three routes share one driver; gamma < 0 marks the fold route, where
// the trigger threshold comes from the table instead
std::unique_ptr<Adversary> make_adversary(const std::string& route, const NuggetResult& nug,
                                          const Candidate& cand, double gamma,
                                          std::shared_ptr<const GameValueTable> table,
                                          double mart_threshold, SeedStream& half_stream) {
  if (route == "mart")
    return mart_attack(nug.s1, nug.s0, cand.z, cand.h, std::move(table), mart_threshold);
  if (route == "dp") return dp_attack(nug.s1, nug.s0, cand.z, cand.h, gamma, nug.r);
  if (route == "sing") return sing_attack(nug.s1, nug.s0, cand.z, cand.h, gamma, half_stream);
  throw std::invalid_argument("main_attack: unknown route " + route);
}

}  // namespace

AttackResult main_attack(const ProtocolDef& proto, const MainAttackConfig& config) {
  if (config.trials < 0 || config.pilot_trials < 0)
    throw std::invalid_argument("main_attack: trial counts cannot be negative");
  if (config.h_cap < 1) throw std::invalid_argument("main_attack: h_cap must be positive");
  if (!config.force_route.empty() && config.force_route != "mart" &&
      config.force_route != "dp" && config.force_route != "sing")
    throw std::invalid_argument("main_attack: unknown force_route " + config.force_route);

  const SeedStream master(config.seed);
  AttackResult res;

  if (config.nugget) {
    res.nugget = *config.nugget;
    if (res.nugget.n != proto.n || res.nugget.r != proto.r)
      throw std::invalid_argument("main_attack: supplied nugget is for a different protocol");
    verify_nugget_structure(res.nugget);
  } else {
    SeedStream nstream = master.derive({0});
    res.nugget = nugget_finder(proto, config.nugget_budget, config.epsilon, nstream);
  }
  const NuggetResult& nug = res.nugget;

  std::string route;
  if (nug.k_star == nug.k + 1)
    route = "mart";
  else if (nug.k_star >= 2)
    route = "dp";
  else
    route = "sing";
  if (!config.force_route.empty()) route = config.force_route;
  res.kind = route;
  res.abort_round_hist.assign(static_cast<std::size_t>(proto.r) + 1, 0);

  if (nug.h.empty()) {
    res.kind = "null";
    res.bound_desc = "no monitored party to attack";
    return res;
  }

  if (route != "mart") res.gamma = nugget_gamma(nug);

  std::shared_ptr<const GameValueTable> table;
  if (route == "mart") {
    SeedStream tstream = master.derive({1});
    table = std::make_shared<const GameValueTable>(
        build_x(proto, nug.s1, config.table_budget, tstream));
  }

  const double lr = proto.r >= 2 ? std::log2(static_cast<double>(proto.r)) : 1.0;
  if (route == "mart") {
    res.bound = 1.0 / 20;
    res.bound_desc = "aggregate trigger-probability floor for a fired fold gap";
  } else if (route == "dp") {
    const double p = 0.5 * std::exp(-4.0 * lr);
    res.bound = 1.0 - std::pow(1.0 - p, proto.r);
    res.bound_desc = "noise-only firing probability across all rounds";
  } else {
    const double alpha = res.gamma * std::sqrt(static_cast<double>(proto.n));
    res.bound = std::min(1.0, 4.0 * proto.r * std::exp(-alpha * alpha / 192.0));
    res.bound_desc = "half-sample drift tail bound at the certified deviation";
  }

  PartySet h_pool = nug.h;
  {
    SeedStream hs = master.derive({5});
    for (std::size_t i = h_pool.size(); i > 1; --i) {
      const auto j = hs.next_below(i);
      std::swap(h_pool[i - 1], h_pool[static_cast<std::size_t>(j)]);
    }
  }
  if (static_cast<int>(h_pool.size()) > config.h_cap)
    h_pool.resize(static_cast<std::size_t>(config.h_cap));

  std::vector<Candidate> candidates;
  for (int h : h_pool)
    for (int z : {1, 0}) candidates.push_back({z, h, z});
  res.sweep_multiplicity = static_cast<int>(candidates.size());

  // pilot each (z, h): the two-sided shift of Pr[out=1] scores the candidate
  // and its sign picks the bit that shift favors
  std::size_t best = 0;
  if (config.pilot_trials > 0) {
    double best_score = -1;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      Candidate& cand = candidates[j];
      std::int64_t ones = 0;
      std::unique_ptr<Adversary> adv;
      for (std::int64_t t = 0; t < config.pilot_trials; ++t) {
        const std::uint64_t uj = static_cast<std::uint64_t>(j);
        const std::uint64_t ut = static_cast<std::uint64_t>(t);
        SeedStream cs = master.derive({2, uj, ut, 0});
        SeedStream ds = master.derive({2, uj, ut, 1});
        SeedStream hs = master.derive({2, uj, ut, 2});
        if (!adv || route == "sing")
          adv = make_adversary(route, nug, cand, res.gamma, table, -1, hs);
        const Coins coins = Coins::sample(proto.n, proto.coin_bits, cs);
        const RunResult rr = run_with_adversary(proto, *adv, {cand.h}, coins, ds);
        ones += rr.honest_out == 1 ? 1 : 0;
      }
      const double shift =
          static_cast<double>(ones) / static_cast<double>(config.pilot_trials) - 0.5;
      cand.target = shift >= 0 ? 1 : 0;
      if (std::abs(shift) > best_score) {
        best_score = std::abs(shift);
        best = j;
      }
    }
  }

  const Candidate winner = candidates[best];
  res.z = winner.z;
  res.h = winner.h;
  res.target_bit = winner.target;

  std::int64_t hits = 0;
  {
    std::unique_ptr<Adversary> adv;
    for (std::int64_t t = 0; t < config.trials; ++t) {
      const std::uint64_t ut = static_cast<std::uint64_t>(t);
      SeedStream cs = master.derive({3, ut, 0});
      SeedStream ds = master.derive({3, ut, 1});
      SeedStream hs = master.derive({3, ut, 2});
      if (!adv || route == "sing")
        adv = make_adversary(route, nug, winner, res.gamma, table, -1, hs);
      const Coins coins = Coins::sample(proto.n, proto.coin_bits, cs);
      const RunResult rr = run_with_adversary(proto, *adv, {winner.h}, coins, ds);
      hits += rr.honest_out == res.target_bit ? 1 : 0;
      ++res.abort_round_hist[static_cast<std::size_t>(rr.abort_round)];
    }
  }
  res.trials = config.trials;
  if (config.trials > 0) {
    // the shift is reported against a fresh honest baseline so protocols whose
    // output is fixed before any abort can bite come out at zero
    std::int64_t honest_hits = 0;
    for (std::int64_t t = 0; t < config.trials; ++t) {
      SeedStream cs = master.derive({6, static_cast<std::uint64_t>(t)});
      const Coins coins = Coins::sample(proto.n, proto.coin_bits, cs);
      honest_hits += run_honest(proto, coins).second == res.target_bit ? 1 : 0;
    }
    const double nt = static_cast<double>(config.trials);
    res.p_hat = static_cast<double>(hits) / nt;
    res.p_honest = static_cast<double>(honest_hits) / nt;
    res.bias = res.p_hat - res.p_honest;
    res.se = std::sqrt(std::max(res.p_hat * (1.0 - res.p_hat), 1e-12) / nt +
                       std::max(res.p_honest * (1.0 - res.p_honest), 1e-12) / nt);
    const auto ci = wilson_interval(hits, config.trials);
    res.ci_lo = ci.first;
    res.ci_hi = ci.second;
  }

  if (config.run_coupling) {
    const std::int64_t m = std::min<std::int64_t>(config.trials, 500);
    res.coupling_trials = m;
    std::unique_ptr<Adversary> quiet;
    for (std::int64_t t = 0; t < m; ++t) {
      const std::uint64_t ut = static_cast<std::uint64_t>(t);
      SeedStream cs = master.derive({4, ut, 0});
      SeedStream ds = master.derive({4, ut, 1});
      SeedStream hs = master.derive({4, ut, 2});
      if (!quiet || route == "sing") {
        const double off = route == "mart" ? kInf : -1;
        quiet = make_adversary(route, nug, winner, route == "mart" ? res.gamma : kInf, table,
                               off, hs);
      }
      const Coins coins = Coins::sample(proto.n, proto.coin_bits, cs);
      const RunResult rr = run_with_adversary(proto, *quiet, {winner.h}, coins, ds);
      const int honest = run_honest(proto, coins).second;
      if (rr.aborted || rr.honest_out != honest) {
        res.coupling_ok = false;
        break;
      }
    }
  }

  return res;
}

}  // namespace cfl

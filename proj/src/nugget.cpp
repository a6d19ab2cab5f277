#include "cfl/nugget.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace cfl {

namespace {

PartySet sorted_set(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::int64_t count_containing(const TupleSet& set, int h) {
  std::int64_t c = 0;
  for (const auto& t : set.tuples) c += std::binary_search(t.begin(), t.end(), h) ? 1 : 0;
  return c;
}

TupleSet tuple_reject(const TupleSet& set, int p) {
  TupleSet out;
  out.k = set.k;
  for (const auto& t : set.tuples)
    if (!std::binary_search(t.begin(), t.end(), p)) out.tuples.push_back(t);
  return out;
}

std::int64_t overlap(const PartySet& tuple, const PartySet& h) {
  std::int64_t c = 0;
  for (int p : tuple) c += std::binary_search(h.begin(), h.end(), p) ? 1 : 0;
  return c;
}

double max_abs_gap(const BackupTrajectory& a, const BackupTrajectory& b, int r) {
  double m = 0;
  for (int i = 1; i <= r; ++i) m = std::max(m, std::abs(a.value(i) - b.value(i)));
  return m;
}

void check_partition(const NuggetPartition& part, int n) {
  std::vector<int> all;
  for (const PartySet* s : {&part.a1, &part.a0, &part.p})
    all.insert(all.end(), s->begin(), s->end());
  std::vector<int> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  if (static_cast<int>(sorted.size()) != n)
    throw std::invalid_argument("nugget_finder: partition must cover every party once");
  for (int i = 0; i < n; ++i)
    if (sorted[i] != i)
      throw std::invalid_argument("nugget_finder: partition must cover every party once");
  if (part.a1.empty() || part.a1.size() != part.a0.size())
    throw std::invalid_argument("nugget_finder: the two singleton sides must have equal size");
}

struct PairScan {
  std::vector<std::pair<int, int>> pairs;                    // indices into eligible
  std::vector<std::vector<std::int64_t>> count[2];           // [z][pair][grid slot]
};

}  // namespace

int smallest_k(int n, int r) {
  if (n < 2) throw std::invalid_argument("smallest_k: need at least two parties");
  if (r < 1) throw std::invalid_argument("smallest_k: need at least one round");
  if (r == 1) return 1;
  const double lr = std::log2(static_cast<double>(r));
  const double rhs_base = std::log(static_cast<double>(r));
  for (int k = 1; k <= n; ++k) {
    const double lnc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    if (lnc >= rhs_base + 2.0 * k * std::log(lr)) return k;
  }
  throw std::invalid_argument("smallest_k: no admissible tuple size for these parameters");
}

double chain_coefficient(int n, int k, int ell) {
  if (k < 1 || k > n) throw std::invalid_argument("chain_coefficient: bad tuple size");
  if (ell < 1 || ell > k) throw std::invalid_argument("chain_coefficient: level out of range");
  double c = 1;
  for (int j = 0; j < k - ell; ++j)
    c *= static_cast<double>(n - 1 - j) / static_cast<double>(k - 1 - j);
  return c;
}

std::vector<double> rho_grid(int r, double coarsening) {
  if (r < 1) throw std::invalid_argument("rho_grid: need at least one round");
  if (!(coarsening >= 1)) throw std::invalid_argument("rho_grid: coarsening factor below one");
  const int points = r * (r - 1);
  std::vector<double> grid;
  double last = 0;
  for (int t = 0; t <= points; ++t) {
    const double rho = 1.0 + static_cast<double>(t) / r;
    if (coarsening > 1 && t != 0 && t != points && rho < last * coarsening) continue;
    grid.push_back(rho);
    last = rho;
  }
  return grid;
}

NuggetResult nugget_finder(const ProtocolDef& proto, std::int64_t sample_budget, double epsilon,
                           SeedStream& stream, const NuggetPartition* partition_override,
                           double rho_coarsening) {
  const int n = proto.n;
  const int r = proto.r;
  if (sample_budget < 1) throw std::invalid_argument("nugget_finder: budget must be positive");
  if (!(epsilon >= 0) || epsilon >= 1)
    throw std::invalid_argument("nugget_finder: epsilon must lie in [0, 1)");

  NuggetResult res;
  res.n = n;
  res.r = r;
  res.k = smallest_k(n, r);
  const int k = res.k;
  res.prov.rho_coarsening = rho_coarsening;

  NuggetPartition part;
  if (partition_override) {
    part = *partition_override;
    check_partition(part, n);
  } else {
    SeedStream ps = stream.derive({0});
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(ps.next_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
    const int m = (n + 2) / 3;
    part.a1 = sorted_set({order.begin(), order.begin() + m});
    part.a0 = sorted_set({order.begin() + m, order.begin() + 2 * m});
    part.p = sorted_set({order.begin() + 2 * m, order.end()});
  }
  if (static_cast<int>(part.p.size()) < k - 1)
    throw std::invalid_argument("nugget_finder: partition leaves too few shared parties");
  res.prov.partition = part;

  const TupleSet shared = choose_all(part.p, k - 1);
  const TupleSet top1 = tuple_concat(choose_all(part.a1, 1), shared);
  const TupleSet top0 = tuple_concat(choose_all(part.a0, 1), shared);

  const std::vector<double> grid = rho_grid(r, rho_coarsening);
  const double lr = r >= 2 ? std::log2(static_cast<double>(r)) : 0;
  const double sqrt_r = std::sqrt(static_cast<double>(r));

  bool top_fired = false;
  double rho_top = 0;
  double qhat_top = 0;
  if (r >= 2) {
    std::vector<double> maxima;
    maxima.reserve(static_cast<std::size_t>(sample_budget));
    for (std::int64_t t = 0; t < sample_budget; ++t) {
      SeedStream es = stream.derive({1, static_cast<std::uint64_t>(t)});
      const Coins coins = Coins::sample(n, proto.coin_bits, es);
      const Transcript tx = run_honest(proto, coins).first;
      const BackupTrajectory b1 = backup_trajectory(proto, coins, tx, top1);
      const BackupTrajectory b0 = backup_trajectory(proto, coins, tx, top0);
      maxima.push_back(max_abs_gap(b1, b0, r));
    }
    std::sort(maxima.begin(), maxima.end());
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      const double rho = *it;
      const auto lo = std::lower_bound(maxima.begin(), maxima.end(), rho / (256.0 * sqrt_r));
      const double qhat =
          static_cast<double>(maxima.end() - lo) / static_cast<double>(sample_budget);
      if (qhat >= 1.0 / (2.0 * rho * lr) - epsilon) {
        top_fired = true;
        rho_top = rho;
        qhat_top = qhat;
        break;
      }
    }
  }
  res.prov.top_gap_fired = top_fired;
  res.prov.top_rho = rho_top;
  res.prov.top_q_hat = qhat_top;

  if (!top_fired || k == 1) {
    res.k_star = k + 1;
    res.rho_star = 1.0;
    res.s1 = top1;
    res.s0 = top0;
    res.h = part.a0;
    res.prov.direct_k1_gap_detected = top_fired && k == 1;
    verify_nugget_structure(res);
    return res;
  }

  TupleSet cur1 = top1;
  TupleSet cur0 = top0;
  PartySet h_cur = part.p;
  int c1 = -1, c0 = -1;
  double rho_cur = rho_top;

  for (int level = k; level >= 2; --level) {
    PartySet elig;
    for (int p : h_cur)
      if (p != c1 && p != c0) elig.push_back(p);
    const int ecount = static_cast<int>(elig.size());

    const TupleSet* sides[2] = {&cur0, &cur1};
    std::vector<TupleSet> sel[2];
    for (int z : {0, 1}) {
      sel[z].reserve(static_cast<std::size_t>(ecount));
      for (int i = 0; i < ecount; ++i) sel[z].push_back(tuple_select(*sides[z], elig[i]));
    }

    const double coef = chain_coefficient(n, k, level - 1);
    const double scale = std::sqrt(coef);
    const double shrink = std::pow(64.0 * lr, static_cast<double>(k - level + 1));
    std::vector<double> thresholds;
    thresholds.reserve(grid.size());
    for (const double rho : grid) thresholds.push_back(rho / (256.0 * sqrt_r) * scale / shrink);

    PairScan scan;
    for (int i = 0; i < ecount; ++i)
      for (int j = i + 1; j < ecount; ++j)
        if (!sel[0][static_cast<std::size_t>(i)].tuples.empty() &&
            !sel[0][static_cast<std::size_t>(j)].tuples.empty() &&
            !sel[1][static_cast<std::size_t>(i)].tuples.empty() &&
            !sel[1][static_cast<std::size_t>(j)].tuples.empty())
          scan.pairs.emplace_back(i, j);
    for (int z : {0, 1})
      scan.count[z].assign(scan.pairs.size(),
                           std::vector<std::int64_t>(grid.size() + 1, 0));

    if (!scan.pairs.empty()) {
      std::vector<BackupTrajectory> trajs[2];
      for (std::int64_t t = 0; t < sample_budget; ++t) {
        SeedStream es =
            stream.derive({2, static_cast<std::uint64_t>(level), static_cast<std::uint64_t>(t)});
        const Coins coins = Coins::sample(n, proto.coin_bits, es);
        const Transcript tx = run_honest(proto, coins).first;
        for (int z : {0, 1}) {
          trajs[z].clear();
          for (int i = 0; i < ecount; ++i) {
            if (sel[z][static_cast<std::size_t>(i)].tuples.empty())
              trajs[z].emplace_back();
            else
              trajs[z].push_back(
                  backup_trajectory(proto, coins, tx, sel[z][static_cast<std::size_t>(i)]));
          }
        }
        for (std::size_t pi = 0; pi < scan.pairs.size(); ++pi) {
          const auto [i, j] = scan.pairs[pi];
          for (int z : {0, 1}) {
            const double gap = max_abs_gap(trajs[z][static_cast<std::size_t>(i)],
                                           trajs[z][static_cast<std::size_t>(j)], r);
            const auto slot =
                std::upper_bound(thresholds.begin(), thresholds.end(), gap) - thresholds.begin();
            ++scan.count[z][pi][static_cast<std::size_t>(slot)];
          }
        }
      }
      for (int z : {0, 1})
        for (auto& buckets : scan.count[z])
          for (std::size_t s = buckets.size() - 1; s > 0; --s) buckets[s - 1] += buckets[s];
    }

    bool fired = false;
    int f_z = 0, f_i = 0, f_j = 0;
    double f_rho = 0, f_qhat = 0;
    for (int g = static_cast<int>(grid.size()) - 1; g >= 0 && !fired; --g) {
      const double rho = grid[static_cast<std::size_t>(g)];
      const double req =
          1.0 / (2.0 * rho * lr) * std::pow(64.0, -static_cast<double>(k - level + 1)) / scale -
          epsilon;
      for (int z : {1, 0}) {
        for (std::size_t pi = 0; pi < scan.pairs.size() && !fired; ++pi) {
          const double qhat =
              static_cast<double>(scan.count[z][pi][static_cast<std::size_t>(g) + 1]) /
              static_cast<double>(sample_budget);
          if (qhat >= req) {
            fired = true;
            f_z = z;
            f_i = scan.pairs[pi].first;
            f_j = scan.pairs[pi].second;
            f_rho = rho;
            f_qhat = qhat;
          }
        }
        if (fired) break;
      }
    }

    if (!fired) {
      if (c1 >= 0) {
        // tuples carrying the other side's pinned party would skew the per-h average
        cur1 = tuple_reject(cur1, c0);
        cur0 = tuple_reject(cur0, c1);
      }
      res.k_star = level;
      res.rho_star = rho_cur;
      res.s1 = cur1;
      res.s0 = cur0;
      res.h = elig;
      res.prov.p1 = c1;
      res.prov.p0 = c0;
      verify_nugget_structure(res);
      return res;
    }

    const int h = elig[static_cast<std::size_t>(f_i)];
    const int h_prime = elig[static_cast<std::size_t>(f_j)];
    res.prov.descent.push_back({level, f_z, h, h_prime, f_rho, f_qhat});
    if (level == k) res.prov.c_side = f_z;
    const int prev = f_z == 1 ? c1 : c0;
    if (prev >= 0) {
      h_cur.erase(std::remove(h_cur.begin(), h_cur.end(), prev), h_cur.end());
      res.prov.q.push_back(prev);
      std::sort(res.prov.q.begin(), res.prov.q.end());
    }
    cur1 = sel[f_z][static_cast<std::size_t>(f_i)];
    cur0 = sel[f_z][static_cast<std::size_t>(f_j)];
    c1 = h;
    c0 = h_prime;
    rho_cur = f_rho;
  }

  res.k_star = 1;
  res.rho_star = rho_cur;
  res.s1 = cur1;
  res.s0 = cur0;
  res.h = res.prov.c_side == 1 ? part.a1 : part.a0;
  res.prov.p1 = c1;
  res.prov.p0 = c0;
  verify_nugget_structure(res);
  return res;
}

void verify_nugget_structure(const NuggetResult& res) {
  const int k = res.k;
  if (res.k_star < 1 || res.k_star > k + 1)
    throw std::runtime_error("nugget structure: index out of range");
  if (res.s1.k != k || res.s0.k != k)
    throw std::runtime_error("nugget structure: tuple size differs from k");
  if (res.s1.tuples.empty() || res.s0.tuples.empty())
    throw std::runtime_error("nugget structure: empty tuple set");

  const auto s1 = static_cast<std::int64_t>(res.s1.size());
  const auto s0 = static_cast<std::int64_t>(res.s0.size());
  const auto hsz = static_cast<std::int64_t>(res.h.size());

  if (res.k_star == k + 1) {
    std::int64_t m = -1;
    for (int h : res.h) {
      if (count_containing(res.s1, h) != 0)
        throw std::runtime_error("nugget structure: a surviving-side tuple contains an h");
      const std::int64_t c = count_containing(res.s0, h);
      if (m < 0) m = c;
      if (c != m) throw std::runtime_error("nugget structure: uneven h-selection sizes");
    }
    if (m < 1) throw std::runtime_error("nugget structure: no tuple pins any h");
    for (const auto& u : res.s0.tuples)
      if (overlap(u, res.h) * s0 != hsz * m)
        throw std::runtime_error("nugget structure: h-average differs from the set average");
    return;
  }

  if (res.k_star == 1) {
    if (3 * hsz < res.n) throw std::runtime_error("nugget structure: h set too small");
    if (s1 != hsz || s0 != hsz)
      throw std::runtime_error("nugget structure: singleton sides must match h in size");
    for (int h : res.h)
      if (count_containing(res.s1, h) != 1 || count_containing(res.s0, h) != 1)
        throw std::runtime_error("nugget structure: every h must pin exactly one tuple per side");
    return;
  }

  // 2 <= k_star <= k
  std::int64_t c1 = -1, c0 = -1;
  for (int h : res.h) {
    const std::int64_t a = count_containing(res.s1, h);
    const std::int64_t b = count_containing(res.s0, h);
    if (c1 < 0) {
      c1 = a;
      c0 = b;
    }
    if (a != c1 || b != c0)
      throw std::runtime_error("nugget structure: uneven h membership counts");
  }
  if (res.h.empty()) return;  // degenerate but vacuously consistent; callers report it
  if (c1 < 1 || c0 < 1) throw std::runtime_error("nugget structure: an h pins no tuple");
  if (c1 * s0 != c0 * s1)
    throw std::runtime_error("nugget structure: membership probability differs across sides");
  const std::int64_t shift = res.n - k + res.k_star - 1;
  for (int z : {0, 1}) {
    const std::int64_t c = z == 1 ? c1 : c0;
    const std::int64_t s = z == 1 ? s1 : s0;
    if (2 * c > s)
      throw std::runtime_error("nugget structure: membership probability above one half");
    if (4 * (res.k_star - 1) * (s - c) < c * shift)
      throw std::runtime_error("nugget structure: leave-out ratio below the bound");
    const TupleSet& set = z == 1 ? res.s1 : res.s0;
    for (const auto& u : set.tuples)
      if (overlap(u, res.h) * s != hsz * c)
        throw std::runtime_error("nugget structure: h-average differs from the set average");
  }
}

double nugget_gamma(const NuggetResult& res) {
  if (res.k_star < 1 || res.k_star > res.k)
    throw std::invalid_argument("nugget_gamma: defined for k_star between 1 and k");
  const double lr = std::log2(static_cast<double>(res.r));
  const double coef = chain_coefficient(res.n, res.k, res.k_star);
  return res.rho_star / (256.0 * std::sqrt(static_cast<double>(res.r))) * std::sqrt(coef) /
         std::pow(64.0 * lr, static_cast<double>(res.k - res.k_star));
}

namespace {

nlohmann::json parties_to_json(const PartySet& set) {
  nlohmann::json arr = nlohmann::json::array();
  for (int p : set) arr.push_back(p);
  return arr;
}

PartySet parties_from_json(const nlohmann::json& arr) {
  PartySet out;
  for (const auto& v : arr) out.push_back(v.get<int>());
  return out;
}

nlohmann::json tuples_to_json(const TupleSet& set) {
  nlohmann::json doc;
  doc["k"] = set.k;
  auto& tuples = doc["tuples"] = nlohmann::json::array();
  for (const auto& t : set.tuples) tuples.push_back(parties_to_json(t));
  return doc;
}

TupleSet tuples_from_json(const nlohmann::json& doc) {
  TupleSet out;
  out.k = doc.at("k").get<int>();
  for (const auto& t : doc.at("tuples")) out.tuples.push_back(parties_from_json(t));
  return out;
}

}  // namespace

void save_nugget(const NuggetResult& res, const std::string& path) {
  nlohmann::json doc;
  doc["schema"] = "nugget-v1";
  doc["n"] = res.n;
  doc["r"] = res.r;
  doc["k"] = res.k;
  doc["k_star"] = res.k_star;
  doc["rho_star"] = res.rho_star;
  doc["s1"] = tuples_to_json(res.s1);
  doc["s0"] = tuples_to_json(res.s0);
  doc["h"] = parties_to_json(res.h);
  nlohmann::json prov;
  prov["a1"] = parties_to_json(res.prov.partition.a1);
  prov["a0"] = parties_to_json(res.prov.partition.a0);
  prov["p"] = parties_to_json(res.prov.partition.p);
  prov["q"] = parties_to_json(res.prov.q);
  prov["p1"] = res.prov.p1;
  prov["p0"] = res.prov.p0;
  prov["c_side"] = res.prov.c_side;
  prov["top_gap_fired"] = res.prov.top_gap_fired;
  prov["top_rho"] = res.prov.top_rho;
  prov["top_q_hat"] = res.prov.top_q_hat;
  prov["direct_k1_gap_detected"] = res.prov.direct_k1_gap_detected;
  prov["rho_coarsening"] = res.prov.rho_coarsening;
  auto& descent = prov["descent"] = nlohmann::json::array();
  for (const auto& step : res.prov.descent)
    descent.push_back({{"level", step.level},
                       {"z", step.z},
                       {"h", step.h},
                       {"h_prime", step.h_prime},
                       {"rho", step.rho},
                       {"q_hat", step.q_hat}});
  doc["provenance"] = std::move(prov);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_nugget: cannot write " + path);
  out << doc.dump() << '\n';
}

NuggetResult load_nugget(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_nugget: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_nugget: " + path + " is not valid JSON: " + e.what());
  }
  NuggetResult res;
  try {
    if (doc.at("schema").get<std::string>() != "nugget-v1")
      throw std::runtime_error("load_nugget: unknown schema");
    res.n = doc.at("n").get<int>();
    res.r = doc.at("r").get<int>();
    res.k = doc.at("k").get<int>();
    res.k_star = doc.at("k_star").get<int>();
    res.rho_star = doc.at("rho_star").get<double>();
    res.s1 = tuples_from_json(doc.at("s1"));
    res.s0 = tuples_from_json(doc.at("s0"));
    res.h = parties_from_json(doc.at("h"));
    const auto& prov = doc.at("provenance");
    res.prov.partition.a1 = parties_from_json(prov.at("a1"));
    res.prov.partition.a0 = parties_from_json(prov.at("a0"));
    res.prov.partition.p = parties_from_json(prov.at("p"));
    res.prov.q = parties_from_json(prov.at("q"));
    res.prov.p1 = prov.at("p1").get<int>();
    res.prov.p0 = prov.at("p0").get<int>();
    res.prov.c_side = prov.at("c_side").get<int>();
    res.prov.top_gap_fired = prov.at("top_gap_fired").get<bool>();
    res.prov.top_rho = prov.at("top_rho").get<double>();
    res.prov.top_q_hat = prov.at("top_q_hat").get<double>();
    res.prov.direct_k1_gap_detected = prov.at("direct_k1_gap_detected").get<bool>();
    res.prov.rho_coarsening = prov.at("rho_coarsening").get<double>();
    for (const auto& step : prov.at("descent"))
      res.prov.descent.push_back({step.at("level").get<int>(), step.at("z").get<int>(),
                                  step.at("h").get<int>(), step.at("h_prime").get<int>(),
                                  step.at("rho").get<double>(), step.at("q_hat").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_nugget: " + path + " is malformed: " + e.what());
  }
  verify_nugget_structure(res);
  return res;
}

}  // namespace cfl

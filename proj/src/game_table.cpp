#include "cfl/game_table.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace cfl {

int trigger_g(double x, double y, double y_prime, int no_jump, int r) {
  if (r < 1) throw std::invalid_argument("trigger_g: r must be positive");
  const double near = 1.0 / (64.0 * std::sqrt(static_cast<double>(r)));
  if (std::abs(y - x) < near || std::abs(y_prime - x) < near) return no_jump;
  return 0;
}

std::int32_t GameValueTable::lookup(int level, const ContextKey& key) const {
  if (level < 1 || level > r) throw std::invalid_argument("game table: level out of range");
  const auto& m = mu[level - 1];
  auto it = m.find(key);
  return it == m.end() ? key.x_idx : it->second.mu_idx;
}

namespace {

struct FoldState {
  std::int32_t x_idx = 0;
  std::int64_t sos_idx = 0;
  std::uint8_t g = 1;
};

// advance one level: context lookup, then trigger and sum-of-squares updates
FoldState advance(const GameValueTable& table, const FoldState& st, int level, std::int32_t b_num,
                  std::int32_t b_prev_num) {
  const ContextKey key{b_num, b_prev_num, st.x_idx, st.sos_idx, st.g};
  FoldState next;
  next.x_idx = table.lookup(level, key);
  const double x = static_cast<double>(next.x_idx) / table.x_den;
  const double b = static_cast<double>(b_num) / static_cast<double>(table.b_den);
  const double b_prev = static_cast<double>(b_prev_num) / static_cast<double>(table.b_den);
  next.g = static_cast<std::uint8_t>(trigger_g(x, b, b_prev, st.g, table.r));
  const std::int64_t step = next.x_idx - st.x_idx;
  next.sos_idx = st.sos_idx + step * step;
  return next;
}

}  // namespace

GameValueTable build_x(const ProtocolDef& proto, const TupleSet& set, std::int64_t n_samples,
                       SeedStream& stream, BuildMode mode) {
  if (set.tuples.empty()) throw std::invalid_argument("build_x: empty tuple set");
  if (n_samples < 1) throw std::invalid_argument("build_x: need a positive sample budget");

  const int total_bits = proto.n * proto.coin_bits;
  const bool small_space = total_bits <= 20;
  bool exact;
  switch (mode) {
    case BuildMode::exact:
      if (!small_space) throw std::invalid_argument("build_x: coin space too large to enumerate");
      exact = true;
      break;
    case BuildMode::sampled:
      exact = false;
      break;
    default:
      exact = small_space;
  }

  GameValueTable table;
  table.r = proto.r;
  table.x_den = 200 * proto.r;
  table.b_den = static_cast<std::int64_t>(set.tuples.size());
  table.exact = exact;
  table.budget = exact ? 0 : n_samples;
  table.mu.resize(proto.r);

  const std::int32_t half = 100 * proto.r;  // x grid index of 1/2

  if (exact) {
    const std::uint64_t space = 1ull << total_bits;
    std::vector<std::vector<std::int32_t>> nums(space);
    std::vector<std::uint8_t> outs(space);
    for (std::uint64_t idx = 0; idx < space; ++idx) {
      const Coins coins = Coins::from_index(proto.n, proto.coin_bits, idx);
      const auto [tx, out] = run_honest(proto, coins);
      const BackupTrajectory traj = backup_trajectory(proto, coins, tx, set);
      outs[idx] = static_cast<std::uint8_t>(out);
      nums[idx].reserve(traj.num.size());
      for (std::int64_t v : traj.num) nums[idx].push_back(static_cast<std::int32_t>(v));
    }

    std::vector<FoldState> states(space, FoldState{half, 0, 1});
    for (int level = 1; level <= proto.r; ++level) {
      auto& m = table.mu[level - 1];
      for (std::uint64_t idx = 0; idx < space; ++idx) {
        const FoldState& st = states[idx];
        const ContextKey key{nums[idx][level], nums[idx][level - 1], st.x_idx, st.sos_idx, st.g};
        MuEntry& e = m[key];
        e.q_c += 1;
        e.p_c += outs[idx];
      }
      for (auto& [key, e] : m)
        e.mu_idx = static_cast<std::int32_t>((e.p_c * table.x_den) / e.q_c);
      for (std::uint64_t idx = 0; idx < space; ++idx)
        states[idx] = advance(table, states[idx], level, nums[idx][level], nums[idx][level - 1]);
    }
    return table;
  }

  for (int level = 1; level <= proto.r; ++level) {
    SeedStream level_stream = stream.derive({static_cast<std::uint64_t>(level)});
    auto& m = table.mu[level - 1];
    for (std::int64_t t = 0; t < n_samples; ++t) {
      SeedStream trial = level_stream.derive({static_cast<std::uint64_t>(t)});
      const Coins coins = Coins::sample(proto.n, proto.coin_bits, trial);
      const auto [tx, out] = run_honest(proto, coins);
      const BackupTrajectory traj = backup_trajectory(proto, coins, tx, set);
      FoldState st{half, 0, 1};
      for (int j = 1; j < level; ++j)
        st = advance(table, st, j, static_cast<std::int32_t>(traj.num[j]),
                     static_cast<std::int32_t>(traj.num[j - 1]));
      const ContextKey key{static_cast<std::int32_t>(traj.num[level]),
                           static_cast<std::int32_t>(traj.num[level - 1]), st.x_idx, st.sos_idx,
                           st.g};
      MuEntry& e = m[key];
      e.q_c += 1;
      e.p_c += out;
    }
    for (auto& [key, e] : m)
      e.mu_idx = static_cast<std::int32_t>((e.p_c * table.x_den) / e.q_c);
  }
  return table;
}

XTrace eval_x(const GameValueTable& table, const BackupTrajectory& traj) {
  if (traj.denom != table.b_den)
    throw std::invalid_argument("eval_x: trajectory set size differs from the table's");
  if (traj.rounds() != table.r)
    throw std::invalid_argument("eval_x: trajectory round count differs from the table's");

  XTrace trace;
  const int r = table.r;
  trace.x_idx.reserve(r + 1);
  trace.sos_idx.reserve(r + 1);
  trace.g.reserve(r + 1);
  trace.x.reserve(r + 1);

  FoldState st{static_cast<std::int32_t>(100 * r), 0, 1};
  trace.x_idx.push_back(st.x_idx);
  trace.sos_idx.push_back(0);
  trace.g.push_back(1);
  trace.x.push_back(0.5);
  for (int level = 1; level <= r; ++level) {
    st = advance(table, st, level, static_cast<std::int32_t>(traj.num[level]),
                 static_cast<std::int32_t>(traj.num[level - 1]));
    trace.x_idx.push_back(st.x_idx);
    trace.sos_idx.push_back(st.sos_idx);
    trace.g.push_back(st.g);
    trace.x.push_back(static_cast<double>(st.x_idx) / table.x_den);
  }
  return trace;
}

void save_game_table(const GameValueTable& table, const std::string& path) {
  nlohmann::json doc;
  doc["schema"] = "game-table-v1";
  doc["r"] = table.r;
  doc["x_den"] = table.x_den;
  doc["b_den"] = table.b_den;
  doc["exact"] = table.exact;
  doc["budget"] = table.budget;
  auto& levels = doc["levels"] = nlohmann::json::array();
  for (const auto& m : table.mu) {
    nlohmann::json level = nlohmann::json::array();
    for (const auto& [key, e] : m)
      level.push_back({key.b_num, key.b_prev_num, key.x_idx, key.sos_idx, key.g, e.mu_idx, e.p_c,
                       e.q_c});
    levels.push_back(std::move(level));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_game_table: cannot write " + path);
  out << doc.dump() << '\n';
}

GameValueTable load_game_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_game_table: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_game_table: " + path + " is not valid JSON: " + e.what());
  }
  GameValueTable table;
  try {
    if (doc.at("schema").get<std::string>() != "game-table-v1")
      throw std::runtime_error("load_game_table: unknown schema");
    table.r = doc.at("r").get<int>();
    table.x_den = doc.at("x_den").get<int>();
    table.b_den = doc.at("b_den").get<std::int64_t>();
    table.exact = doc.at("exact").get<bool>();
    table.budget = doc.at("budget").get<std::int64_t>();
    const auto& levels = doc.at("levels");
    if (table.r < 1 || table.x_den != 200 * table.r || levels.size() != std::size_t(table.r))
      throw std::runtime_error("load_game_table: inconsistent dimensions");
    table.mu.resize(table.r);
    for (int i = 0; i < table.r; ++i) {
      for (const auto& row : levels[i]) {
        if (!row.is_array() || row.size() != 8)
          throw std::runtime_error("load_game_table: malformed context row");
        ContextKey key{row[0].get<std::int32_t>(), row[1].get<std::int32_t>(),
                       row[2].get<std::int32_t>(), row[3].get<std::int64_t>(),
                       row[4].get<std::uint8_t>()};
        MuEntry e{row[5].get<std::int32_t>(), row[6].get<std::int64_t>(),
                  row[7].get<std::int64_t>()};
        table.mu[i].emplace(key, e);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_game_table: " + path + " has a missing or mistyped field: " +
                             e.what());
  }
  return table;
}

}  // namespace cfl

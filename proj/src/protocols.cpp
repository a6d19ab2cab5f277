#include "cfl/protocols.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace cfl {

namespace {

enum class Combine { majority, parity };

int round_coin_from_transcript(const Transcript& tx, int n, int round) {
  int v = 0;
  for (int p = 0; p < n; ++p) v ^= tx.msgs[round - 1][p][0] == '1';
  return v;
}

ProtocolDef xor_round_protocol(const std::string& name, int n, int r, Combine comb,
                               bool tie_break_even) {
  if (n < 2) throw std::invalid_argument(name + ": need at least two parties");
  if (r < 1) throw std::invalid_argument(name + ": need at least one round");
  if (comb == Combine::majority && r % 2 == 0 && !tie_break_even)
    throw std::invalid_argument(name + ": round count must be odd");

  ProtocolDef def;
  def.name = name + "(" + std::to_string(n) + "," + std::to_string(r) + ")";
  def.n = n;
  def.r = r;
  def.coin_bits = 2 * r;  // bits 0..r-1 round bits, r..2r-1 residual bits

  def.next_message = [](int party, int round, const Coins& coins, const Transcript&) {
    return Message(1, char('0' + coins.bit(party, round - 1)));
  };

  def.residual_output = [n, r, comb](const PartySet& survivors, const Coins& coins,
                                     const Transcript& tx, int prefix) {
    int ones = 0;
    int last = 0;
    for (int j = 1; j <= r; ++j) {
      int v;
      if (j <= prefix) {
        v = round_coin_from_transcript(tx, n, j);
      } else {
        v = 0;
        for (int p : survivors) v ^= coins.bit(p, r + j - 1);
      }
      ones += v;
      last = v;
    }
    if (comb == Combine::parity) return ones & 1;
    if (2 * ones > r) return 1;
    if (2 * ones < r) return 0;
    return last;  // even round count: tie resolves to the final vote
  };

  if (2 * r <= 64) {
    def.backup_batch = [n, r, comb](const Coins& coins, const Transcript& tx,
                                    const std::vector<PartySet>& tuples,
                                    std::vector<std::uint64_t>& out) {
      const std::uint64_t low_r = (1ull << r) - 1;
      std::uint64_t c = 0;
      for (int j = 1; j <= r; ++j)
        c |= static_cast<std::uint64_t>(round_coin_from_transcript(tx, n, j)) << (j - 1);
      out.assign(tuples.size(), 0);
      for (std::size_t t = 0; t < tuples.size(); ++t) {
        std::uint64_t e = 0;
        for (int p : tuples[t]) e ^= coins.low_word(p) >> r;
        e &= low_r;
        std::uint64_t packed = 0;
        for (int i = 0; i <= r; ++i) {
          const std::uint64_t low_i = (1ull << i) - 1;
          const std::uint64_t votes = (c & low_i) | (e & ~low_i & low_r);
          const int ones = std::popcount(votes);
          int bit;
          if (comb == Combine::parity) bit = ones & 1;
          else if (2 * ones > r) bit = 1;
          else if (2 * ones < r) bit = 0;
          else bit = static_cast<int>((votes >> (r - 1)) & 1);
          packed |= static_cast<std::uint64_t>(bit) << i;
        }
        out[t] = packed;
      }
    };
  }
  return def;
}

struct ScriptedTables {
  std::string label;
  int n = 0;
  int r = 0;
  int residual_bits = 0;
  std::vector<int> out;
  std::vector<std::vector<int>> backup;
};

void require_bits(const std::vector<int>& v, const char* what) {
  for (int x : v)
    if (x != 0 && x != 1) throw std::runtime_error(std::string("scripted: ") + what + " entries must be 0 or 1");
}

ScriptedTables load_scripted_tables(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scripted: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("scripted: " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error("scripted: top level must be an object");
  static const char* allowed[] = {"name", "n", "r", "round_bits", "residual_bits", "out", "backup"};
  for (const auto& item : doc.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) throw std::runtime_error("scripted: unknown field \"" + item.key() + "\"");
  }

  ScriptedTables t;
  try {
    t.label = doc.at("name").get<std::string>();
    t.n = doc.at("n").get<int>();
    t.r = doc.at("r").get<int>();
    const int round_bits = doc.at("round_bits").get<int>();
    t.residual_bits = doc.at("residual_bits").get<int>();
    if (round_bits != t.r) throw std::runtime_error("scripted: round_bits must equal r");
    t.out = doc.at("out").get<std::vector<int>>();
    t.backup = doc.at("backup").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("scripted: " + path + " has a missing or mistyped field: " + e.what());
  }

  if (t.n < 2) throw std::runtime_error("scripted: need at least two parties");
  if (t.r < 1 || t.r > 20) throw std::runtime_error("scripted: r out of range");
  if (t.residual_bits < 1 || t.r + t.residual_bits > 62)
    throw std::runtime_error("scripted: residual_bits out of range");
  const std::size_t nc = std::size_t(1) << t.r;
  const std::size_t nd = std::size_t(1) << t.residual_bits;
  if (t.out.size() != nc) throw std::runtime_error("scripted: out table must have 2^r entries");
  require_bits(t.out, "out");
  if (t.backup.size() != std::size_t(t.r) + 1)
    throw std::runtime_error("scripted: backup must hold r+1 tables");
  for (int i = 0; i <= t.r; ++i) {
    if (t.backup[i].size() != (std::size_t(1) << i) * nd)
      throw std::runtime_error("scripted: backup table " + std::to_string(i) + " has the wrong size");
    require_bits(t.backup[i], "backup");
  }
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t d = 0; d < nd; ++d)
      if (t.backup[t.r][c | (d << t.r)] != t.out[c])
        throw std::runtime_error("scripted: backup table at the full prefix disagrees with out");
  return t;
}

std::string encode_block_message(const std::vector<Message>& parts) {
  Message out;
  for (const Message& m : parts) {
    out += std::to_string(m.size());
    out += ':';
    out += m;
  }
  return out;
}

std::vector<Message> split_block_message(const Message& m, std::size_t count) {
  std::vector<Message> parts;
  parts.reserve(count);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t colon = m.find(':', pos);
    if (colon == Message::npos || colon == pos)
      throw std::runtime_error("group_parties: malformed block message");
    const std::size_t len = std::stoul(m.substr(pos, colon - pos));
    if (colon + 1 + len > m.size())
      throw std::runtime_error("group_parties: malformed block message");
    parts.push_back(m.substr(colon + 1, len));
    pos = colon + 1 + len;
  }
  if (pos != m.size()) throw std::runtime_error("group_parties: malformed block message");
  return parts;
}

Coins base_coins_for(const ProtocolDef& base, const std::vector<PartySet>& blocks,
                     const Coins& vcoins, const PartySet& vparties) {
  Coins bc;
  bc.n = base.n;
  bc.bits_per_party = base.coin_bits;
  bc.stride = (base.coin_bits + 63) / 64;
  bc.words.assign(std::size_t(bc.n) * bc.stride, 0);
  for (int v : vparties) {
    for (std::size_t l = 0; l < blocks[v].size(); ++l) {
      const int p = blocks[v][l];
      for (int b = 0; b < base.coin_bits; ++b)
        if (vcoins.bit(v, static_cast<int>(l) * base.coin_bits + b))
          bc.words[std::size_t(p) * bc.stride + b / 64] |= 1ull << (b % 64);
    }
  }
  return bc;
}

Transcript base_transcript_prefix(const ProtocolDef& base, const std::vector<PartySet>& blocks,
                                  const Transcript& vtx, int rounds) {
  Transcript btx;
  btx.msgs.assign(base.r, std::vector<Message>(base.n));
  for (int i = 0; i < rounds; ++i) {
    for (std::size_t v = 0; v < blocks.size(); ++v) {
      auto parts = split_block_message(vtx.msgs[i][v], blocks[v].size());
      for (std::size_t l = 0; l < blocks[v].size(); ++l) btx.msgs[i][blocks[v][l]] = parts[l];
    }
  }
  return btx;
}

}  // namespace

ProtocolDef majority_coin(int n, int r, bool tie_break_even) {
  return xor_round_protocol("majority", n, r, Combine::majority, tie_break_even);
}

ProtocolDef parity_coin(int n, int r) {
  return xor_round_protocol("parity", n, r, Combine::parity, false);
}

ProtocolDef predetermined_coin(int n, int r) {
  if (n < 2) throw std::invalid_argument("predetermined: need at least two parties");
  if (r < 1) throw std::invalid_argument("predetermined: need at least one round");
  ProtocolDef def;
  def.name = "predetermined(" + std::to_string(n) + "," + std::to_string(r) + ")";
  def.n = n;
  def.r = r;
  def.coin_bits = 1;
  def.next_message = [](int party, int round, const Coins& coins, const Transcript&) {
    if (round > 1) return Message();
    return Message(1, char('0' + coins.bit(party, 0)));
  };
  def.residual_output = [n](const PartySet& survivors, const Coins& coins, const Transcript& tx,
                            int prefix) {
    int v = 0;
    if (prefix == 0) {
      for (int p : survivors) v ^= coins.bit(p, 0);
    } else {
      v = round_coin_from_transcript(tx, n, 1);
    }
    return v;
  };
  return def;
}

void planted_gap_partition(PartySet& ones, PartySet& zeros, PartySet& rest) {
  ones.clear();
  zeros.clear();
  rest.clear();
  for (int p = 0; p < 6; ++p) ones.push_back(p);
  for (int p = 6; p < 12; ++p) zeros.push_back(p);
  for (int p = 12; p < 18; ++p) rest.push_back(p);
}

ProtocolDef planted_gap_protocol() {
  const int n = 18;
  const int r = 5;
  ProtocolDef def;
  def.name = "planted-gap";
  def.n = n;
  def.r = r;
  def.coin_bits = r + 2;  // bits 0..r-1 round bits, bit r residual, bit r+1 drift

  def.next_message = [](int party, int round, const Coins& coins, const Transcript&) {
    return Message(1, char('0' + coins.bit(party, round - 1)));
  };

  // pair backups track the lowest member: parties 0..5 drift to 1 (OR of two
  // coin bits), 6..11 drift to 0 (AND), 12..17 complete fairly
  def.residual_output = [n, r](const PartySet& survivors, const Coins& coins, const Transcript& tx,
                               int prefix) {
    if (prefix == r) return round_coin_from_transcript(tx, n, 1);
    const int q = survivors.front();
    if (q >= 12) {
      int v = 0;
      for (int p : survivors) v ^= coins.bit(p, r);
      return v;
    }
    const int src = prefix == 0 ? r : prefix - 1;
    const int a = coins.bit(q, src);
    const int b = coins.bit(q, r + 1);
    return q < 6 ? (a | b) : (a & b);
  };
  return def;
}

ProtocolDef scripted(const std::string& path, double* exact_bias) {
  auto t = std::make_shared<const ScriptedTables>(load_scripted_tables(path));
  if (exact_bias) {
    const double mean =
        std::accumulate(t->out.begin(), t->out.end(), 0.0) / static_cast<double>(t->out.size());
    *exact_bias = std::abs(mean - 0.5);
  }

  ProtocolDef def;
  def.name = "scripted:" + t->label;
  def.n = t->n;
  def.r = t->r;
  def.coin_bits = t->r + t->residual_bits;

  def.next_message = [](int party, int round, const Coins& coins, const Transcript&) {
    return Message(1, char('0' + coins.bit(party, round - 1)));
  };

  def.residual_output = [t](const PartySet& survivors, const Coins& coins, const Transcript& tx,
                            int prefix) {
    std::uint64_t cpfx = 0;
    for (int j = 1; j <= prefix; ++j)
      cpfx |= static_cast<std::uint64_t>(round_coin_from_transcript(tx, t->n, j)) << (j - 1);
    std::uint64_t d = 0;
    const std::uint64_t res_mask = (1ull << t->residual_bits) - 1;
    for (int p : survivors) d ^= (coins.low_word(p) >> t->r) & res_mask;
    return t->backup[prefix][cpfx | (d << prefix)];
  };
  return def;
}

std::vector<PartySet> group_blocks(int n, int s) {
  if (s < 1) throw std::invalid_argument("group_parties: group size must be positive");
  if (2 * s >= n)
    throw std::invalid_argument("group_parties: group size must be below half the party count");
  const int nv = n / s;
  std::vector<PartySet> blocks(nv);
  for (int v = 0; v < nv; ++v) {
    const int lo = v * s;
    const int hi = v == nv - 1 ? n : lo + s;
    for (int p = lo; p < hi; ++p) blocks[v].push_back(p);
  }
  return blocks;
}

ProtocolDef group_parties(const ProtocolDef& base, int s) {
  auto blocks = group_blocks(base.n, s);
  auto bp = std::make_shared<const ProtocolDef>(base);
  auto bl = std::make_shared<const std::vector<PartySet>>(std::move(blocks));

  ProtocolDef def;
  def.name = "grouped(" + base.name + ",s=" + std::to_string(s) + ")";
  def.n = static_cast<int>(bl->size());
  def.r = base.r;
  def.coin_bits = static_cast<int>(bl->back().size()) * base.coin_bits;

  def.next_message = [bp, bl](int party, int round, const Coins& vcoins, const Transcript& vtx) {
    const Transcript btx = base_transcript_prefix(*bp, *bl, vtx, round - 1);
    const Coins bc = base_coins_for(*bp, *bl, vcoins, {party});
    std::vector<Message> parts;
    parts.reserve((*bl)[party].size());
    for (int p : (*bl)[party]) parts.push_back(bp->next_message(p, round, bc, btx));
    return encode_block_message(parts);
  };

  def.residual_output = [bp, bl](const PartySet& survivors, const Coins& vcoins,
                                 const Transcript& vtx, int prefix) {
    const Transcript btx = base_transcript_prefix(*bp, *bl, vtx, prefix);
    const Coins bc = base_coins_for(*bp, *bl, vcoins, survivors);
    PartySet base_survivors;
    for (int v : survivors)
      base_survivors.insert(base_survivors.end(), (*bl)[v].begin(), (*bl)[v].end());
    return bp->residual_output(base_survivors, bc, btx, prefix);
  };
  return def;
}

ProtocolDef make_protocol(const std::string& name, int n, int r) {
  if (name == "majority") return majority_coin(n, r);
  if (name == "parity") return parity_coin(n, r);
  if (name == "predetermined") return predetermined_coin(n, r);
  if (name == "planted-gap") {
    if ((n != 0 && n != 18) || (r != 0 && r != 5))
      throw std::invalid_argument("planted-gap is fixed at n=18, r=5");
    return planted_gap_protocol();
  }
  if (name.rfind("scripted:", 0) == 0) {
    ProtocolDef def = scripted(name.substr(9));
    if ((n != 0 && n != def.n) || (r != 0 && r != def.r))
      throw std::invalid_argument("scripted table disagrees with the requested n or r");
    return def;
  }
  throw std::invalid_argument("unknown protocol: " + name);
}

}  // namespace cfl

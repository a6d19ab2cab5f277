#pragma once

#include <string>
#include <vector>

#include "cfl/protocol.hpp"

namespace cfl {

// r rounds of one broadcast bit per party; round coin = XOR of the bits,
// output = majority of the round coins, backups complete with per-round
// residual XOR coins. r must be odd unless tie_break_even is set (ties then
// resolve to the final vote).
ProtocolDef majority_coin(int n, int r, bool tie_break_even = false);

// same wiring with XOR instead of majority; any r >= 1
ProtocolDef parity_coin(int n, int r);

// output fixed by the round-1 broadcast; later rounds are empty
ProtocolDef predetermined_coin(int n, int r);

// 18-party, 5-round protocol whose pair backups drift with the class of the
// lowest member: parties 0..5 drift to 1, 6..11 drift to 0, 12..17 neutral
ProtocolDef planted_gap_protocol();
void planted_gap_partition(PartySet& ones, PartySet& zeros, PartySet& rest);

// table-driven protocol from a JSON description; exact_bias (if non-null)
// receives |mean(out) - 1/2| computed from the table
ProtocolDef scripted(const std::string& path, double* exact_bias = nullptr);

// ⌊n/s⌋ virtual parties, each simulating a block of s base parties (the last
// block absorbs the remainder); rejected when s >= n/2
ProtocolDef group_parties(const ProtocolDef& base, int s);
std::vector<PartySet> group_blocks(int n, int s);

// names: "majority", "parity", "predetermined", "planted-gap", "scripted:<path>"
ProtocolDef make_protocol(const std::string& name, int n, int r);

}  // namespace cfl

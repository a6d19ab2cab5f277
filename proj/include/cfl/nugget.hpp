#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfl/protocol.hpp"
#include "cfl/rng.hpp"

namespace cfl {

// smallest k with C(n,k) >= r * log2(r)^(2k); throws when no k <= n qualifies
int smallest_k(int n, int r);

// c_ell = (n-1)(n-2)...(n-k+ell) / ((k-1)(k-2)...ell); c_k = 1, c_1 = C(n-1, k-1)
double chain_coefficient(int n, int k, int ell);

// {1, 1+1/r, ..., r}; a coarsening factor > 1 keeps only geometrically spaced
// points (always retaining 1 and r)
std::vector<double> rho_grid(int r, double coarsening = 1.0);

struct NuggetPartition {
  PartySet a1, a0, p;
};

struct DescentStep {
  int level = 0;  // the level whose pair test fired
  int z = 0;
  int h = -1;
  int h_prime = -1;
  double rho = 1;
  double q_hat = 0;  // empirical probability backing the accepted rho
};

struct NuggetProvenance {
  NuggetPartition partition;
  PartySet q;            // common fixed parties accumulated by the descent
  int p1 = -1, p0 = -1;  // the diverging pair fixed in s1 / s0
  int c_side = -1;       // which A side the chain's free singleton ranges over
  bool top_gap_fired = false;
  double top_rho = 0;
  double top_q_hat = 0;
  // a k=1 protocol whose top-level gap test fires cannot satisfy the level-1
  // structural conditions (one side's h-selections are empty), so the result
  // falls back to k+1 and this flag records the detected gap
  bool direct_k1_gap_detected = false;
  double rho_coarsening = 1;
  std::vector<DescentStep> descent;
};

struct NuggetResult {
  int n = 0, r = 0, k = 0;
  int k_star = 0;
  double rho_star = 1;
  TupleSet s1, s0;
  PartySet h;
  NuggetProvenance prov;
};

// Iterative gap/similarity scan over a random (or supplied) equal-size
// partition: estimates the top-level gap probability and the per-pair
// similarity probabilities from sample_budget honest executions per level,
// accepting a test when its empirical probability clears the required one
// minus epsilon. Scans rho descending (largest accepted wins); pair tests
// scan z=1 before z=0 and party pairs lexicographically.
NuggetResult nugget_finder(const ProtocolDef& proto, std::int64_t sample_budget, double epsilon,
                           SeedStream& stream, const NuggetPartition* partition_override = nullptr,
                           double rho_coarsening = 1.0);

// exact set-combinatorial conditions for the found k_star; throws on violation
void verify_nugget_structure(const NuggetResult& res);

// the deviation scale the found nugget certifies:
// (rho*/256 sqrt r) * sqrt(c_{k*}) / (64 log2 r)^(k - k*); defined for k* <= k
double nugget_gamma(const NuggetResult& res);

void save_nugget(const NuggetResult& res, const std::string& path);
NuggetResult load_nugget(const std::string& path);

}  // namespace cfl

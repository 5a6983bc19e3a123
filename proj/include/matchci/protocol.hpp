#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "matchci/errors.hpp"
#include "matchci/estimators.hpp"

namespace matchci {

// One planned comparison. For impostor plans id_a < id_b; for genuine plans
// id_a == id_b and inst_a < inst_b. Instance indices are per-identity,
// starting at 0; iteration is 1-based.
struct ProtocolSelection {
  std::int64_t iteration = 0;
  int id_a = 0;
  int inst_a = 0;
  int id_b = 0;
  int inst_b = 0;
};

struct ProtocolPlan {
  Metric target = Metric::far;
  std::vector<ProtocolSelection> selections;
  std::int64_t objective_value = 0;  // sharing objective of the realized plan
  bool truncated = false;  // budget exceeded the number of distinct comparisons
};

// Number of ordered index triples (i, j, k), j != i, k != i and k != j, with
// both (i,j) and (i,k) selected: the variance-driving count of comparison
// couples that share an index. Pairs may repeat (multiplicities multiply);
// a pair must join two distinct indices.
std::int64_t sharing_objective(const std::vector<std::pair<int, int>>& pairs);

// Greedy impostor-comparison plan: each step picks the unused identity pair
// adding the least to the sharing objective (the pair with the fewest prior
// visits), ties broken toward balanced visits, then larger remaining
// instance-pair capacity, then keeping the least-visited identities pairable,
// then ascending identity indices. Once every identity pair has been visited
// the cycle restarts and repeat visits descend to fresh instance pairs,
// chosen by the same rule applied to instance visit counts.
ProtocolPlan plan_far_protocol(const std::vector<int>& m, std::int64_t budget);

// Genuine-comparison plan: identities are swept round-robin in decreasing
// order of within-identity pair count, and each visit picks the least-visited
// unused instance pair of that identity.
ProtocolPlan plan_frr_protocol(const std::vector<int>& m, std::int64_t budget);

}  // namespace matchci

#include "matchci/protocol.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_set>

namespace matchci {

namespace {

void validate_counts(const std::vector<int>& m, std::int64_t budget, const char* who) {
  if (budget < 1) throw PreconditionError(std::string(who) + ": budget must be positive");
  if (m.empty()) throw PreconditionError(std::string(who) + ": no identities");
  for (const int mi : m)
    if (mi < 1) throw PreconditionError(std::string(who) + ": instance counts must be positive");
}

// Selection keys order candidates by (visit sum, visit max, -size, index,
// index); the smallest key wins, so fewer prior visits come first, balanced
// visits beat lopsided ones, and bigger pairs then lower indices break ties.
using Key = std::array<std::int64_t, 5>;

// Candidates tied on the key above can still differ in how they constrain
// later picks: selecting a pair may leave the least-visited identities with
// no unused pair among themselves, forcing an unbalanced step later. Counts
// the selectable pairs left inside the post-selection minimum-visit class,
// so the caller can prefer candidates that keep that class pairable.
template <class Selectable>
std::int64_t pairable_after(const std::vector<std::int64_t>& visits, int pi, int pj,
                            Selectable selectable) {
  const int n = static_cast<int>(visits.size());
  std::int64_t low = std::numeric_limits<std::int64_t>::max();
  for (int i = 0; i < n; ++i)
    low = std::min(low, visits[i] + (i == pi || i == pj ? 1 : 0));
  std::int64_t count = 0;
  for (int a = 0; a < n; ++a) {
    if (visits[a] + (a == pi || a == pj ? 1 : 0) != low) continue;
    for (int b = a + 1; b < n; ++b) {
      if (visits[b] + (b == pi || b == pj ? 1 : 0) != low) continue;
      if ((a == pi && b == pj) || !selectable(a, b)) continue;
      ++count;
    }
  }
  return count;
}

// Two-phase greedy pick over one node set: phase one finds the best primary
// key, phase two breaks remaining ties by pairability (capped candidate list
// keeps this quadratic in practice), then ascending indices.
template <class Selectable, class Capacity>
std::pair<int, int> pick_pair(const std::vector<std::int64_t>& visits,
                              Selectable selectable, Capacity capacity) {
  const int n = static_cast<int>(visits.size());
  bool found = false;
  Key best{};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (!selectable(i, j)) continue;
      const Key key{visits[i] + visits[j], std::max(visits[i], visits[j]),
                    -capacity(i, j), i, j};
      if (!found || key < best) {
        best = key;
        found = true;
      }
    }
  if (!found) return {-1, -1};

  constexpr int kMaxTied = 64;
  int best_i = -1, best_j = -1;
  std::int64_t best_open = -1;
  int examined = 0;
  for (int i = 0; i < n && examined < kMaxTied; ++i)
    for (int j = i + 1; j < n && examined < kMaxTied; ++j) {
      if (!selectable(i, j)) continue;
      const Key key{visits[i] + visits[j], std::max(visits[i], visits[j]),
                    -capacity(i, j), best[3], best[4]};
      if (key != best) continue;  // indices copied: compare the first three only
      ++examined;
      const std::int64_t open = pairable_after(visits, i, j, selectable);
      if (open > best_open) {  // ascending order of the scan settles exact ties
        best_open = open;
        best_i = i;
        best_j = j;
      }
    }
  return {best_i, best_j};
}

}  // namespace

std::int64_t sharing_objective(const std::vector<std::pair<int, int>>& pairs) {
  std::map<std::pair<int, int>, std::int64_t> count;
  for (const auto& [a, b] : pairs) {
    if (a == b)
      throw PreconditionError("sharing_objective: a pair must join two distinct indices");
    count[{std::min(a, b), std::max(a, b)}] += 1;
  }
  std::map<int, std::pair<std::int64_t, std::int64_t>> per;  // index -> (sum b, sum b^2)
  for (const auto& [pair, c] : count) {
    per[pair.first].first += c;
    per[pair.first].second += c * c;
    per[pair.second].first += c;
    per[pair.second].second += c * c;
  }
  std::int64_t total = 0;
  for (const auto& [index, rs] : per) total += rs.first * rs.first - rs.second;
  return total;
}

ProtocolPlan plan_far_protocol(const std::vector<int>& m, std::int64_t budget) {
  validate_counts(m, budget, "plan_far_protocol");
  const int g = static_cast<int>(m.size());
  if (g < 2) throw PreconditionError("plan_far_protocol: requires at least two identities");

  std::vector<std::int64_t> id_visits(static_cast<std::size_t>(g), 0);
  std::vector<std::vector<std::int64_t>> inst_visits;
  for (const int mi : m) inst_visits.emplace_back(static_cast<std::size_t>(mi), 0);
  // Per identity pair: how many instance pairs are taken, which ones, and
  // whether the pair was already visited in the current pass over the pairs.
  std::vector<std::int64_t> taken(static_cast<std::size_t>(g) * g, 0);
  std::vector<std::unordered_set<std::int64_t>> used(static_cast<std::size_t>(g) * g);
  std::vector<char> in_cycle(static_cast<std::size_t>(g) * g, 0);

  const auto remaining = [&](int i, int j) {
    return static_cast<std::int64_t>(m[i]) * m[j] -
           taken[static_cast<std::size_t>(i) * g + j];
  };
  const auto selectable = [&](int i, int j) {
    return remaining(i, j) > 0 && !in_cycle[static_cast<std::size_t>(i) * g + j];
  };

  ProtocolPlan plan;
  plan.target = Metric::far;
  std::vector<std::pair<int, int>> id_pairs;
  while (static_cast<std::int64_t>(plan.selections.size()) < budget) {
    const auto [best_i, best_j] = pick_pair(id_visits, selectable, remaining);
    if (best_i < 0) {
      bool any_capacity = false;
      for (int i = 0; i < g && !any_capacity; ++i)
        for (int j = i + 1; j < g && !any_capacity; ++j) any_capacity = remaining(i, j) > 0;
      if (!any_capacity) {
        plan.truncated = true;
        break;
      }
      std::fill(in_cycle.begin(), in_cycle.end(), 0);  // every pair visited: next pass
      continue;
    }

    const std::size_t p = static_cast<std::size_t>(best_i) * g + best_j;
    int best_a = -1, best_b = -1;
    Key best_inst{};
    for (int a = 0; a < m[best_i]; ++a)
      for (int b = 0; b < m[best_j]; ++b) {
        if (used[p].count(static_cast<std::int64_t>(a) * m[best_j] + b)) continue;
        const std::int64_t va = inst_visits[best_i][a];
        const std::int64_t vb = inst_visits[best_j][b];
        const Key key{va + vb, std::max(va, vb), 0, a, b};
        if (best_a < 0 || key < best_inst) {
          best_inst = key;
          best_a = a;
          best_b = b;
        }
      }

    used[p].insert(static_cast<std::int64_t>(best_a) * m[best_j] + best_b);
    taken[p] += 1;
    in_cycle[p] = 1;
    id_visits[best_i] += 1;
    id_visits[best_j] += 1;
    inst_visits[best_i][best_a] += 1;
    inst_visits[best_j][best_b] += 1;
    plan.selections.push_back({static_cast<std::int64_t>(plan.selections.size()) + 1,
                               best_i, best_a, best_j, best_b});
    id_pairs.emplace_back(best_i, best_j);
  }
  plan.objective_value = sharing_objective(id_pairs);
  return plan;
}

ProtocolPlan plan_frr_protocol(const std::vector<int>& m, std::int64_t budget) {
  validate_counts(m, budget, "plan_frr_protocol");
  const int g = static_cast<int>(m.size());

  std::vector<int> order;
  for (int i = 0; i < g; ++i)
    if (m[i] >= 2) order.push_back(i);
  if (order.empty())
    throw PreconditionError("plan_frr_protocol: no identity has two instances");
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return m[a] > m[b]; });

  std::vector<std::vector<std::int64_t>> inst_visits;
  for (const int mi : m) inst_visits.emplace_back(static_cast<std::size_t>(mi), 0);
  std::vector<std::unordered_set<std::int64_t>> used(static_cast<std::size_t>(g));
  std::vector<std::int64_t> taken(static_cast<std::size_t>(g), 0);
  std::vector<int> offset(m.size() + 1, 0);
  for (std::size_t i = 0; i < m.size(); ++i) offset[i + 1] = offset[i] + m[i];

  ProtocolPlan plan;
  plan.target = Metric::frr;
  std::vector<std::pair<int, int>> inst_pairs;  // global instance indices
  std::size_t pos = 0;
  std::size_t idle = 0;  // identities skipped in a row (all exhausted check)
  while (static_cast<std::int64_t>(plan.selections.size()) < budget) {
    if (idle == order.size()) {
      plan.truncated = true;
      break;
    }
    const int id = order[pos];
    pos = (pos + 1) % order.size();
    const std::int64_t cap = static_cast<std::int64_t>(m[id]) * (m[id] - 1) / 2;
    if (taken[static_cast<std::size_t>(id)] >= cap) {
      ++idle;
      continue;
    }
    idle = 0;

    const auto unused = [&](int a, int b) {
      return used[static_cast<std::size_t>(id)].count(
                 static_cast<std::int64_t>(a) * m[id] + b) == 0;
    };
    const auto [best_a, best_b] =
        pick_pair(inst_visits[static_cast<std::size_t>(id)], unused,
                  [](int, int) { return std::int64_t{0}; });

    used[static_cast<std::size_t>(id)].insert(
        static_cast<std::int64_t>(best_a) * m[id] + best_b);
    taken[static_cast<std::size_t>(id)] += 1;
    inst_visits[id][best_a] += 1;
    inst_visits[id][best_b] += 1;
    plan.selections.push_back({static_cast<std::int64_t>(plan.selections.size()) + 1, id,
                               best_a, id, best_b});
    inst_pairs.emplace_back(offset[static_cast<std::size_t>(id)] + best_a,
                            offset[static_cast<std::size_t>(id)] + best_b);
  }
  plan.objective_value = sharing_objective(inst_pairs);
  return plan;
}

}  // namespace matchci

#pragma once

#include <span>
#include <string>
#include <vector>

#include "cfsync/clustering.hpp"

namespace cfsync {

// Pilot p is shared by the slaves in groups[p].
struct PilotAssignment {
    int reuse_cap = 1;  // N^max
    std::vector<std::vector<int>> groups;

    int tau() const noexcept { return static_cast<int>(groups.size()); }
    // node id -> pilot index, -1 for nodes without a pilot.
    std::vector<int> pilot_map(int num_nodes) const;
    void normalize();  // sort members, drop empty groups

    static PilotAssignment orthogonal(std::span<const int> slaves);
};

struct Violation {
    std::string rule;  // "same-cluster-sharing", "reuse-cap", "coverage", "budget"
    std::string message;
};

// Re-checks every rule against `plan`. The budget check 2 K_C + tau <= L_S
// is skipped when overhead_budget < 0.
std::vector<Violation> audit_assignment(const PilotAssignment& a, const ClusterPlan& plan, int overhead_budget = -1);

}  // namespace cfsync

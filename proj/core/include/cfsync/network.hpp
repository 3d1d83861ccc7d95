#pragma once

// System-level view of one deployment: every directed link gets a
// deterministic channel realization and true timing offset, so different
// clusterings and pilot assignments of the same deployment are compared on
// identical links.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "cfsync/assignment.hpp"
#include "cfsync/crb.hpp"
#include "cfsync/geometry.hpp"

namespace cfsync {

class NetworkModel {
public:
    NetworkModel(Scenario scenario, std::vector<Point2> nodes, std::uint64_t seed);

    const Scenario& scenario() const noexcept { return scenario_; }
    const std::vector<Point2>& nodes() const noexcept { return nodes_; }
    int num_nodes() const noexcept { return static_cast<int>(nodes_.size()); }
    const LinkTable& links() const noexcept { return links_; }
    const ObservationWindow& window() const noexcept { return window_; }
    std::uint64_t seed() const noexcept { return seed_; }

    // Sequence used to evaluate every link's bound. Pilot families are
    // assumed interchangeable, so which index a group gets does not matter.
    const PilotSequence& reference_pilot() const noexcept { return pilot_; }

    // Channel of slave -> master with unit-modulus small-scale terms.
    LinkChannel channel(int from, int to) const;
    double true_to_chips(int from, int to) const;
    double true_cfo_norm(int from, int to) const;
    InterfererStat interferer(int from, int master) const;

    // M sigma2 / ((2/3) N): noise seen against pilot-averaged traces.
    double noise_level() const noexcept { return noise_level_; }

private:
    Scenario scenario_;
    std::vector<Point2> nodes_;
    std::uint64_t seed_;
    LinkTable links_;
    ObservationWindow window_;
    PilotSequence pilot_;
    double noise_level_;
};

struct SumCrb {
    double to = 0.0;   // sum of TO bounds, chips^2
    double cfo = 0.0;  // sum of CFO bounds, normalized^2
    int num_links = 0;
    double total() const noexcept { return to + cfo; }
};

// Sum over slaves of CRB_to + CRB_cfo at their masters. Link bounds are
// memoised on (slave, master, co-pilot set).
class CrbEvaluator {
public:
    explicit CrbEvaluator(const NetworkModel& net) : net_(net) {}

    FisherReport link(int slave, int master, std::span<const int> interferers);
    // `assignment == nullptr` means orthogonal pilots.
    SumCrb operator()(const ClusterPlan& plan, const PilotAssignment* assignment);

    std::size_t cache_size() const noexcept { return cache_.size(); }

private:
    const NetworkModel& net_;
    std::map<std::vector<int>, std::pair<double, double>> cache_;
};

// Deployment with a central unit: nodes 0..num_aps-1 are APs and node num_aps
// is the unit, master of a single cluster holding everybody.
ClusterPlan central_plan(int num_aps);

}  // namespace cfsync

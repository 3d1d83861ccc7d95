#pragma once

// Pilot sharing under a total overhead budget L_S = 2 K_C + tau.
//
// Slaves of one cluster must use different pilots; each pilot is reused at
// most N^max times. The starting point is a Dsatur colouring of the
// same-cluster conflict graph; a swap-matching random walk then looks for a
// better sharing pattern, and the pilot count is raised one at a time while
// the budget allows.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "cfsync/assignment.hpp"
#include "cfsync/clustering.hpp"
#include "cfsync/network.hpp"

namespace cfsync {

// b(a, b) = 1 iff slaves a and b belong to the same cluster.
class ConflictMatrix {
public:
    static ConflictMatrix from_plan(const ClusterPlan& plan);
    ConflictMatrix(std::vector<int> slaves, std::vector<std::uint8_t> dense);

    int size() const noexcept { return static_cast<int>(slaves_.size()); }
    const std::vector<int>& slaves() const noexcept { return slaves_; }
    // By position in slaves().
    bool operator()(int a, int b) const { return b_[static_cast<std::size_t>(a) * slaves_.size() + static_cast<std::size_t>(b)] != 0; }
    int degree(int a) const;

private:
    std::vector<int> slaves_;
    std::vector<std::uint8_t> b_;
};

// Proper colouring with at most `reuse_cap` vertices per colour. Vertex
// order: saturation, then degree, then position.
PilotAssignment dsatur_color(const ConflictMatrix& b, int reuse_cap);

// tau = largest cluster slave count, N^max = ceil(|S| / tau), then Dsatur.
PilotAssignment initial_assignment(const ClusterPlan& plan);

struct SinrRequirement {
    double global_db = 15.0;
    std::map<int, double> per_slave_db;
    double for_slave(int id) const;
};

// Pilot-averaged SINR of slave i at its master j:
// beta_ij / (sum over co-pilot i' of beta_i'j + M sigma2 / ((2/3) N)).
class SinrModel {
public:
    SinrModel(const NetworkModel& net, const ClusterPlan& plan);

    double sinr_db(int slave, std::span<const int> group) const;
    // Keyed by node id; -inf for masters.
    std::vector<double> pair_sinr(const PilotAssignment& a) const;
    const ClusterPlan& plan() const noexcept { return plan_; }
    const NetworkModel& network() const noexcept { return net_; }

private:
    const NetworkModel& net_;
    const ClusterPlan& plan_;
};

// Sum of slave SINRs (dB) when every slave meets its requirement, else 0.
double objective(const std::vector<double>& sinr_by_node, std::span<const int> slaves, const SinrRequirement& req);
double objective(const PilotAssignment& a, const SinrModel& model, const SinrRequirement& req);

// 1 / (1 + exp(-T (new - old))).
double swap_probability(double obj_new, double obj_old, double temperature);

struct SwapConfig {
    int n2_max = 2000;
    double temperature = 0.01;
    SinrRequirement requirement;
};

struct SwapResult {
    PilotAssignment best;
    double best_objective = 0.0;
    double best_sinr_sum = 0.0;  // tie-breaker when no assignment is feasible
    PilotAssignment initial;
    std::vector<PilotAssignment> level_bests;  // best found at each tau
    std::vector<double> level_objectives;
};

SwapResult swap_matching_search(const PilotAssignment& initial, const SinrModel& model, int overhead_budget,
                                const SwapConfig& cfg, std::uint64_t seed);

// Deterministic first-improvement swap descent at fixed tau.
PilotAssignment greedy_swap_improve(const PilotAssignment& start, const SinrModel& model, const SinrRequirement& req);

struct OptimizeConfig {
    int overhead_budget = 40;
    int min_clusters = 2;
    int max_clusters = -1;  // default K - 1
    SwapConfig swap;
};

struct OptimizeCandidate {
    int num_clusters = 0;
    int tau = 0;
    SumCrb crb;
};

struct OptimizeResult {
    ClusterPlan plan;
    PilotAssignment assignment;
    SumCrb crb;
    std::vector<OptimizeCandidate> explored;
    int overhead() const noexcept { return 2 * plan.num_clusters + assignment.tau(); }
};

// Outer loop over K_C: clusters_at(K_C), swap search, and the true sum of
// CRBs of every candidate it produced; keeps the lowest.
OptimizeResult optimize_all(const NetworkModel& net, const OptimizeConfig& cfg, std::uint64_t seed);

}  // namespace cfsync

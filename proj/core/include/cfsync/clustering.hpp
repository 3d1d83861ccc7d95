#pragma once

// Cluster classification: SINR-derived distance bound, K-means on the
// sum-of-distances objective, medoid masters, and the adaptive loop that
// grows the cluster count until every slave is close enough to its master.

#include <cstdint>
#include <span>
#include <vector>

#include "cfsync/geometry.hpp"
#include "cfsync/waveform.hpp"

namespace cfsync {

struct ClusterPlan {
    int num_clusters = 0;
    std::vector<int> assignment;  // node id -> cluster index
    std::vector<int> masters;     // cluster index -> master node id, -1 if unset
    std::vector<double> per_cluster_max_dist;  // km, master to farthest member

    int num_nodes() const noexcept { return static_cast<int>(assignment.size()); }
    std::vector<std::vector<int>> members() const;
    // Non-master nodes in ascending id order.
    std::vector<int> slaves() const;
    bool is_master(int id) const;
    int master_of(int id) const { return masters.at(static_cast<std::size_t>(assignment.at(static_cast<std::size_t>(id)))); }
    int cluster_of(int id) const { return assignment.at(static_cast<std::size_t>(id)); }
    double max_distance() const;

    // Exhaustive, non-overlapping, one master per cluster that is a member.
    void validate() const;
};

struct DistanceBound {
    double dis_max_km = 0.0;
};

// Trace term Tr{E[F S A S^H F^H]} per unit main-path gain.
struct PilotStats {
    double trace = 0.0;

    // Pilot-averaged BPSK value (2/3) N.
    static PilotStats bpsk_average(int pilot_len);
    // Exact value for one pilot and main delay.
    static PilotStats from_pilot(const PilotSequence& pilot, int eta, const ObservationWindow& window,
                                 double main_delay_chips = 0.0);
};

// 10 log10(Tr D / (M sigma2)) for the main path of `link` alone.
double ideal_sinr_db(const LinkChannel& link, const PilotSequence& pilot, const ObservationWindow& window, int eta,
                     double noise_sigma2);

// Largest master-slave distance meeting sinr_min with an ideal main path of
// unit gain. Uses the far slope in closed form and falls back to the nearer
// slopes when the bound lands inside d1. Throws Infeasible if no distance
// reaches the threshold.
DistanceBound max_intra_distance(double sinr_min_db, const PilotStats& stats, const Scenario& s);

// Sum over nodes of the distance to their cluster centre.
double partition_objective(std::span<const Point2> points, const ClusterPlan& plan, std::span<const Point2> centres);

struct KmeansOptions {
    int max_iterations = 100;
    int max_restarts = 8;
    std::vector<double>* objective_trace = nullptr;  // filled with the objective after each iteration
};

// Lloyd iterations on the sum of Euclidean distances; centres are geometric
// medians. Farthest-point seeding from `seed`. Masters are left unset.
ClusterPlan kmeans_partition(std::span<const Point2> points, int num_clusters, std::uint64_t seed,
                             const KmeansOptions& opts = {});

// Member minimizing the summed distance to the others; ties to lowest id.
int select_master(std::span<const Point2> points, std::span<const int> members);

// Fill masters with medoids and compute per-cluster distances.
void assign_medoid_masters(ClusterPlan& plan, std::span<const Point2> points);
// Fill masters uniformly at random within each cluster.
void assign_random_masters(ClusterPlan& plan, std::span<const Point2> points, std::uint64_t seed);
void update_cluster_distances(ClusterPlan& plan, std::span<const Point2> points);

// K-means plus medoid masters at a fixed cluster count; the seed used for
// count k is derive_seed(seed, {k}).
ClusterPlan clusters_at(std::span<const Point2> points, int num_clusters, std::uint64_t seed);

// Grow the cluster count from `start_clusters` until every master-slave
// distance is within dis_max. Throws Infeasible once 2 K_C exceeds the budget.
ClusterPlan adaptive_clusters(std::span<const Point2> points, const DistanceBound& bound, int overhead_budget,
                              std::uint64_t seed, int start_clusters = 2);

// Complete-linkage agglomerative clustering cut at `num_clusters`.
ClusterPlan agglomerative_partition(std::span<const Point2> points, int num_clusters);

}  // namespace cfsync

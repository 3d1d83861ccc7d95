#include "cfsync/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cfsync/crb.hpp"
#include "cfsync/error.hpp"
#include "cfsync/rng.hpp"

namespace cfsync {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

Point2 geometric_median(std::span<const Point2> points, std::span<const int> members, Point2 start) {
    // Weiszfeld; a step that would not lower the summed distance is dropped.
    auto cost = [&](const Point2& c) {
        double s = 0.0;
        for (int m : members) s += distance(points[static_cast<std::size_t>(m)], c);
        return s;
    };
    Point2 c = start;
    double best = cost(c);
    for (int it = 0; it < 200; ++it) {
        double wx = 0.0, wy = 0.0, w = 0.0;
        for (int m : members) {
            const auto& p = points[static_cast<std::size_t>(m)];
            const double d = distance(p, c);
            if (d < 1e-12) continue;
            wx += p.x / d;
            wy += p.y / d;
            w += 1.0 / d;
        }
        if (w == 0.0) break;
        Point2 next{wx / w, wy / w};
        const double nc = cost(next);
        if (!(nc < best)) break;
        const double moved = distance(next, c);
        c = next;
        best = nc;
        if (moved < 1e-12) break;
    }
    return c;
}

std::vector<int> farthest_point_seeds(std::span<const Point2> points, int k, Rng& rng) {
    const int n = static_cast<int>(points.size());
    std::vector<int> seeds;
    std::uniform_int_distribution<int> pick(0, n - 1);
    seeds.push_back(pick(rng));
    std::vector<double> nearest(static_cast<std::size_t>(n), kInf);
    while (static_cast<int>(seeds.size()) < k) {
        const auto& last = points[static_cast<std::size_t>(seeds.back())];
        int arg = -1;
        double far = -1.0;
        for (int i = 0; i < n; ++i) {
            auto& d = nearest[static_cast<std::size_t>(i)];
            d = std::min(d, distance(points[static_cast<std::size_t>(i)], last));
            if (d > far) {
                far = d;
                arg = i;
            }
        }
        seeds.push_back(arg);
    }
    return seeds;
}

}  // namespace

std::vector<std::vector<int>> ClusterPlan::members() const {
    std::vector<std::vector<int>> m(static_cast<std::size_t>(num_clusters));
    for (int i = 0; i < num_nodes(); ++i) m.at(static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])).push_back(i);
    return m;
}

std::vector<int> ClusterPlan::slaves() const {
    std::vector<int> s;
    for (int i = 0; i < num_nodes(); ++i)
        if (!is_master(i)) s.push_back(i);
    return s;
}

bool ClusterPlan::is_master(int id) const {
    return std::find(masters.begin(), masters.end(), id) != masters.end();
}

double ClusterPlan::max_distance() const {
    double m = 0.0;
    for (double d : per_cluster_max_dist) m = std::max(m, d);
    return m;
}

void ClusterPlan::validate() const {
    require(num_clusters >= 1, "plan needs at least one cluster");
    require(static_cast<int>(masters.size()) == num_clusters, "plan needs one master per cluster");
    std::vector<int> size(static_cast<std::size_t>(num_clusters), 0);
    for (int c : assignment) {
        require(c >= 0 && c < num_clusters, "cluster index out of range");
        ++size[static_cast<std::size_t>(c)];
    }
    for (int k = 0; k < num_clusters; ++k) {
        require(size[static_cast<std::size_t>(k)] > 0, "cluster " + std::to_string(k) + " is empty");
        const int m = masters[static_cast<std::size_t>(k)];
        require(m >= 0 && m < num_nodes(), "cluster " + std::to_string(k) + " has no master");
        require(assignment[static_cast<std::size_t>(m)] == k,
                "master " + std::to_string(m) + " is not a member of cluster " + std::to_string(k));
    }
}

PilotStats PilotStats::bpsk_average(int pilot_len) {
    require(pilot_len >= 2, "pilot length must be >= 2");
    return {2.0 * pilot_len / 3.0};
}

PilotStats PilotStats::from_pilot(const PilotSequence& pilot, int eta, const ObservationWindow& window,
                                  double main_delay_chips) {
    const RVector d = contamination_diag(pilot, SecondMomentA(main_delay_chips, eta), 1.0, window.num_samples);
    return {d.sum()};
}

double ideal_sinr_db(const LinkChannel& link, const PilotSequence& pilot, const ObservationWindow& window, int eta,
                     double noise_sigma2) {
    require(noise_sigma2 > 0.0, "noise variance must be > 0");
    const auto& main = link.taps().front();
    const double x = main.delay_s / pilot.chip_interval();
    const double c = x - std::floor(x);
    const double gain = main.gain * link.beta();
    const double tr = PilotStats::from_pilot(pilot, eta, window, c).trace * gain;
    return 10.0 * std::log10(tr / (window.num_samples * noise_sigma2));
}

DistanceBound max_intra_distance(double sinr_min_db, const PilotStats& stats, const Scenario& s) {
    require(stats.trace > 0.0, "pilot trace must be > 0");
    const int m = s.window().num_samples;
    const double beta_min = m * s.noise_sigma2 * std::pow(10.0, sinr_min_db / 10.0) / stats.trace;
    // Largest admissible path loss once the transmit power is accounted for.
    const double pl_max = 10.0 * std::log10(s.tx_power_w / beta_min);

    const double far = std::pow(10.0, (pl_max - s.loss_db) / 35.0);
    if (far > s.d1_km) return {far};
    const double near = std::pow(10.0, (pl_max - s.loss_db - 15.0 * std::log10(s.d1_km)) / 20.0);
    if (near > s.d0_km) return {near};
    if (pl_max >= path_loss_db(s.d0_km, s)) return {s.d0_km};
    throw Infeasible("SINR threshold " + std::to_string(sinr_min_db) + " dB is unreachable at any distance");
}

double partition_objective(std::span<const Point2> points, const ClusterPlan& plan, std::span<const Point2> centres) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        s += distance(points[i], centres[static_cast<std::size_t>(plan.assignment[i])]);
    return s;
}

ClusterPlan kmeans_partition(std::span<const Point2> points, int num_clusters, std::uint64_t seed,
                             const KmeansOptions& opts) {
    const int n = static_cast<int>(points.size());
    require(num_clusters >= 1 && num_clusters <= n, "cluster count must be in [1, number of APs]");
    Rng rng(seed);

    for (int attempt = 0; attempt <= opts.max_restarts; ++attempt) {
        if (opts.objective_trace) opts.objective_trace->clear();
        std::vector<Point2> centres;
        for (int s : farthest_point_seeds(points, num_clusters, rng)) centres.push_back(points[static_cast<std::size_t>(s)]);

        ClusterPlan plan;
        plan.num_clusters = num_clusters;
        plan.assignment.assign(static_cast<std::size_t>(n), -1);
        bool empty = false;
        for (int it = 0; it < opts.max_iterations; ++it) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                int arg = 0;
                double best = kInf;
                for (int k = 0; k < num_clusters; ++k) {
                    const double d = distance(points[static_cast<std::size_t>(i)], centres[static_cast<std::size_t>(k)]);
                    if (d < best) {
                        best = d;
                        arg = k;
                    }
                }
                auto& a = plan.assignment[static_cast<std::size_t>(i)];
                // Keep the current cluster on ties so the objective cannot cycle.
                const int cur = a;
                if (cur >= 0 && distance(points[static_cast<std::size_t>(i)], centres[static_cast<std::size_t>(cur)]) <= best)
                    continue;
                if (a != arg) changed = true;
                a = arg;
            }
            const auto groups = plan.members();
            empty = std::any_of(groups.begin(), groups.end(), [](const auto& g) { return g.empty(); });
            if (empty) break;
            for (int k = 0; k < num_clusters; ++k)
                centres[static_cast<std::size_t>(k)] = geometric_median(points, groups[static_cast<std::size_t>(k)],
                                                                        centres[static_cast<std::size_t>(k)]);
            if (opts.objective_trace) opts.objective_trace->push_back(partition_objective(points, plan, centres));
            if (!changed && it > 0) break;
        }
        if (!empty) {
            plan.masters.assign(static_cast<std::size_t>(num_clusters), -1);
            return plan;
        }
    }
    throw Error("k-means left an empty cluster after " + std::to_string(opts.max_restarts + 1) + " attempts");
}

int select_master(std::span<const Point2> points, std::span<const int> members) {
    require(!members.empty(), "cluster must be nonempty");
    int arg = -1;
    double best = kInf;
    for (int m : members) {
        double s = 0.0;
        for (int o : members) s += distance(points[static_cast<std::size_t>(m)], points[static_cast<std::size_t>(o)]);
        if (s < best || (s == best && m < arg)) {
            best = s;
            arg = m;
        }
    }
    return arg;
}

void update_cluster_distances(ClusterPlan& plan, std::span<const Point2> points) {
    plan.per_cluster_max_dist.assign(static_cast<std::size_t>(plan.num_clusters), 0.0);
    for (int i = 0; i < plan.num_nodes(); ++i) {
        const int k = plan.assignment[static_cast<std::size_t>(i)];
        const int m = plan.masters[static_cast<std::size_t>(k)];
        auto& d = plan.per_cluster_max_dist[static_cast<std::size_t>(k)];
        d = std::max(d, distance(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(m)]));
    }
}

void assign_medoid_masters(ClusterPlan& plan, std::span<const Point2> points) {
    const auto groups = plan.members();
    plan.masters.assign(static_cast<std::size_t>(plan.num_clusters), -1);
    for (int k = 0; k < plan.num_clusters; ++k)
        plan.masters[static_cast<std::size_t>(k)] = select_master(points, groups[static_cast<std::size_t>(k)]);
    update_cluster_distances(plan, points);
}

void assign_random_masters(ClusterPlan& plan, std::span<const Point2> points, std::uint64_t seed) {
    const auto groups = plan.members();
    Rng rng(seed);
    plan.masters.assign(static_cast<std::size_t>(plan.num_clusters), -1);
    for (int k = 0; k < plan.num_clusters; ++k) {
        const auto& g = groups[static_cast<std::size_t>(k)];
        require(!g.empty(), "cluster must be nonempty");
        std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
        plan.masters[static_cast<std::size_t>(k)] = g[pick(rng)];
    }
    update_cluster_distances(plan, points);
}

ClusterPlan clusters_at(std::span<const Point2> points, int num_clusters, std::uint64_t seed) {
    ClusterPlan plan = kmeans_partition(points, num_clusters, derive_seed(seed, {static_cast<std::uint64_t>(num_clusters)}));
    assign_medoid_masters(plan, points);
    return plan;
}

ClusterPlan adaptive_clusters(std::span<const Point2> points, const DistanceBound& bound, int overhead_budget,
                              std::uint64_t seed, int start_clusters) {
    require(bound.dis_max_km > 0.0, "dis_max must be > 0");
    require(start_clusters >= 1, "start cluster count must be >= 1");
    const int n = static_cast<int>(points.size());
    for (int kc = start_clusters; kc <= n; ++kc) {
        if (2 * kc > overhead_budget)
            throw Infeasible("no cluster count within the overhead budget meets dis_max = " +
                             std::to_string(bound.dis_max_km) + " km");
        ClusterPlan plan = clusters_at(points, kc, seed);
        if (plan.max_distance() <= bound.dis_max_km) return plan;
    }
    throw Infeasible("distance bound unreachable even with singleton clusters");
}

ClusterPlan agglomerative_partition(std::span<const Point2> points, int num_clusters) {
    const int n = static_cast<int>(points.size());
    require(num_clusters >= 1 && num_clusters <= n, "cluster count must be in [1, number of APs]");
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) groups[static_cast<std::size_t>(i)] = {i};

    auto linkage = [&](const std::vector<int>& a, const std::vector<int>& b) {
        double d = 0.0;
        for (int i : a)
            for (int j : b) d = std::max(d, distance(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]));
        return d;
    };
    while (static_cast<int>(groups.size()) > num_clusters) {
        std::size_t ba = 0, bb = 1;
        double best = kInf;
        for (std::size_t a = 0; a < groups.size(); ++a)
            for (std::size_t b = a + 1; b < groups.size(); ++b) {
                const double d = linkage(groups[a], groups[b]);
                if (d < best) {
                    best = d;
                    ba = a;
                    bb = b;
                }
            }
        groups[ba].insert(groups[ba].end(), groups[bb].begin(), groups[bb].end());
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    ClusterPlan plan;
    plan.num_clusters = num_clusters;
    plan.assignment.assign(static_cast<std::size_t>(n), -1);
    for (std::size_t k = 0; k < groups.size(); ++k)
        for (int i : groups[k]) plan.assignment[static_cast<std::size_t>(i)] = static_cast<int>(k);
    plan.masters.assign(static_cast<std::size_t>(num_clusters), -1);
    return plan;
}

}  // namespace cfsync

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "cfsync/clustering.hpp"
#include "cfsync/error.hpp"
#include "cfsync/rng.hpp"
#include "oracles.hpp"

using namespace cfsync;

namespace {

std::vector<Point2> random_points(int n, std::uint64_t seed, double side = 0.15) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, side);
    std::vector<Point2> p;
    for (int i = 0; i < n; ++i) p.push_back({u(rng), u(rng)});
    return p;
}

double max_master_distance(const ClusterPlan& plan, const std::vector<Point2>& pts) {
    double worst = 0.0;
    for (int i = 0; i < plan.num_nodes(); ++i)
        worst = std::max(worst, distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(plan.master_of(i))]));
    return worst;
}

}  // namespace

TEST(Sinr, LogScaling) {
    const auto p = PilotSequence::random_bpsk(128, 1);
    const LinkChannel ch({{0.0, 1.0, {1, 0}}}, 1e-9);
    const ObservationWindow w = ObservationWindow::minimal(128, 4.0);
    const double base = ideal_sinr_db(ch, p, w, 3, 1e-12);
    EXPECT_NEAR(base - ideal_sinr_db(ch, p, w, 3, 2e-12), 10 * std::log10(2.0), 1e-12);
    EXPECT_NEAR(ideal_sinr_db(ch.with_beta(2e-9), p, w, 3, 1e-12) - base, 10 * std::log10(2.0), 1e-12);
    EXPECT_THROW(ideal_sinr_db(ch, p, w, 3, 0.0), InvalidArgument);
}

TEST(Sinr, PilotAverageMatchesRandomPilots) {
    Scenario s;
    const ObservationWindow w = ObservationWindow::minimal(256, 4.0);
    const LinkChannel ch({{0.0, 1.0, {1, 0}}}, 1e-9);
    Rng rng(4);
    double mean_lin = 0.0;
    const int draws = 200;
    for (int i = 0; i < draws; ++i)
        mean_lin += std::pow(10.0, ideal_sinr_db(ch, PilotSequence::random_bpsk(256, rng()), w, 3, s.noise_sigma2) / 10) / draws;
    const double closed = 10 * std::log10(1e-9 * PilotStats::bpsk_average(256).trace / (w.num_samples * s.noise_sigma2));
    EXPECT_NEAR(10 * std::log10(mean_lin), closed, 0.2);
}

TEST(DistanceBound, InvertsForwardModel) {
    Scenario s;
    const auto stats = PilotStats::bpsk_average(s.pilot_len);
    const int m = s.window().num_samples;
    const auto b = max_intra_distance(15.0, stats, s);
    auto sinr_at = [&](double d) {
        return 10 * std::log10(s.tx_power_w * std::pow(10.0, -oracle::three_slope_db(d, s.loss_db, s.d0_km, s.d1_km) / 10) *
                               stats.trace / (m * s.noise_sigma2));
    };
    const double bis = oracle::bisect([&](double d) { return sinr_at(d) - 15.0; }, 1e-4, 100.0);
    EXPECT_NEAR(b.dis_max_km, bis, 1e-6);
    EXPECT_NEAR(sinr_at(b.dis_max_km), 15.0, 0.01);
    // Both thresholds land on the 35 dB/decade slope.
    const auto b5 = max_intra_distance(5.0, stats, s);
    EXPECT_NEAR(b5.dis_max_km / b.dis_max_km, std::pow(10.0, 2.0 / 7.0), 1e-9);
}

TEST(DistanceBound, UnreachableIsInfeasible) {
    Scenario s;
    EXPECT_THROW(max_intra_distance(200.0, PilotStats::bpsk_average(256), s), Infeasible);
}

TEST(Kmeans, RectangleCornersShortEdges) {
    // Short edges are vertical (length 1), long edges horizontal (length 3).
    const std::vector<Point2> pts{{0, 0}, {0, 1}, {3, 0}, {3, 1}};
    const ClusterPlan plan = kmeans_partition(pts, 2, 7);
    EXPECT_EQ(plan.cluster_of(0), plan.cluster_of(1));
    EXPECT_EQ(plan.cluster_of(2), plan.cluster_of(3));
    EXPECT_NE(plan.cluster_of(0), plan.cluster_of(2));
}

TEST(Kmeans, SingletonsWhenKcEqualsK) {
    const auto pts = random_points(7, 3);
    const ClusterPlan plan = kmeans_partition(pts, 7, 1);
    std::set<int> seen(plan.assignment.begin(), plan.assignment.end());
    EXPECT_EQ(seen.size(), 7u);
}

TEST(Kmeans, DuplicatesShareCluster) {
    std::vector<Point2> pts{{0.01, 0.01}, {0.01, 0.01}, {0.01, 0.01}, {0.14, 0.14}, {0.13, 0.14}};
    const ClusterPlan plan = kmeans_partition(pts, 2, 5);
    EXPECT_EQ(plan.cluster_of(0), plan.cluster_of(1));
    EXPECT_EQ(plan.cluster_of(1), plan.cluster_of(2));
}

TEST(Kmeans, ObjectiveNonIncreasingAndDeterministic) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto pts = random_points(40, seed);
        std::vector<double> trace;
        KmeansOptions opts;
        opts.objective_trace = &trace;
        const auto a = kmeans_partition(pts, 5, seed, opts);
        for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
        EXPECT_EQ(kmeans_partition(pts, 5, seed).assignment, a.assignment);
    }
    EXPECT_THROW(kmeans_partition(random_points(3, 1), 4, 1), InvalidArgument);
}

TEST(Master, MedoidCases) {
    const std::vector<Point2> line{{0, 0}, {1, 0}, {2, 0}};
    const std::vector<int> all{0, 1, 2};
    EXPECT_EQ(select_master(line, all), 1);
    const std::vector<int> one{2};
    EXPECT_EQ(select_master(line, one), 2);
    const std::vector<int> pair{0, 1};
    EXPECT_EQ(select_master(line, pair), 0);  // tie -> lowest id
}

TEST(Master, MatchesBruteForceAndScaleInvariant) {
    Rng rng(17);
    for (int t = 0; t < 50; ++t) {
        const auto pts = random_points(7, rng());
        std::vector<int> members{0, 1, 2, 3, 4, 5, 6};
        EXPECT_EQ(select_master(pts, members), oracle::brute_force_medoid(pts, members));
        auto scaled = pts;
        for (auto& p : scaled) p = {p.x * 13.0, p.y * 13.0};
        EXPECT_EQ(select_master(scaled, members), select_master(pts, members));
    }
}

TEST(Adaptive, AllCloseStopsAtTwo) {
    const auto pts = random_points(12, 5, 0.01);
    const auto plan = adaptive_clusters(pts, {0.05}, 40, 1);
    EXPECT_EQ(plan.num_clusters, 2);
    EXPECT_NO_THROW(plan.validate());
}

TEST(Adaptive, TwoTightGroupsNaturalSplit) {
    std::vector<Point2> pts;
    for (int i = 0; i < 5; ++i) pts.push_back({0.001 * i, 0.0});
    for (int i = 0; i < 5; ++i) pts.push_back({1.0 + 0.001 * i, 0.0});
    const auto plan = adaptive_clusters(pts, {0.01}, 40, 3);
    EXPECT_EQ(plan.num_clusters, 2);
    for (int i = 1; i < 5; ++i) {
        EXPECT_EQ(plan.cluster_of(i), plan.cluster_of(0));
        EXPECT_EQ(plan.cluster_of(5 + i), plan.cluster_of(5));
    }
}

TEST(Adaptive, LongLineConformsOrIsInfeasible) {
    std::vector<Point2> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({0.01 * i, 0.0});
    const auto plan = adaptive_clusters(pts, {0.025}, 100, 1);
    EXPECT_LE(max_master_distance(plan, pts), 0.025 + 1e-12);
    EXPECT_GT(plan.num_clusters, 2);
    EXPECT_THROW(adaptive_clusters(pts, {0.025}, 6, 1), Infeasible);
}

TEST(Adaptive, DistanceAuditRandom) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto pts = random_points(40, seed);
        const auto plan = adaptive_clusters(pts, {0.06}, 1000, seed);
        EXPECT_LE(max_master_distance(plan, pts), 0.06 + 1e-12);
        EXPECT_NEAR(plan.max_distance(), max_master_distance(plan, pts), 1e-12);
    }
}

TEST(Plan, ValidationCatchesBrokenPlans) {
    ClusterPlan p;
    p.num_clusters = 2;
    p.assignment = {0, 0, 1};
    p.masters = {0, 2};
    EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(p.slaves(), std::vector<int>{1});
    p.masters = {2, 2};
    EXPECT_THROW(p.validate(), InvalidArgument);
    p.masters = {0, -1};
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Agglomerative, CompleteLinkageOnTwoGroups) {
    std::vector<Point2> pts{{0, 0}, {0.1, 0}, {0.05, 0.05}, {5, 5}, {5.1, 5}};
    const auto plan = agglomerative_partition(pts, 2);
    EXPECT_EQ(plan.cluster_of(0), plan.cluster_of(1));
    EXPECT_EQ(plan.cluster_of(0), plan.cluster_of(2));
    EXPECT_EQ(plan.cluster_of(3), plan.cluster_of(4));
    EXPECT_NE(plan.cluster_of(0), plan.cluster_of(3));
}

TEST(RandomMasters, AreMembersAndSeeded) {
    const auto pts = random_points(20, 2);
    ClusterPlan a = kmeans_partition(pts, 4, 2), b = a;
    assign_random_masters(a, pts, 9);
    assign_random_masters(b, pts, 9);
    EXPECT_EQ(a.masters, b.masters);
    EXPECT_NO_THROW(a.validate());
}

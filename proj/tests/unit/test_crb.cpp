#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cfsync/crb.hpp"
#include "cfsync/error.hpp"
#include "cfsync/rng.hpp"
#include "oracles.hpp"

using namespace cfsync;

TEST(SecondMoment, PrintedEntriesAtZeroDelay) {
    const SecondMomentA a(0.0, 3);
    // 1-based (2,3), (2,2), (3,3), (6,6).
    EXPECT_NEAR(a(1, 2), 1.0 / 18.0, 1e-15);
    EXPECT_NEAR(a(1, 1), 1.0 / 9.0, 1e-15);
    EXPECT_NEAR(a(2, 2), 2.0 / 9.0, 1e-15);
    EXPECT_EQ(a(5, 5), 0.0);
    EXPECT_EQ(a(0, 0), 0.0);
    EXPECT_EQ(a(40, 40), 0.0);
}

TEST(SecondMoment, RejectsBadInputs) {
    EXPECT_THROW(SecondMomentA(1.0, 2), InvalidArgument);
    EXPECT_THROW(SecondMomentA(-0.1, 2), InvalidArgument);
    EXPECT_THROW(SecondMomentA(0.2, 0), InvalidArgument);
}

TEST(SecondMoment, SymmetricNonnegative) {
    for (double c : {0.0, 0.25, 0.5, 0.99})
        for (int eta : {1, 2, 3, 6}) {
            const SecondMomentA a(c, eta);
            EXPECT_LT((a.block() - a.block().transpose()).cwiseAbs().maxCoeff(), 1e-15);
            EXPECT_GE(a.block().minCoeff(), 0.0);
        }
}

TEST(SecondMoment, TraceIsTwoThirds) {
    Rng rng(11);
    std::uniform_real_distribution<double> c(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const int eta = 1 + static_cast<int>(rng() % 8);
        EXPECT_NEAR(SecondMomentA(c(rng), eta).trace(), 2.0 / 3.0, 1e-12);
    }
}

class SecondMomentQuadrature : public ::testing::TestWithParam<std::pair<double, int>> {};

TEST_P(SecondMomentQuadrature, MatchesIntegral) {
    const auto [c, eta] = GetParam();
    const SecondMomentA a(c, eta);
    const int lags = eta + 4;
    const auto q = oracle::second_moment_quadrature(c, eta, lags);
    for (int r = 0; r < lags; ++r)
        for (int k = 0; k < lags; ++k)
            EXPECT_NEAR(a(r, k), q[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)], 1e-6) << r << "," << k;
}

INSTANTIATE_TEST_SUITE_P(Grid, SecondMomentQuadrature,
                         ::testing::Values(std::pair{0.0, 1}, std::pair{0.3, 1}, std::pair{0.7, 1}, std::pair{0.0, 2},
                                           std::pair{0.5, 2}, std::pair{0.3, 3}, std::pair{0.7, 3}, std::pair{0.9, 5}));

TEST(SecondMoment, MonteCarloAtHalfChip) {
    const SecondMomentA a(0.5, 2);
    Rng rng(21);
    std::uniform_real_distribution<double> to(0.0, 2.0);
    const int lags = 6;
    RMatrix acc = RMatrix::Zero(lags, lags);
    const int draws = 1000000;
    Eigen::VectorXd u(lags);
    for (int i = 0; i < draws; ++i) {
        const double x = to(rng) + 0.5;
        for (int r = 0; r < lags; ++r) u(r) = oracle::nabla(r - x);
        acc += u * u.transpose();
    }
    acc /= draws;
    for (int r = 0; r < lags; ++r)
        for (int k = 0; k < lags; ++k)
            if (a(r, k) > 0.0) EXPECT_NEAR(acc(r, k) / a(r, k), 1.0, 0.005) << r << "," << k;
}

TEST(Contamination, ZeroGainGivesZero) {
    const auto p = PilotSequence::random_bpsk(32, 1);
    EXPECT_EQ(contamination_diag(p, SecondMomentA(0.3, 2), 0.0, 40).norm(), 0.0);
}

TEST(Contamination, MatchesMonteCarlo) {
    const auto p = PilotSequence::random_bpsk(64, 4);
    const int m = 72;
    const RVector d = contamination_diag(p, SecondMomentA(0.3, 3), 1.0, m);
    const std::vector<int> idx{1, 2, 5, 30, 63, 66};
    const auto mc = oracle::contamination_power_mc(p.chips(), 0.3, 3, 3.0, idx, 100000, 8);
    for (std::size_t i = 0; i < idx.size(); ++i)
        EXPECT_NEAR(mc[i] / d(idx[i]), 1.0, 0.03) << "n=" << idx[i];
}

TEST(Contamination, WindowTooShortThrows) {
    const auto p = PilotSequence::random_bpsk(32, 1);
    EXPECT_THROW(contamination_diag(p, SecondMomentA(0.3, 3), 1.0, 34), InvalidArgument);
}

TEST(Contamination, TraceGrowsWithPilotLength) {
    const auto a = SecondMomentA(0.2, 3);
    const auto p1 = PilotSequence::random_bpsk(64, 3);
    const auto p2 = PilotSequence::random_bpsk(128, 3);
    EXPECT_GT(contamination_diag(p2, a, 1.0, 136).sum(), contamination_diag(p1, a, 1.0, 72).sum());
}

TEST(Xi, NoiseOnlyAndLinearity) {
    const auto p = PilotSequence::random_bpsk(32, 1);
    const RVector d = contamination_diag(p, SecondMomentA(0.3, 2), 0.5, 40);
    const std::vector<RVector> none;
    EXPECT_EQ(xi_covariance(none, 0.2, 40), RVector::Constant(40, 0.2));
    const std::vector<RVector> two{d, d};
    EXPECT_LT((xi_covariance(two, 0.2, 40) - (2.0 * d + RVector::Constant(40, 0.2))).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(xi_covariance(none, 0.0, 40), InvalidArgument);
    const std::vector<RVector> bad{RVector::Zero(3)};
    EXPECT_THROW(xi_covariance(bad, 1.0, 40), InvalidArgument);
}

TEST(Xi, BpskAverageClosedForm) {
    const std::vector<InterfererStat> one{{0.4, 0.0}};
    EXPECT_NEAR(mean_xi_bpsk(one, 3, 0.1), 0.4 * 2.0 / 3.0 + 0.1, 1e-15);
    EXPECT_DOUBLE_EQ(mean_xi_bpsk({}, 3, 0.1), 0.1);
}

namespace {

struct Config {
    PilotSequence pilot;
    std::vector<double> delays;
    ThetaVector theta;
    int m;
};

Config random_config(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 32 + static_cast<int>(rng() % 32);
    const int taps = 1 + static_cast<int>(rng() % 3);
    std::vector<double> delays{0.0};
    for (int l = 1; l < taps; ++l) delays.push_back(delays.back() + 1.0 + u(rng));
    Config c{PilotSequence::random_bpsk(n, rng()), delays, {}, 0};
    for (;;) {
        c.theta.to_chips = 3.0 * u(rng);
        bool ok = true;
        for (double d : delays) ok &= std::abs(c.theta.to_chips + d - std::round(c.theta.to_chips + d)) > 1e-4;
        if (ok) break;
    }
    c.theta.cfo_norm = u(rng) - 0.5;
    c.theta.taps = CVector(taps);
    for (int l = 0; l < taps; ++l) c.theta.taps(l) = complex_normal(rng);
    c.m = ObservationWindow::minimal(n, 3.0 + delays.back()).num_samples;
    return c;
}

CVector model_mean(const Config& c, const Eigen::VectorXd& th) {
    CVector h(c.theta.taps.size());
    for (int l = 0; l < h.size(); ++l) h(l) = cdouble(th(2 + 2 * l), th(3 + 2 * l));
    std::vector<oracle::cd> hv(h.data(), h.data() + h.size());
    const auto y = oracle::direct_rx(c.pilot.chips(), th(0), th(1), c.delays, hv, c.m, false);
    return Eigen::Map<const CVector>(y.data(), c.m);
}

}  // namespace

TEST(Jacobian, ColumnsMatchFiniteDifferences) {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const Config c = random_config(rng);
        const CMatrix omega = jacobian_columns(c.theta, c.pilot, c.delays, c.m);
        Eigen::VectorXd th(c.theta.size());
        th(0) = c.theta.to_chips;
        th(1) = c.theta.cfo_norm;
        for (int l = 0; l < c.theta.taps.size(); ++l) {
            th(2 + 2 * l) = c.theta.taps(l).real();
            th(3 + 2 * l) = c.theta.taps(l).imag();
        }
        for (int k = 0; k < th.size(); ++k) {
            const double h = 1e-6;
            Eigen::VectorXd plus = th, minus = th;
            plus(k) += h;
            minus(k) -= h;
            const CVector fd = (model_mean(c, plus) - model_mean(c, minus)) / (2 * h);
            EXPECT_LT((fd - omega.col(k)).norm() / fd.norm(), 1e-5) << "trial " << trial << " col " << k;
        }
        for (int l = 0; l < c.theta.taps.size(); ++l)
            EXPECT_LT((omega.col(3 + 2 * l) - cdouble(0, 1) * omega.col(2 + 2 * l)).norm(), 1e-14);
    }
}

TEST(Jacobian, ZeroChannelZeroesOffsetColumns) {
    Rng rng(5);
    Config c = random_config(rng);
    c.theta.taps.setZero();
    const CMatrix omega = jacobian_columns(c.theta, c.pilot, c.delays, c.m);
    EXPECT_EQ(omega.col(0).norm(), 0.0);
    EXPECT_EQ(omega.col(1).norm(), 0.0);
    EXPECT_GT(omega.col(2).norm(), 0.0);
}

TEST(Fisher, ScalarCovarianceAndDoubling) {
    Rng rng(9);
    const Config c = random_config(rng);
    const CMatrix omega = jacobian_columns(c.theta, c.pilot, c.delays, c.m);
    const auto r1 = fisher_and_crb(omega, RVector::Constant(c.m, 0.3));
    const RMatrix expect = (2.0 / 0.3) * (omega.adjoint() * omega).real();
    EXPECT_LT((r1.fisher - expect).cwiseAbs().maxCoeff() / expect.cwiseAbs().maxCoeff(), 1e-12);
    const auto r2 = fisher_and_crb(omega, RVector::Constant(c.m, 0.6));
    EXPECT_NEAR(r2.crb_to_chips / r1.crb_to_chips, 2.0, 1e-9);
    EXPECT_NEAR(r2.crb_cfo_norm / r1.crb_cfo_norm, 2.0, 1e-9);
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(r1.fisher);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
}

TEST(Fisher, SingularThrows) {
    CMatrix omega = CMatrix::Zero(10, 4);
    omega(0, 0) = 1.0;
    EXPECT_THROW(fisher_and_crb(omega, RVector::Ones(10)), DegenerateGeometry);
    EXPECT_THROW(fisher_and_crb(omega, RVector::Zero(10)), InvalidArgument);
}

TEST(LinkCrb, ContaminationFloor) {
    const auto p = PilotSequence::random_bpsk(128, 2);
    const LinkChannel ch({{0.0, 1.0, {1, 0}}, {1.3e-6, 0.6, {0, 1}}}, 1.0);
    const std::vector<InterfererStat> intf{{0.05, 0.3}};
    LinkCrbInput in{&p, &ch, 1.37, 0.01, intf, 1e-6, 3, ObservationWindow::minimal(128, 4.3).num_samples};
    const auto hi = link_crb(in);
    in.noise_sigma2 = 1e-12;
    const auto lo = link_crb(in);
    EXPECT_GT(lo.crb_to_chips / hi.crb_to_chips, 0.5);
    EXPECT_GT(lo.crb_cfo_norm / hi.crb_cfo_norm, 0.5);
    in.interferers = {};
    const auto clean = link_crb(in);
    EXPECT_LT(clean.crb_to_chips, 1e-3 * lo.crb_to_chips);
}

TEST(LinkCrb, ScaleInvariantUnderCommonBeta) {
    const auto p = PilotSequence::random_bpsk(64, 2);
    const LinkChannel a({{0.0, 1.0, {1, 0}}, {1.3e-6, 0.6, {0, 1}}}, 1.0);
    const LinkChannel b = a.with_beta(1e-9);
    const std::vector<InterfererStat> ia{{0.05, 0.3}}, ib{{0.05e-9, 0.3}};
    const int m = ObservationWindow::minimal(64, 4.3).num_samples;
    const auto ra = link_crb({&p, &a, 1.37, 0.01, ia, 0.1, 3, m});
    const auto rb = link_crb({&p, &b, 1.37, 0.01, ib, 0.1e-9, 3, m});
    EXPECT_NEAR(rb.crb_to_chips / ra.crb_to_chips, 1.0, 1e-9);
    EXPECT_NEAR(rb.crb_cfo_norm / ra.crb_cfo_norm, 1.0, 1e-9);
}

TEST(LinkCrb, IndependentOfCfo) {
    const auto p = PilotSequence::random_bpsk(64, 2);
    const LinkChannel ch({{0.0, 1.0, {1, 0}}, {1.3e-6, 0.6, {0, 1}}}, 1.0);
    const int m = ObservationWindow::minimal(64, 4.3).num_samples;
    const auto r0 = link_crb({&p, &ch, 1.37, 0.0, {}, 0.1, 3, m});
    const auto r1 = link_crb({&p, &ch, 1.37, 0.31, {}, 0.1, 3, m});
    EXPECT_NEAR(r1.crb_cfo_norm / r0.crb_cfo_norm, 1.0, 1e-9);
    EXPECT_NEAR(r1.crb_to_chips / r0.crb_to_chips, 1.0, 1e-9);
}

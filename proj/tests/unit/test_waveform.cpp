#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cfsync/error.hpp"
#include "cfsync/rng.hpp"
#include "cfsync/waveform.hpp"
#include "oracles.hpp"

using namespace cfsync;

namespace {

std::vector<double> delays4() { return {0.0, 0.7049, 2.1230, 2.7063}; }

}  // namespace

TEST(Pilot, RejectsNonBpskChips) {
    EXPECT_THROW(PilotSequence({1.0, 0.5}), InvalidArgument);
    EXPECT_THROW(PilotSequence({1.0}), InvalidArgument);
    EXPECT_NO_THROW(PilotSequence({1.0, -1.0}));
}

TEST(Pilot, RandomBpskIsSeedDeterministic) {
    const auto a = PilotSequence::random_bpsk(64, 9);
    const auto b = PilotSequence::random_bpsk(64, 9);
    const auto c = PilotSequence::random_bpsk(64, 10);
    EXPECT_EQ(a.chips(), b.chips());
    EXPECT_NE(a.chips(), c.chips());
    EXPECT_EQ(a.chip(-1), 0.0);
    EXPECT_EQ(a.chip(64), 0.0);
}

TEST(Kernel, MatchesRectangleConvolution) {
    for (double t = -0.5; t <= 2.5; t += 0.01) EXPECT_NEAR(tri_kernel(t), oracle::nabla(t), 1e-15) << t;
}

TEST(Offsets, NormalizedRoundTripAndBounds) {
    const auto o = SyncOffset::from_normalized(1.5, 0.2, 1e-6, 3.0, 3);
    EXPECT_DOUBLE_EQ(o.to_chips(1e-6), 1.5);
    EXPECT_DOUBLE_EQ(o.cfo_norm(1e-6), 0.2);
    EXPECT_THROW(SyncOffset::from_normalized(3.5, 0.0, 1e-6, 3.0, 3), InvalidArgument);
    EXPECT_THROW(SyncOffset::from_normalized(1.0, 3.5, 1e-6, 3.0, 3), InvalidArgument);
}

TEST(Window, MinimalLength) {
    EXPECT_EQ(ObservationWindow::minimal(128, 0.0).num_samples, 130);
    EXPECT_EQ(ObservationWindow::minimal(128, 5.7).num_samples, 136);
    EXPECT_EQ(ObservationWindow::minimal(128, 6.0).num_samples, 136);
}

TEST(DelayMatrix, TwoNonzerosPerColumn) {
    const std::vector<double> d{0.0, 0.4};
    const RMatrix u = delay_matrix(1.3, d, 20, 10);
    ASSERT_EQ(u.rows(), 11);
    EXPECT_NEAR(u(2, 0), 0.7, 1e-15);
    EXPECT_NEAR(u(3, 0), 0.3, 1e-15);
    EXPECT_NEAR(u.col(0).sum(), 1.0, 1e-15);
    EXPECT_NEAR(u(2, 1), 0.3, 1e-15);
    EXPECT_NEAR(u(3, 1), 0.7, 1e-15);
    for (int r = 0; r < u.rows(); ++r) EXPECT_NEAR(u(r, 0), oracle::nabla(r - 1.3), 1e-15);
}

TEST(DelayMatrix, OffsetOutsideWindowThrows) {
    const std::vector<double> d{0.0};
    EXPECT_THROW(delay_matrix(9.5, d, 20, 10), InvalidArgument);
    EXPECT_THROW(delay_matrix(-0.1, d, 20, 10), InvalidArgument);
}

TEST(DelayMatrix, DerivativeMatchesFiniteDifference) {
    Rng rng(3);
    std::uniform_real_distribution<double> to(0.0, 3.0);
    const auto d = delays4();
    for (int trial = 0; trial < 50; ++trial) {
        double x = to(rng);
        bool near_kink = false;
        for (double dl : d) near_kink |= std::abs((x + dl) - std::round(x + dl)) < 1e-4;
        if (near_kink) continue;
        const double h = 1e-6;
        const RMatrix fd = (delay_matrix(x + h, d, 80, 64) - delay_matrix(x - h, d, 80, 64)) / (2 * h);
        const RMatrix an = delay_matrix_derivative(x, d, 80, 64);
        EXPECT_LT((fd - an).cwiseAbs().maxCoeff(), 1e-5);
    }
    EXPECT_THROW(delay_matrix_derivative(1.0, std::vector<double>{0.0}, 80, 64), InvalidArgument);
}

TEST(PilotMatrix, ToeplitzLayout) {
    const PilotSequence p({1, -1, 1});
    const RMatrix s = pilot_matrix(p, 5);
    ASSERT_EQ(s.rows(), 5);
    ASSERT_EQ(s.cols(), 3);
    for (int m = 0; m < 5; ++m)
        for (int r = 0; r < 3; ++r) EXPECT_EQ(s(m, r), oracle::chip(p.chips(), m - r));
}

TEST(SignalMatrix, EqualsExplicitProduct) {
    const auto p = PilotSequence::random_bpsk(32, 1);
    const auto d = delays4();
    const int m = 42;
    const CMatrix g = signal_matrix(1.37, 0.01, p, d, m);
    const CMatrix ref = cfo_matrix(0.01, m) * (pilot_matrix(p, m) * delay_matrix(1.37, d, m, 32)).cast<cdouble>();
    EXPECT_LT((g - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SignalMatrix, MatchesDirectModelWithCommonPhaseFoldedIntoTaps) {
    const auto p = PilotSequence::random_bpsk(40, 5);
    const auto d = delays4();
    const int m = ObservationWindow::minimal(40, 3.0 + 2.7063).num_samples;
    const std::vector<oracle::cd> h{{1.0, 0.2}, {-0.3, 0.5}, {0.1, -0.4}, {0.2, 0.2}};
    const double to = 2.2, cfo = -0.37;
    const auto direct = oracle::direct_rx(p.chips(), to, cfo, d, h, m);
    CVector hv(4);
    const cdouble rot = std::polar(1.0, -oracle::kTwoPi * cfo * to);
    for (int l = 0; l < 4; ++l) hv(l) = h[static_cast<std::size_t>(l)] * rot;
    const CVector y = signal_matrix(to, cfo, p, d, m) * hv;
    for (int k = 0; k < m; ++k) EXPECT_LT(std::abs(y(k) - direct[static_cast<std::size_t>(k)]), 1e-12);
}

TEST(Channel, CoefficientsAndValidation) {
    LinkChannel ch({{0.0, 1.0, {1.0, 0.0}}, {1e-6, 0.5, {0.0, 1.0}}}, 4.0);
    const CVector h = ch.coefficients();
    EXPECT_NEAR(std::abs(h(0) - cdouble(2.0, 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(h(1) - cdouble(0.0, 1.0)), 0.0, 1e-15);
    EXPECT_THROW(LinkChannel({}, 1.0), InvalidArgument);
    EXPECT_THROW(LinkChannel({{0.0, 1.0, {}}}, 0.0), InvalidArgument);
    EXPECT_THROW(LinkChannel({{1e-6, 1.0, {}}, {0.0, 1.0, {}}}, 1.0), InvalidArgument);
    EXPECT_THROW(ch.check_cp(1e-6, 0.5), InvalidArgument);
}

TEST(Synthesis, DeterministicAndNoiseFreeIsModel) {
    const auto p = PilotSequence::random_bpsk(32, 2);
    const LinkChannel ch({{0.0, 1.0, {1.0, 0.0}}, {0.7e-6, 0.6, {0.0, 1.0}}}, 1.0);
    const Emitter e{SyncOffset::from_normalized(1.2, 0.05, 1e-6, 0.5, 3), ch};
    const ObservationWindow w = ObservationWindow::minimal(32, 4.0);
    const std::vector<Emitter> none;
    const CVector a = synthesize_rx(e, none, p, w, 0.1, 17);
    const CVector b = synthesize_rx(e, none, p, w, 0.1, 17);
    EXPECT_EQ(a, b);
    const CVector clean = synthesize_rx(e, none, p, w, 0.0, 17);
    EXPECT_LT((clean - emitter_signal(e, p, w)).norm(), 1e-14);
}

TEST(Synthesis, NoiseVarianceMatches) {
    const auto p = PilotSequence::random_bpsk(16, 2);
    const LinkChannel ch({{0.0, 1.0, {}}}, 1e-30);
    const Emitter e{SyncOffset::from_normalized(0.5, 0.0, 1e-6, 0.5, 1), ch};
    const ObservationWindow w{20000};
    const std::vector<Emitter> none;
    const CVector y = synthesize_rx(e, none, p, w, 2.0, 5);
    EXPECT_NEAR(y.squaredNorm() / w.num_samples, 2.0, 0.08);
}

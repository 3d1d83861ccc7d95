#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cfsync/error.hpp"
#include "cfsync/mle.hpp"
#include "cfsync/rng.hpp"

using namespace cfsync;

namespace {

struct Link {
    PilotSequence pilot = PilotSequence::random_bpsk(64, 12);
    std::vector<double> delays{0.0, 0.7049, 2.1230, 2.7063};
    ObservationWindow window = ObservationWindow::minimal(64, 3.0 + 2.7063);
    CVector h = (CVector(4) << cdouble(1, 0.3), cdouble(-0.5, 0.4), cdouble(0.2, -0.2), cdouble(0.1, 0.25)).finished();

    CVector clean(double to, double cfo) const {
        return signal_matrix(to, cfo, pilot, delays, window.num_samples) * h;
    }
};

CVector noisy(const CVector& y, double sigma2, std::uint64_t seed) {
    Rng rng(seed);
    CVector out = y;
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += complex_normal(rng, sigma2);
    return out;
}

}  // namespace

TEST(Grid, PriorBoxAndValidation) {
    const GridSpec g = GridSpec::from_prior(3, 0.05);
    EXPECT_EQ(g.to_min, 0.0);
    EXPECT_EQ(g.to_max, 3.0);
    EXPECT_EQ(g.cfo_min, -0.05);
    EXPECT_EQ(g.cfo_max, 0.05);
    EXPECT_NO_THROW(g.validate());
    GridSpec bad = g;
    bad.to_points = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = g;
    bad.cfo_max = bad.cfo_min - 1.0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(LeastSquares, RecoversChannelNoiseless) {
    const Link k;
    const CVector y = k.clean(1.37, 0.01);
    const CVector h = ls_channel(y, 1.37, 0.01, k.pilot, k.delays, k.window);
    EXPECT_LT((h - k.h).norm(), 1e-10);
    const CVector z = ls_channel(CVector::Zero(k.window.num_samples), 1.37, 0.01, k.pilot, k.delays, k.window);
    EXPECT_EQ(z.norm(), 0.0);
}

TEST(LeastSquares, ResidualOrthogonalToModel) {
    const Link k;
    const CVector y = noisy(k.clean(1.37, 0.01), 0.5, 4);
    const CVector h = ls_channel(y, 1.1, 0.02, k.pilot, k.delays, k.window);
    const CMatrix g = signal_matrix(1.1, 0.02, k.pilot, k.delays, k.window.num_samples);
    EXPECT_LT((g.adjoint() * (y - g * h)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LeastSquares, CoincidentTapsAreDegenerate) {
    const Link k;
    const std::vector<double> same{0.5, 0.5};
    const CVector y = k.clean(1.37, 0.01);
    EXPECT_THROW(ls_channel(y, 1.0, 0.0, k.pilot, same, k.window), DegenerateGeometry);
}

TEST(Projection, RangeAndComplement) {
    const Link k;
    const CVector y = k.clean(1.37, 0.01);
    EXPECT_NEAR(projection_energy(y, 1.37, 0.01, k.pilot, k.delays, k.window), y.squaredNorm(), 1e-9 * y.squaredNorm());
    const CMatrix g = signal_matrix(1.37, 0.01, k.pilot, k.delays, k.window.num_samples);
    const CVector r = noisy(CVector::Zero(k.window.num_samples), 1.0, 3);
    const CVector orth = r - g * g.colPivHouseholderQr().solve(r);
    EXPECT_NEAR(projection_energy(orth, 1.37, 0.01, k.pilot, k.delays, k.window), 0.0, 1e-9);
}

TEST(Projection, EqualsEnergyMinusResidual) {
    const Link k;
    const CVector y = noisy(k.clean(0.8, -0.02), 0.3, 8);
    const CMatrix g = signal_matrix(1.2, 0.015, k.pilot, k.delays, k.window.num_samples);
    const CVector h = g.colPivHouseholderQr().solve(y);
    const double expected = y.squaredNorm() - (y - g * h).squaredNorm();
    const double e = projection_energy(y, 1.2, 0.015, k.pilot, k.delays, k.window);
    EXPECT_NEAR(e, expected, 1e-9 * y.squaredNorm());
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, y.squaredNorm() * (1 + 1e-12));
    EXPECT_NEAR(projection_energy(std::polar(1.0, 0.7) * y, 1.2, 0.015, k.pilot, k.delays, k.window), e, 1e-9 * e);
}

TEST(Ml, ExactOnGridNoiseless) {
    const Link k;
    GridSpec g = GridSpec::from_prior(3, 0.05);
    g.to_points = 31;  // step 0.1
    g.cfo_points = 11;  // step 0.01
    g.refine_levels = 0;
    const CVector y = k.clean(1.3, 0.01);
    const MlEstimate e = ml_estimate(y, g, k.pilot, k.delays, k.window);
    EXPECT_NEAR(e.to_chips_hat, 1.3, 1e-12);
    EXPECT_NEAR(e.cfo_norm_hat, 0.01, 1e-12);
    EXPECT_LT((e.h_hat - k.h).norm(), 1e-8);
}

TEST(Ml, RefinementConvergesOffGrid) {
    const Link k;
    GridSpec g = GridSpec::from_prior(3, 0.05);
    g.refine_levels = 6;
    const CVector y = k.clean(1.37, 0.0123);
    const MlEstimate e = ml_estimate(y, g, k.pilot, k.delays, k.window);
    EXPECT_NEAR(e.to_chips_hat, 1.37, 1e-4);
    EXPECT_NEAR(e.cfo_norm_hat, 0.0123, 1e-6);
}

TEST(Ml, RefinementNeverLowersObjective) {
    const Link k;
    const CVector y = noisy(k.clean(1.37, 0.0123), 0.2, 5);
    GridSpec g = GridSpec::from_prior(3, 0.05);
    double last = -1.0;
    for (int lv = 0; lv <= 5; ++lv) {
        g.refine_levels = lv;
        const MlEstimate e = ml_estimate(y, g, k.pilot, k.delays, k.window);
        EXPECT_GE(e.objective_value, last);
        EXPECT_GE(e.to_chips_hat, g.to_min);
        EXPECT_LE(e.to_chips_hat, g.to_max);
        EXPECT_GE(e.cfo_norm_hat, g.cfo_min);
        EXPECT_LE(e.cfo_norm_hat, g.cfo_max);
        last = e.objective_value;
    }
}

TEST(Ml, ObjectiveMatchesProjectionEnergy) {
    const Link k;
    const CVector y = noisy(k.clean(2.2, -0.03), 0.1, 6);
    const MlEstimate e = ml_estimate(y, GridSpec::from_prior(3, 0.05), k.pilot, k.delays, k.window);
    const double direct = projection_energy(y, e.to_chips_hat, e.cfo_norm_hat, k.pilot, k.delays, k.window);
    EXPECT_NEAR(e.objective_value, direct, 1e-9 * direct);
}

TEST(Ml, Deterministic) {
    const Link k;
    const CVector y = noisy(k.clean(2.2, -0.03), 0.1, 6);
    const auto a = ml_estimate(y, GridSpec::from_prior(3, 0.05), k.pilot, k.delays, k.window);
    const auto b = ml_estimate(y, GridSpec::from_prior(3, 0.05), k.pilot, k.delays, k.window);
    EXPECT_EQ(a.to_chips_hat, b.to_chips_hat);
    EXPECT_EQ(a.cfo_norm_hat, b.cfo_norm_hat);
}

#pragma once

// Cramer-Rao bounds for joint CFO/TO estimation when co-pilot slaves in other
// clusters contaminate the burst.
//
// The contamination from one interferer is modelled through its main path
// only. Averaging U U^T over the uniform TO prior gives the small banded
// matrix A (SecondMomentA); averaging over the CFO prior diagonalises the
// covariance, so the noise-plus-contamination covariance Xi is stored as its
// diagonal.

#include <span>
#include <vector>

#include "cfsync/waveform.hpp"

namespace cfsync {

// Main-path statistics of one co-pilot interferer as seen at a master.
struct InterfererStat {
    double main_gain = 0.0;         // alpha^0 * beta
    double main_delay_chips = 0.0;  // main-path delay / Ts, in [0, 1)

    void validate() const;
};

// E{U U^T} over a uniform TO in [0, eta] chips for a single main path with
// fractional delay c. Nonzero only on the tridiagonal band of rows 1..eta+2
// (0-based); everything else is zero.
class SecondMomentA {
public:
    SecondMomentA(double main_delay_chips, int eta);

    int eta() const noexcept { return eta_; }
    double main_delay_chips() const noexcept { return c_; }
    // First row past the support; rows >= support_end() are zero.
    int support_end() const noexcept { return eta_ + 3; }

    // 0-based entry; zero outside the support.
    double operator()(int row, int col) const noexcept;
    double trace() const noexcept;
    // Dense (support_end x support_end) block, rows/cols 0..eta+2.
    const RMatrix& block() const noexcept { return block_; }

private:
    double c_;
    int eta_;
    RMatrix block_;
};

SecondMomentA second_moment_A(double main_delay_chips, int eta);

// Diagonal of the contamination covariance D for one interferer using
// `pilot`: D_n = main_gain * sum_{k1,k} A[k1,k] s[n-k1] s[n-k].
RVector contamination_diag(const PilotSequence& pilot, const SecondMomentA& a, double main_gain,
                           int num_samples);

// Diagonal of Xi = sum_i D_i + sigma2 I.
RVector xi_covariance(std::span<const RVector> interferer_diags, double noise_sigma2, int num_samples);

// Parameter vector: theta_1 = TO (chips), theta_2 = CFO (normalized), then
// (Re h_l, Im h_l) for each tap.
struct ThetaVector {
    double to_chips = 0.0;
    double cfo_norm = 0.0;
    CVector taps;

    int size() const noexcept { return 2 + 2 * static_cast<int>(taps.size()); }
};

// Omega = [dm/dtheta_1, ..., dm/dtheta_{2L+2}] for m(theta) = F S U h.
CMatrix jacobian_columns(const ThetaVector& theta, const PilotSequence& pilot,
                         std::span<const double> delays_chips, int num_samples);

struct FisherReport {
    RMatrix fisher;
    double crb_to_chips = 0.0;
    double crb_cfo_norm = 0.0;
    double condition_number = 0.0;
};

inline constexpr double kMaxFisherCondition = 1e13;

// J = 2 Re{Omega^H Xi^{-1} Omega}; CRBs are the first two diagonal entries
// of J^{-1}. Throws DegenerateGeometry when J scaled to unit diagonal has
// condition number above `max_condition`.
FisherReport fisher_and_crb(const CMatrix& omega, const RVector& xi_diag,
                            double max_condition = kMaxFisherCondition);

// Pilot-averaged (BPSK) diagonal level of Xi:
// sum_i gain_i * trace(A_i) + sigma2.
double mean_xi_bpsk(std::span<const InterfererStat> interferers, int eta, double noise_sigma2);

// CRB of one slave->master link under the given co-pilot interferers.
// Powers are normalized by the desired link's large-scale factor before the
// Fisher matrix is inverted; the TO and CFO bounds are invariant to that
// common scaling.
struct LinkCrbInput {
    const PilotSequence* pilot = nullptr;
    const LinkChannel* channel = nullptr;
    double to_chips = 0.0;
    double cfo_norm = 0.0;
    std::span<const InterfererStat> interferers;
    double noise_sigma2 = 0.0;
    int eta = 1;
    int num_samples = 0;
};

FisherReport link_crb(const LinkCrbInput& in);

}  // namespace cfsync

#pragma once

// Joint maximum-likelihood CFO/TO estimation for one slave->master pair.
//
// For fixed (to, cfo) the channel is eliminated by least squares, which turns
// the likelihood into the energy of y projected onto span(F S U). The pair
// (to, cfo) is then found by a coarse 2-D grid followed by local zooms.
// Contamination is not modelled by the estimator (plain least squares).

#include <span>

#include "cfsync/waveform.hpp"

namespace cfsync {

struct GridSpec {
    double to_min = 0.0;
    double to_max = 1.0;
    double cfo_min = -0.5;
    double cfo_max = 0.5;
    int to_points = 64;
    int cfo_points = 64;
    int refine_levels = 3;
    int zoom = 4;  // each refinement shrinks the step by this factor

    // TO in [0, eta] chips, CFO in [-fmax_norm, fmax_norm].
    static GridSpec from_prior(int eta, double fmax_norm);

    void validate() const;
    double to_step() const { return to_points > 1 ? (to_max - to_min) / (to_points - 1) : 0.0; }
    double cfo_step() const { return cfo_points > 1 ? (cfo_max - cfo_min) / (cfo_points - 1) : 0.0; }
};

struct MlEstimate {
    double to_chips_hat = 0.0;
    double cfo_norm_hat = 0.0;
    CVector h_hat;
    double objective_value = 0.0;
};

// (G^H G)^{-1} G^H y with G = F S U.
CVector ls_channel(const CVector& y, double to_chips, double cfo_norm, const PilotSequence& pilot,
                   std::span<const double> delays_chips, const ObservationWindow& window);

// y^H G (G^H G)^{-1} G^H y, the energy of y in span(G).
double projection_energy(const CVector& y, double to_chips, double cfo_norm, const PilotSequence& pilot,
                         std::span<const double> delays_chips, const ObservationWindow& window);

MlEstimate ml_estimate(const CVector& y, const GridSpec& grid, const PilotSequence& pilot,
                       std::span<const double> delays_chips, const ObservationWindow& window);

}  // namespace cfsync

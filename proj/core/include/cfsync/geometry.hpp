#pragma once

// Scenario generation: AP placement, three-slope path loss and per-link
// channel realizations. Distances are planar, in km.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cfsync/waveform.hpp"

namespace cfsync {

inline constexpr double kSpeedOfLight = 299'792'458.0;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(const Point2& a, const Point2& b) noexcept;

enum class ApRole { unassigned, master, slave };

struct AccessPoint {
    int id = 0;
    Point2 location;
    ApRole role = ApRole::unassigned;
};

struct Scenario {
    double area_x_km = 0.15;
    double area_y_km = 0.15;
    int num_aps = 20;
    double tx_power_w = 1.0;
    double noise_sigma2 = 6.309573444801933e-13;  // -92 dBm
    double loss_db = 140.7;
    double d0_km = 0.01;
    double d1_km = 0.05;
    int pilot_len = 256;
    int eta = 3;
    double fmax_norm = 3.0;
    double sinr_min_db = 15.0;
    int overhead_budget = 40;  // L_S
    std::uint64_t seed = 1;

    double chip_interval_s = 1e-6;
    int num_taps = 4;
    double cp_chips = 8.0;  // extra taps fall within this many chips of the main path
    double min_tap_spacing_chips = 1.0;  // keeps TO identifiable for every offset

    void validate() const;

    // Longest main-path delay inside the area, in chips.
    double max_main_delay_chips() const;
    ObservationWindow window() const;
};

// Three-slope path loss in dB. Throws for d <= 0.
double path_loss_db(double d_km, const Scenario& s);

// Received large-scale factor tx_power * 10^(-PL/10).
double large_scale_beta(double d_km, const Scenario& s);

// Main-path delay d/c in chips.
double main_delay_chips(double d_km, const Scenario& s) noexcept;

// K points uniform in the area, deterministic per scenario seed.
std::vector<AccessPoint> place_aps(const Scenario& s);
std::vector<Point2> locations(std::span<const AccessPoint> aps);

// Multipath link between two locations: main path at d/c with gain 1, the
// other L-1 taps uniform in (0, cp_chips] after it, conditioned on
// consecutive taps being min_tap_spacing_chips apart. Sorted uniform
// gains below 1, psi ~ CN(0,1).
LinkChannel sample_channel(const Point2& from, const Point2& to, int num_taps, const Scenario& s,
                           std::uint64_t seed);

// Pairwise distance, path loss, beta and main-path delay for a node set.
class LinkTable {
public:
    LinkTable(std::span<const Point2> nodes, const Scenario& s);

    int size() const noexcept { return n_; }
    double distance_km(int a, int b) const { return dist_[idx(a, b)]; }
    double path_loss_db(int a, int b) const { return pl_[idx(a, b)]; }
    double beta(int a, int b) const { return beta_[idx(a, b)]; }
    double main_delay_s(int a, int b) const { return delay_[idx(a, b)]; }

private:
    std::size_t idx(int a, int b) const;

    int n_;
    std::vector<double> dist_, pl_, beta_, delay_;
};

// Channel fixture: {"chip_interval_s": .., "beta": .., "taps": [{"delay_chips": .., "gain": ..}, ...]}.
// Small-scale terms are 1.
LinkChannel load_channel_fixture(const std::filesystem::path& path);

}  // namespace cfsync

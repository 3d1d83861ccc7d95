#include "cfsync/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "cfsync/error.hpp"
#include "cfsync/rng.hpp"

namespace cfsync {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

constexpr std::uint64_t kPlacementTag = 0x706c616365ULL;

}  // namespace

double distance(const Point2& a, const Point2& b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

void Scenario::validate() const {
    require(area_x_km > 0.0 && area_y_km > 0.0, "area must be positive");
    require(num_aps >= 3, "need at least 3 APs");
    require(tx_power_w > 0.0 && noise_sigma2 > 0.0, "powers must be > 0");
    require(d0_km > 0.0 && d0_km < d1_km, "need 0 < d0 < d1");
    require(pilot_len >= 2, "pilot length must be >= 2");
    require(eta >= 1, "eta must be >= 1");
    require(fmax_norm > 0.0, "fmax must be > 0");
    require(chip_interval_s > 0.0, "chip interval must be > 0");
    require(num_taps >= 1, "need at least one tap");
    require(cp_chips >= 0.0, "cp length must be >= 0");
    require(min_tap_spacing_chips >= 0.0, "tap spacing must be >= 0");
    require((num_taps - 1) * min_tap_spacing_chips <= cp_chips, "taps do not fit the cp at the requested spacing");
    require(overhead_budget >= 0, "overhead budget must be >= 0");
}

double Scenario::max_main_delay_chips() const {
    return std::hypot(area_x_km, area_y_km) * 1e3 / kSpeedOfLight / chip_interval_s;
}

ObservationWindow Scenario::window() const {
    return ObservationWindow::minimal(pilot_len, eta + cp_chips + max_main_delay_chips());
}

double path_loss_db(double d_km, const Scenario& s) {
    require(d_km > 0.0 && std::isfinite(d_km), "distance must be > 0");
    if (d_km > s.d1_km) return s.loss_db + 35.0 * std::log10(d_km);
    const double near = s.loss_db + 15.0 * std::log10(s.d1_km);
    if (d_km > s.d0_km) return near + 20.0 * std::log10(d_km);
    return near + 20.0 * std::log10(s.d0_km);
}

double large_scale_beta(double d_km, const Scenario& s) {
    return s.tx_power_w * std::pow(10.0, -path_loss_db(d_km, s) / 10.0);
}

double main_delay_chips(double d_km, const Scenario& s) noexcept {
    return d_km * 1e3 / kSpeedOfLight / s.chip_interval_s;
}

std::vector<AccessPoint> place_aps(const Scenario& s) {
    s.validate();
    Rng rng(derive_seed(s.seed, {kPlacementTag}));
    std::uniform_real_distribution<double> ux(0.0, s.area_x_km), uy(0.0, s.area_y_km);
    std::vector<AccessPoint> aps(static_cast<std::size_t>(s.num_aps));
    for (int i = 0; i < s.num_aps; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        aps[static_cast<std::size_t>(i)] = {i, {x, y}, ApRole::unassigned};
    }
    return aps;
}

std::vector<Point2> locations(std::span<const AccessPoint> aps) {
    std::vector<Point2> p;
    p.reserve(aps.size());
    for (const auto& a : aps) p.push_back(a.location);
    return p;
}

LinkChannel sample_channel(const Point2& from, const Point2& to, int num_taps, const Scenario& s,
                           std::uint64_t seed) {
    require(num_taps >= 1, "need at least one tap");
    const double d = distance(from, to);
    const double beta = d > 0.0 ? large_scale_beta(d, s) : large_scale_beta(s.d0_km, s);
    const double main_delay = d * 1e3 / kSpeedOfLight;

    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> extra(static_cast<std::size_t>(num_taps - 1));
    std::vector<double> gains(static_cast<std::size_t>(num_taps - 1));
    // Sorted uniforms on the slack, then shift the i-th by (i+1) spacings.
    const double spacing = s.min_tap_spacing_chips;
    const double slack = s.cp_chips - (num_taps - 1) * spacing;
    require(slack >= 0.0, "taps do not fit the cp at the requested spacing");
    for (auto& e : extra) e = (1.0 - unit(rng)) * slack;
    for (auto& g : gains) g = unit(rng);
    std::sort(extra.begin(), extra.end());
    for (std::size_t l = 0; l < extra.size(); ++l) extra[l] += static_cast<double>(l + 1) * spacing;
    std::sort(gains.begin(), gains.end(), std::greater<>());

    std::vector<ChannelTap> taps;
    taps.reserve(static_cast<std::size_t>(num_taps));
    taps.push_back({main_delay, 1.0, complex_normal(rng)});
    for (std::size_t l = 0; l < extra.size(); ++l)
        taps.push_back({main_delay + extra[l] * s.chip_interval_s, gains[l], complex_normal(rng)});
    return LinkChannel(std::move(taps), beta);
}

LinkTable::LinkTable(std::span<const Point2> nodes, const Scenario& s) : n_(static_cast<int>(nodes.size())) {
    const auto total = nodes.size() * nodes.size();
    dist_.assign(total, 0.0);
    pl_.assign(total, 0.0);
    beta_.assign(total, 0.0);
    delay_.assign(total, 0.0);
    for (int a = 0; a < n_; ++a) {
        for (int b = 0; b < n_; ++b) {
            if (a == b) continue;
            const auto k = idx(a, b);
            const double d = distance(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)]);
            dist_[k] = d;
            // Co-located nodes sit on the flat innermost slope.
            const double dd = d > 0.0 ? d : s.d0_km;
            pl_[k] = cfsync::path_loss_db(dd, s);
            beta_[k] = large_scale_beta(dd, s);
            delay_[k] = d * 1e3 / kSpeedOfLight;
        }
    }
}

std::size_t LinkTable::idx(int a, int b) const {
    if (a < 0 || b < 0 || a >= n_ || b >= n_) throw InvalidArgument("node index out of range");
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(b);
}

LinkChannel load_channel_fixture(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open channel fixture " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("channel fixture: ") + e.what(), 0);
    }
    try {
        const double ts = j.value("chip_interval_s", 1e-6);
        const double beta = j.at("beta").get<double>();
        std::vector<ChannelTap> taps;
        for (const auto& t : j.at("taps")) {
            taps.push_back({t.at("delay_chips").get<double>() * ts, t.at("gain").get<double>(), {1.0, 0.0}});
        }
        return LinkChannel(std::move(taps), beta);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("channel fixture: ") + e.what(), 0);
    }
}

}  // namespace cfsync

#include "cfsync/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cfsync/error.hpp"
#include "cfsync/rng.hpp"

namespace cfsync {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

// Rows (floor(x)+1, floor(x)+2) carry the two kernel samples of offset x.
void check_offset_in_window(double x, int lags) {
    require(std::isfinite(x) && x >= 0.0, "delay offset must be finite and >= 0, got " + std::to_string(x));
    const int top = static_cast<int>(std::floor(x)) + 2;
    require(top < lags, "delay offset " + std::to_string(x) + " chips does not fit " +
                            std::to_string(lags) + " delay lags");
}

}  // namespace

PilotSequence::PilotSequence(std::vector<double> chips, double chip_interval_s, double power_w, int index)
    : chips_(std::move(chips)), chip_interval_s_(chip_interval_s), power_w_(power_w), index_(index) {
    require(chips_.size() >= 2, "pilot length must be >= 2");
    for (double c : chips_) require(c == 1.0 || c == -1.0, "pilot chips must be exactly +1 or -1");
    require(chip_interval_s_ > 0.0, "chip interval must be > 0");
    require(power_w_ > 0.0, "pilot power must be > 0");
}

PilotSequence PilotSequence::random_bpsk(int length, std::uint64_t seed, double chip_interval_s,
                                         double power_w, int index) {
    require(length >= 2, "pilot length must be >= 2");
    Rng rng(seed);
    std::vector<double> chips(static_cast<std::size_t>(length));
    for (auto& c : chips) c = (rng() >> 63) ? 1.0 : -1.0;
    return PilotSequence(std::move(chips), chip_interval_s, power_w, index);
}

void SyncOffset::validate(double chip_interval_s) const {
    require(chip_interval_s > 0.0, "chip interval must be > 0");
    require(to_bound_chips >= 1, "eta must be >= 1");
    require(std::abs(cfo_hz) <= cfo_bound_hz, "|cfo| exceeds f_max");
    const double x = to_chips(chip_interval_s);
    require(x >= 0.0 && x <= to_bound_chips, "timing offset outside [0, eta] chips");
}

SyncOffset SyncOffset::from_normalized(double to_chips, double cfo_norm, double chip_interval_s,
                                       double fmax_norm, int eta) {
    SyncOffset o;
    o.to_seconds = to_chips * chip_interval_s;
    o.cfo_hz = cfo_norm / chip_interval_s;
    o.cfo_bound_hz = fmax_norm / chip_interval_s;
    o.to_bound_chips = eta;
    o.validate(chip_interval_s);
    return o;
}

LinkChannel::LinkChannel(std::vector<ChannelTap> taps, double large_scale_beta)
    : taps_(std::move(taps)), beta_(large_scale_beta) {
    require(!taps_.empty(), "channel needs at least one tap");
    require(beta_ > 0.0, "large-scale factor must be > 0");
    for (std::size_t l = 0; l < taps_.size(); ++l) {
        require(taps_[l].delay_s >= 0.0, "tap delays must be >= 0");
        require(taps_[l].gain >= 0.0, "tap gains must be >= 0");
        if (l > 0) require(taps_[l].delay_s >= taps_[l - 1].delay_s, "tap delays must be nondecreasing");
    }
}

CVector LinkChannel::coefficients() const {
    CVector h(num_taps());
    const double amp = std::sqrt(beta_);
    for (int l = 0; l < num_taps(); ++l) {
        const auto& t = taps_[static_cast<std::size_t>(l)];
        h(l) = t.gain * amp * t.small_scale;
    }
    return h;
}

std::vector<double> LinkChannel::delays_chips(double chip_interval_s) const {
    std::vector<double> d;
    d.reserve(taps_.size());
    for (const auto& t : taps_) d.push_back(t.delay_s / chip_interval_s);
    return d;
}

LinkChannel LinkChannel::with_beta(double beta) const { return LinkChannel(taps_, beta); }

LinkChannel LinkChannel::with_small_scale(std::span<const cdouble> psi) const {
    require(psi.size() == taps_.size(), "small-scale vector length must equal tap count");
    auto taps = taps_;
    for (std::size_t l = 0; l < taps.size(); ++l) taps[l].small_scale = psi[l];
    return LinkChannel(std::move(taps), beta_);
}

void LinkChannel::check_cp(double chip_interval_s, double cp_chips) const {
    const double spread = (taps_.back().delay_s - taps_.front().delay_s) / chip_interval_s;
    require(spread <= cp_chips, "channel delay spread exceeds the cyclic prefix");
}

ObservationWindow ObservationWindow::minimal(int pilot_len, double max_offset_chips) {
    require(pilot_len >= 2, "pilot length must be >= 2");
    require(max_offset_chips >= 0.0, "max offset must be >= 0");
    return {pilot_len + static_cast<int>(std::ceil(max_offset_chips)) + 2};
}

double tri_kernel(double t) noexcept {
    if (t > 0.0 && t <= 1.0) return t;
    if (t > 1.0 && t <= 2.0) return 2.0 - t;
    return 0.0;
}

CDiagonal cfo_matrix(double cfo_norm, int num_samples) {
    require(num_samples >= 1, "cfo_matrix needs M >= 1");
    CVector d(num_samples);
    for (int m = 0; m < num_samples; ++m) d(m) = std::polar(1.0, kTwoPi * cfo_norm * m);
    return CDiagonal(d);
}

RMatrix pilot_matrix(const PilotSequence& pilot, int num_samples) {
    const int n = pilot.length();
    require(num_samples >= n, "pilot_matrix needs M >= N");
    const int lags = num_samples - n + 1;
    RMatrix s = RMatrix::Zero(num_samples, lags);
    for (int r = 0; r < lags; ++r)
        for (int k = 0; k < n; ++k) s(r + k, r) = pilot.chip(k);
    return s;
}

RMatrix delay_matrix(double to_chips, std::span<const double> delays_chips, int num_samples, int pilot_len) {
    require(num_samples >= pilot_len, "delay_matrix needs M >= N");
    require(!delays_chips.empty(), "delay_matrix needs at least one tap");
    const int lags = num_samples - pilot_len + 1;
    RMatrix u = RMatrix::Zero(lags, static_cast<Eigen::Index>(delays_chips.size()));
    for (std::size_t l = 0; l < delays_chips.size(); ++l) {
        const double x = to_chips + delays_chips[l];
        check_offset_in_window(x, lags);
        const int r0 = static_cast<int>(std::floor(x)) + 1;
        const auto col = static_cast<Eigen::Index>(l);
        u(r0, col) = tri_kernel(r0 - x);
        u(r0 + 1, col) = tri_kernel(r0 + 1 - x);
    }
    return u;
}

RMatrix delay_matrix_derivative(double to_chips, std::span<const double> delays_chips, int num_samples,
                                int pilot_len) {
    require(num_samples >= pilot_len, "delay_matrix_derivative needs M >= N");
    require(!delays_chips.empty(), "delay_matrix_derivative needs at least one tap");
    const int lags = num_samples - pilot_len + 1;
    RMatrix du = RMatrix::Zero(lags, static_cast<Eigen::Index>(delays_chips.size()));
    for (std::size_t l = 0; l < delays_chips.size(); ++l) {
        const double x = to_chips + delays_chips[l];
        check_offset_in_window(x, lags);
        require(x != std::floor(x), "delay derivative undefined at integer alignment x = " + std::to_string(x));
        const int r0 = static_cast<int>(std::floor(x)) + 1;
        const auto col = static_cast<Eigen::Index>(l);
        du(r0, col) = -1.0;
        du(r0 + 1, col) = 1.0;
    }
    return du;
}

CMatrix signal_matrix(double to_chips, double cfo_norm, const PilotSequence& pilot,
                      std::span<const double> delays_chips, int num_samples) {
    const int n = pilot.length();
    require(num_samples >= n, "signal_matrix needs M >= N");
    require(!delays_chips.empty(), "signal_matrix needs at least one tap");
    const int lags = num_samples - n + 1;
    CMatrix g = CMatrix::Zero(num_samples, static_cast<Eigen::Index>(delays_chips.size()));
    for (std::size_t l = 0; l < delays_chips.size(); ++l) {
        const double x = to_chips + delays_chips[l];
        check_offset_in_window(x, lags);
        const int r0 = static_cast<int>(std::floor(x)) + 1;
        const double w0 = tri_kernel(r0 - x);
        const double w1 = tri_kernel(r0 + 1 - x);
        const auto col = static_cast<Eigen::Index>(l);
        for (int k = 0; k < n; ++k) {
            const double c = pilot.chip(k);
            g(r0 + k, col) += w0 * c;
            g(r0 + 1 + k, col) += w1 * c;
        }
    }
    for (int m = 0; m < num_samples; ++m) g.row(m) *= std::polar(1.0, kTwoPi * cfo_norm * m);
    return g;
}

CVector emitter_signal(const Emitter& e, const PilotSequence& pilot, const ObservationWindow& window) {
    const double ts = pilot.chip_interval();
    const auto delays = e.channel.delays_chips(ts);
    return signal_matrix(e.offset.to_chips(ts), e.offset.cfo_norm(ts), pilot, delays, window.num_samples) *
           e.channel.coefficients();
}

CVector synthesize_rx(const Emitter& primary, std::span<const Emitter> interferers, const PilotSequence& pilot,
                      const ObservationWindow& window, double noise_sigma2, std::uint64_t seed) {
    require(noise_sigma2 >= 0.0, "noise variance must be >= 0");
    CVector y = emitter_signal(primary, pilot, window);
    for (const auto& e : interferers) y += emitter_signal(e, pilot, window);
    if (noise_sigma2 > 0.0) {
        Rng rng(seed);
        for (Eigen::Index m = 0; m < y.size(); ++m) y(m) += complex_normal(rng, noise_sigma2);
    }
    return y;
}

}  // namespace cfsync

#pragma once

// Discrete-time pilot-burst observation model.
//
// A master AP collects M chip-rate samples
//
//     y = sum_i F(cfo_i) S U(to_i) h_i + w
//
// where F is the diagonal CFO phase ramp, S the banded pilot matrix, U the
// delay/convolution matrix built from the triangular chip-matched kernel and
// h the multipath coefficients. All indices in this library are 0-based:
// sample m = 0..M-1, pilot-matrix column (delay lag) r = 0..M-N, tap l.
// Relative to the 1-based printed convention the delay-matrix row n maps to
// r = n - 1, so [U]_{r,l} = tri_kernel(r - (to + delay_l)).

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cfsync {

using cdouble = std::complex<double>;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using CDiagonal = Eigen::DiagonalMatrix<cdouble, Eigen::Dynamic>;

// BPSK synchronization pilot. Chips are exactly +1 or -1.
class PilotSequence {
public:
    PilotSequence(std::vector<double> chips, double chip_interval_s = 1e-6, double power_w = 1.0,
                  int index = 0);

    static PilotSequence random_bpsk(int length, std::uint64_t seed, double chip_interval_s = 1e-6,
                                     double power_w = 1.0, int index = 0);

    const std::vector<double>& chips() const noexcept { return chips_; }
    int length() const noexcept { return static_cast<int>(chips_.size()); }
    double chip_interval() const noexcept { return chip_interval_s_; }
    double power() const noexcept { return power_w_; }
    int index() const noexcept { return index_; }

    // Chip n, or 0 outside [0, N).
    double chip(int n) const noexcept {
        return (n >= 0 && n < length()) ? chips_[static_cast<std::size_t>(n)] : 0.0;
    }

private:
    std::vector<double> chips_;
    double chip_interval_s_;
    double power_w_;
    int index_;
};

// Carrier-frequency and timing offset of one slave relative to its master,
// with the priors they are drawn from.
struct SyncOffset {
    double cfo_hz = 0.0;
    double to_seconds = 0.0;
    double cfo_bound_hz = 0.0;  // f_max
    int to_bound_chips = 1;     // eta

    void validate(double chip_interval_s) const;
    double to_chips(double chip_interval_s) const { return to_seconds / chip_interval_s; }
    double cfo_norm(double chip_interval_s) const { return cfo_hz * chip_interval_s; }

    static SyncOffset from_normalized(double to_chips, double cfo_norm, double chip_interval_s,
                                      double fmax_norm, int eta);
};

struct ChannelTap {
    double delay_s = 0.0;        // path delay
    double gain = 1.0;           // path gain coefficient (alpha)
    cdouble small_scale{1.0, 0.0};  // psi ~ CN(0,1)
};

// Multipath link between one slave and one master. Coefficient of tap l is
// gain_l * sqrt(beta) * psi_l.
class LinkChannel {
public:
    LinkChannel(std::vector<ChannelTap> taps, double large_scale_beta);

    const std::vector<ChannelTap>& taps() const noexcept { return taps_; }
    int num_taps() const noexcept { return static_cast<int>(taps_.size()); }
    double beta() const noexcept { return beta_; }

    CVector coefficients() const;
    std::vector<double> delays_chips(double chip_interval_s) const;

    // Same taps and gains, different large-scale factor or small-scale draw.
    LinkChannel with_beta(double beta) const;
    LinkChannel with_small_scale(std::span<const cdouble> psi) const;

    // Check the taps fit a cyclic prefix of `cp_chips` chips.
    void check_cp(double chip_interval_s, double cp_chips) const;

private:
    std::vector<ChannelTap> taps_;
    double beta_;
};

struct ObservationWindow {
    int num_samples = 0;  // M

    // Smallest M for which every delay-matrix row used by a pilot of length N,
    // offsets up to `max_offset_chips` (to + path delay) stays in range.
    static ObservationWindow minimal(int pilot_len, double max_offset_chips);

    int lags(int pilot_len) const noexcept { return num_samples - pilot_len + 1; }
};

// Triangular chip-matched kernel: t on (0,1], 2-t on (1,2], 0 elsewhere.
double tri_kernel(double t) noexcept;

// diag(exp(j 2 pi m cfo_norm)), m = 0..M-1.
CDiagonal cfo_matrix(double cfo_norm, int num_samples);

// M x (M-N+1) banded matrix, [S]_{m,r} = s[m - r].
RMatrix pilot_matrix(const PilotSequence& pilot, int num_samples);

// (M-N+1) x L delay matrix, [U]_{r,l} = tri_kernel(r - to - delay_l).
RMatrix delay_matrix(double to_chips, std::span<const double> delays_chips, int num_samples,
                     int pilot_len);

// dU/d(to_chips): -1 at row floor(x)+1, +1 at row floor(x)+2 with
// x = to + delay_l. Rejects exact integer x where the kernel has a kink.
RMatrix delay_matrix_derivative(double to_chips, std::span<const double> delays_chips,
                                int num_samples, int pilot_len);

// F S U as an M x L matrix, built column-by-column without forming S.
CMatrix signal_matrix(double to_chips, double cfo_norm, const PilotSequence& pilot,
                      std::span<const double> delays_chips, int num_samples);

// One transmitter seen by the master: its offset and its channel.
struct Emitter {
    SyncOffset offset;
    LinkChannel channel;
};

// Noiseless F S U h for a single emitter.
CVector emitter_signal(const Emitter& e, const PilotSequence& pilot, const ObservationWindow& window);

// Received burst: desired + co-pilot interferers + CN(0, sigma2) noise.
// Deterministic in `seed`.
CVector synthesize_rx(const Emitter& primary, std::span<const Emitter> interferers,
                      const PilotSequence& pilot, const ObservationWindow& window,
                      double noise_sigma2, std::uint64_t seed);

}  // namespace cfsync

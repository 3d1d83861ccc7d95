#include "cfsync/mle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cfsync/error.hpp"

namespace cfsync {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGramRcond = 1e-12;

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

// Solves Gram * h = b for a small Hermitian PSD Gram; nullopt if degenerate.
template <typename Gram, typename Vec>
std::optional<CVector> solve_gram(const Gram& gram, const Vec& b) {
    Eigen::SelfAdjointEigenSolver<Gram> eig(gram);
    if (eig.info() != Eigen::Success) return std::nullopt;
    const auto& lambda = eig.eigenvalues();
    if (!(lambda.minCoeff() > kGramRcond * lambda.maxCoeff())) return std::nullopt;
    const CVector rotated = eig.eigenvectors().adjoint().template cast<cdouble>() * b;
    const CVector scaled = rotated.cwiseQuotient(lambda.template cast<cdouble>());
    return CVector(eig.eigenvectors().template cast<cdouble>() * scaled);
}

// Grid evaluator. The Gram matrix U^T S^T S U does not depend on the CFO, and
// G^H y = U^T c where c[r] = sum_n s[n] (F^H y)[n + r] is the pilot
// correlation of the de-rotated burst.
class ProjectionKernel {
public:
    ProjectionKernel(const CVector& y, const PilotSequence& pilot, std::span<const double> delays, int num_samples)
        : y_(y), pilot_(pilot), delays_(delays.begin(), delays.end()), m_(num_samples),
          lags_(num_samples - pilot.length() + 1) {
        const int n = pilot.length();
        autocorr_.assign(static_cast<std::size_t>(lags_), 0.0);
        for (int d = 0; d < lags_ && d < n; ++d) {
            double acc = 0.0;
            for (int k = 0; k + d < n; ++k) acc += pilot.chip(k) * pilot.chip(k + d);
            autocorr_[static_cast<std::size_t>(d)] = acc;
        }
    }

    // Pilot correlation at every lag for one CFO hypothesis.
    std::vector<cdouble> correlate(double cfo_norm) const {
        const int n = pilot_.length();
        std::vector<cdouble> z(static_cast<std::size_t>(m_));
        for (int k = 0; k < m_; ++k) z[static_cast<std::size_t>(k)] = std::polar(1.0, -kTwoPi * cfo_norm * k) * y_(k);
        std::vector<cdouble> c(static_cast<std::size_t>(lags_));
        for (int r = 0; r < lags_; ++r) {
            cdouble acc{};
            for (int k = 0; k < n; ++k) acc += pilot_.chip(k) * z[static_cast<std::size_t>(r + k)];
            c[static_cast<std::size_t>(r)] = acc;
        }
        return c;
    }

    // Energy and LS channel for one TO given the correlation of one CFO.
    std::optional<std::pair<double, CVector>> evaluate(double to_chips, const std::vector<cdouble>& corr) const {
        const auto taps = static_cast<Eigen::Index>(delays_.size());
        std::vector<int> row(delays_.size());
        std::vector<double> w0(delays_.size()), w1(delays_.size());
        for (std::size_t l = 0; l < delays_.size(); ++l) {
            const double x = to_chips + delays_[l];
            if (!(x >= 0.0)) return std::nullopt;
            const int r0 = static_cast<int>(std::floor(x)) + 1;
            if (r0 + 1 >= lags_) return std::nullopt;
            row[l] = r0;
            w0[l] = tri_kernel(r0 - x);
            w1[l] = tri_kernel(r0 + 1 - x);
        }
        RMatrix gram(taps, taps);
        CVector b(taps);
        for (Eigen::Index a = 0; a < taps; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            b(a) = w0[ua] * corr[static_cast<std::size_t>(row[ua])] + w1[ua] * corr[static_cast<std::size_t>(row[ua] + 1)];
            for (Eigen::Index q = a; q < taps; ++q) {
                const auto uq = static_cast<std::size_t>(q);
                const double g = w0[ua] * w0[uq] * rho(row[ua] - row[uq]) + w0[ua] * w1[uq] * rho(row[ua] - row[uq] - 1) +
                                 w1[ua] * w0[uq] * rho(row[ua] + 1 - row[uq]) + w1[ua] * w1[uq] * rho(row[ua] - row[uq]);
                gram(a, q) = g;
                gram(q, a) = g;
            }
        }
        auto h = solve_gram(gram, b);
        if (!h) return std::nullopt;
        const double energy = std::max(0.0, (b.adjoint() * *h)(0).real());
        return std::make_pair(energy, std::move(*h));
    }

private:
    double rho(int d) const {
        d = std::abs(d);
        return d < lags_ ? autocorr_[static_cast<std::size_t>(d)] : 0.0;
    }

    const CVector& y_;
    const PilotSequence& pilot_;
    std::vector<double> delays_;
    int m_;
    int lags_;
    std::vector<double> autocorr_;
};

struct Incumbent {
    double to = 0.0;
    double cfo = 0.0;
    double energy = -1.0;
    CVector h;
};

std::vector<double> axis(double lo, double hi, int points) {
    std::vector<double> v(static_cast<std::size_t>(points));
    if (points == 1) {
        v[0] = lo;
        return v;
    }
    const double step = (hi - lo) / (points - 1);
    for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = lo + step * i;
    v.back() = hi;
    return v;
}

std::vector<double> local_axis(double center, double step, int half, double lo, double hi) {
    std::vector<double> v;
    for (int k = -half; k <= half; ++k) {
        const double p = center + k * step;
        if (p < lo || p > hi) continue;
        v.push_back(k == 0 ? center : p);
    }
    return v;
}

// Scans to-major, cfo-minor; strict improvement keeps the first maximum.
void scan(const ProjectionKernel& kernel, const std::vector<double>& tos, const std::vector<double>& cfos,
          Incumbent& best) {
    std::vector<std::vector<cdouble>> corr;
    corr.reserve(cfos.size());
    for (double f : cfos) corr.push_back(kernel.correlate(f));
    for (double t : tos) {
        for (std::size_t j = 0; j < cfos.size(); ++j) {
            auto r = kernel.evaluate(t, corr[j]);
            if (!r) continue;
            if (r->first > best.energy) {
                best.energy = r->first;
                best.to = t;
                best.cfo = cfos[j];
                best.h = std::move(r->second);
            }
        }
    }
}

}  // namespace

GridSpec GridSpec::from_prior(int eta, double fmax_norm) {
    GridSpec g;
    g.to_min = 0.0;
    g.to_max = eta;
    g.cfo_min = -fmax_norm;
    g.cfo_max = fmax_norm;
    return g;
}

void GridSpec::validate() const {
    require(to_points >= 1 && cfo_points >= 1, "grid needs at least one point per axis");
    require(to_max >= to_min && cfo_max >= cfo_min, "grid ranges must be ordered");
    require(to_min >= 0.0, "TO range must start at >= 0");
    require(refine_levels >= 0, "refine_levels must be >= 0");
    require(zoom >= 2, "zoom must be >= 2");
}

CVector ls_channel(const CVector& y, double to_chips, double cfo_norm, const PilotSequence& pilot,
                   std::span<const double> delays_chips, const ObservationWindow& window) {
    require(y.size() == window.num_samples, "received vector length must equal M");
    const CMatrix g = signal_matrix(to_chips, cfo_norm, pilot, delays_chips, window.num_samples);
    const CMatrix gram = g.adjoint() * g;
    auto h = solve_gram(gram, CVector(g.adjoint() * y));
    if (!h) throw DegenerateGeometry("least-squares Gram matrix is singular (coincident taps?)");
    return *h;
}

double projection_energy(const CVector& y, double to_chips, double cfo_norm, const PilotSequence& pilot,
                         std::span<const double> delays_chips, const ObservationWindow& window) {
    require(y.size() == window.num_samples, "received vector length must equal M");
    const CMatrix g = signal_matrix(to_chips, cfo_norm, pilot, delays_chips, window.num_samples);
    const CVector b = g.adjoint() * y;
    auto h = solve_gram(CMatrix(g.adjoint() * g), b);
    if (!h) throw DegenerateGeometry("least-squares Gram matrix is singular (coincident taps?)");
    return std::max(0.0, (b.adjoint() * *h)(0).real());
}

MlEstimate ml_estimate(const CVector& y, const GridSpec& grid, const PilotSequence& pilot,
                       std::span<const double> delays_chips, const ObservationWindow& window) {
    grid.validate();
    require(y.size() == window.num_samples, "received vector length must equal M");
    require(!delays_chips.empty(), "need at least one tap delay");

    const ProjectionKernel kernel(y, pilot, delays_chips, window.num_samples);
    Incumbent best;
    scan(kernel, axis(grid.to_min, grid.to_max, grid.to_points), axis(grid.cfo_min, grid.cfo_max, grid.cfo_points),
         best);
    if (best.energy < 0.0) throw EstimationFailed("every grid point was degenerate");

    double to_step = grid.to_step();
    double cfo_step = grid.cfo_step();
    for (int level = 0; level < grid.refine_levels; ++level) {
        to_step /= grid.zoom;
        cfo_step /= grid.zoom;
        const auto tos = to_step > 0.0 ? local_axis(best.to, to_step, grid.zoom, grid.to_min, grid.to_max)
                                       : std::vector<double>{best.to};
        const auto cfos = cfo_step > 0.0 ? local_axis(best.cfo, cfo_step, grid.zoom, grid.cfo_min, grid.cfo_max)
                                         : std::vector<double>{best.cfo};
        scan(kernel, tos, cfos, best);
    }

    return {best.to, best.cfo, std::move(best.h), best.energy};
}

}  // namespace cfsync

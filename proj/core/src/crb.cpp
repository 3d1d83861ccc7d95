#include "cfsync/crb.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "cfsync/error.hpp"

namespace cfsync {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAlignmentNudge = 1e-9;

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

// (S v)[m] = sum_r s[m - r] v[r]
CVector apply_pilot(const PilotSequence& pilot, const CVector& v, int num_samples) {
    CVector out = CVector::Zero(num_samples);
    const int n = pilot.length();
    for (Eigen::Index r = 0; r < v.size(); ++r) {
        if (v(r) == cdouble{}) continue;
        for (int k = 0; k < n; ++k) out(r + k) += pilot.chip(k) * v(r);
    }
    return out;
}

}  // namespace

void InterfererStat::validate() const {
    require(main_gain >= 0.0, "interferer gain must be >= 0");
    require(main_delay_chips >= 0.0 && main_delay_chips < 1.0, "interferer main delay must lie in [0, 1) chips");
}

SecondMomentA::SecondMomentA(double main_delay_chips, int eta) : c_(main_delay_chips), eta_(eta) {
    require(eta >= 1, "eta must be >= 1");
    require(main_delay_chips >= 0.0 && main_delay_chips < 1.0, "main delay must lie in [0, 1) chips");

    const double c = c_;
    const double c2 = c * c;
    const double c3 = c2 * c;
    const double e = eta;
    const int end = support_end();
    block_ = RMatrix::Zero(end, end);
    auto sym = [&](int i, int j, double v) {
        block_(i, j) = v;
        block_(j, i) = v;
    };

    // Rows are 0-based: printed row n sits at n - 1.
    block_(1, 1) = std::pow(1.0 - c, 3) / (3.0 * e);
    sym(1, 2, (1.0 - 3.0 * c2 + 2.0 * c3) / (6.0 * e));
    for (int v = 2; v <= eta; ++v) sym(v, v + 1, 1.0 / (6.0 * e));
    for (int v = 2; v <= eta - 1; ++v) block_(v + 1, v + 1) = 2.0 / (3.0 * e);
    sym(eta + 1, eta + 2, (3.0 * c2 - 2.0 * c3) / (6.0 * e));
    block_(eta + 2, eta + 2) = c3 / (3.0 * e);
    if (eta == 1) {
        // Rows 2 collects both the first and the last TO case.
        block_(2, 2) = (1.0 - 3.0 * c2 + 3.0 * c) / 3.0;
    } else {
        block_(2, 2) = (2.0 - c3) / (3.0 * e);
        block_(eta + 1, eta + 1) = (2.0 - std::pow(1.0 - c, 3)) / (3.0 * e);
    }
}

double SecondMomentA::operator()(int row, int col) const noexcept {
    const int end = support_end();
    if (row < 0 || col < 0 || row >= end || col >= end) return 0.0;
    return block_(row, col);
}

double SecondMomentA::trace() const noexcept { return block_.trace(); }

SecondMomentA second_moment_A(double main_delay_chips, int eta) { return SecondMomentA(main_delay_chips, eta); }

RVector contamination_diag(const PilotSequence& pilot, const SecondMomentA& a, double main_gain, int num_samples) {
    require(main_gain >= 0.0, "main gain must be >= 0");
    require(num_samples >= pilot.length(), "contamination_diag needs M >= N");
    require(num_samples - pilot.length() + 1 >= a.support_end(),
            "observation window too short for eta = " + std::to_string(a.eta()));
    RVector d = RVector::Zero(num_samples);
    if (main_gain == 0.0) return d;
    const int end = a.support_end();
    for (int n = 0; n < num_samples; ++n) {
        double acc = 0.0;
        for (int k = 1; k < end; ++k) {
            const double sk = pilot.chip(n - k);
            if (sk == 0.0) continue;
            for (int k1 = k - 1; k1 <= k + 1; ++k1) acc += a(k1, k) * pilot.chip(n - k1) * sk;
        }
        d(n) = main_gain * acc;
    }
    return d;
}

RVector xi_covariance(std::span<const RVector> interferer_diags, double noise_sigma2, int num_samples) {
    require(noise_sigma2 > 0.0, "noise variance must be > 0");
    RVector xi = RVector::Constant(num_samples, noise_sigma2);
    for (const auto& d : interferer_diags) {
        require(d.size() == num_samples, "contamination diagonal length mismatch");
        xi += d;
    }
    return xi;
}

CMatrix jacobian_columns(const ThetaVector& theta, const PilotSequence& pilot, std::span<const double> delays_chips,
                         int num_samples) {
    require(static_cast<std::size_t>(theta.taps.size()) == delays_chips.size(), "tap count mismatch");
    const int taps = static_cast<int>(delays_chips.size());
    const int n = pilot.length();

    const CMatrix g = signal_matrix(theta.to_chips, theta.cfo_norm, pilot, delays_chips, num_samples);
    const CVector m = g * theta.taps;

    // The kernel has a kink at integer alignment; step just past it.
    double to_for_derivative = theta.to_chips;
    for (double d : delays_chips) {
        const double x = to_for_derivative + d;
        if (x == std::floor(x)) {
            to_for_derivative += kAlignmentNudge;
            break;
        }
    }
    const RMatrix du = delay_matrix_derivative(to_for_derivative, delays_chips, num_samples, n);
    CVector d_to = apply_pilot(pilot, du.cast<cdouble>() * theta.taps, num_samples);
    d_to = cfo_matrix(theta.cfo_norm, num_samples) * d_to;

    CMatrix omega(num_samples, theta.size());
    omega.col(0) = d_to;
    for (int k = 0; k < num_samples; ++k) omega(k, 1) = cdouble(0.0, kTwoPi * k) * m(k);
    for (int l = 0; l < taps; ++l) {
        omega.col(2 + 2 * l) = g.col(l);
        omega.col(3 + 2 * l) = cdouble(0.0, 1.0) * g.col(l);
    }
    return omega;
}

FisherReport fisher_and_crb(const CMatrix& omega, const RVector& xi_diag, double max_condition) {
    require(omega.rows() == xi_diag.size(), "Omega rows must equal Xi length");
    require(xi_diag.size() > 0 && xi_diag.minCoeff() > 0.0, "Xi must be strictly positive");

    const RVector w = xi_diag.cwiseInverse().cwiseSqrt();
    const CMatrix whitened = w.asDiagonal() * omega;
    RMatrix j = 2.0 * (whitened.adjoint() * whitened).real();
    j = 0.5 * (j + j.transpose());

    // Condition of the unit-diagonal scaling, so parameter units and the
    // overall noise level do not count as ill-conditioning.
    const RVector d = j.diagonal();
    if (!(d.minCoeff() > 0.0)) throw DegenerateGeometry("Fisher matrix has a zero diagonal entry");
    const RVector scale = d.cwiseInverse().cwiseSqrt();
    const RMatrix js = scale.asDiagonal() * j * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(js);
    if (eig.info() != Eigen::Success) throw DegenerateGeometry("Fisher eigendecomposition failed");
    const RVector lambda = eig.eigenvalues();
    const double lo = lambda.minCoeff();
    const double hi = lambda.maxCoeff();
    const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(cond <= max_condition)) {
        throw DegenerateGeometry("Fisher matrix is singular or ill-conditioned (condition " + std::to_string(cond) +
                                 ")");
    }

    const RMatrix inv = scale.asDiagonal() *
                        (eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose()) *
                        scale.asDiagonal();
    FisherReport r;
    r.fisher = std::move(j);
    r.crb_to_chips = inv(0, 0);
    r.crb_cfo_norm = inv(1, 1);
    r.condition_number = cond;
    return r;
}

double mean_xi_bpsk(std::span<const InterfererStat> interferers, int eta, double noise_sigma2) {
    double level = noise_sigma2;
    for (const auto& i : interferers) {
        i.validate();
        level += i.main_gain * SecondMomentA(i.main_delay_chips, eta).trace();
    }
    return level;
}

FisherReport link_crb(const LinkCrbInput& in) {
    require(in.pilot != nullptr && in.channel != nullptr, "link_crb needs a pilot and a channel");
    require(in.noise_sigma2 > 0.0, "noise variance must be > 0");
    const double scale = in.channel->beta();
    const double ts = in.pilot->chip_interval();

    std::vector<RVector> diags;
    diags.reserve(in.interferers.size());
    for (const auto& i : in.interferers) {
        i.validate();
        diags.push_back(contamination_diag(*in.pilot, SecondMomentA(i.main_delay_chips, in.eta),
                                           i.main_gain / scale, in.num_samples));
    }
    const RVector xi = xi_covariance(diags, in.noise_sigma2 / scale, in.num_samples);

    const LinkChannel normalized = in.channel->with_beta(1.0);
    ThetaVector theta{in.to_chips, in.cfo_norm, normalized.coefficients()};
    const auto delays = normalized.delays_chips(ts);
    return fisher_and_crb(jacobian_columns(theta, *in.pilot, delays, in.num_samples), xi);
}

}  // namespace cfsync

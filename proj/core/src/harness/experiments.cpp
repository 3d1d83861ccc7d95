#include "cfsync/harness/experiments.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cfsync/error.hpp"
#include "cfsync/rng.hpp"

#ifndef CFSYNC_FIXTURE_DIR
#define CFSYNC_FIXTURE_DIR "fixtures"
#endif

namespace cfsync::harness {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kPilotTag = 0x70696c6f74ULL;
constexpr std::uint64_t kPsiTag = 0x707369ULL;
constexpr std::uint64_t kMasterTag = 0x6d617374ULL;
constexpr int kUnbounded = INT_MAX / 4;

std::string fmt(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

// Welford running mean / variance.
struct Running {
    long long n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double se() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0; }
};

// The two kernel weights and the first row they occupy for offset x.
struct Taps2 {
    int r0;
    double w0, w1;
};
Taps2 kernel_rows(double x) {
    const int r0 = static_cast<int>(std::floor(x)) + 1;
    return {r0, tri_kernel(r0 - x), tri_kernel(r0 + 1 - x)};
}

double frac(double x) { return x - std::floor(x); }

}  // namespace

std::filesystem::path resolve_fixture(const std::filesystem::path& path) {
    if (std::filesystem::exists(path)) return path;
    const auto bundled = std::filesystem::path(CFSYNC_FIXTURE_DIR) / path.filename();
    if (std::filesystem::exists(bundled)) return bundled;
    throw Error("fixture not found: " + path.string());
}

std::vector<DElementSample> d_element_check(const PilotSequence& pilot, double main_delay_chips, int eta,
                                            double fmax_norm, double main_gain, const std::vector<int>& indices,
                                            int num_samples, int trials, std::uint64_t seed) {
    const SecondMomentA a(main_delay_chips, eta);
    const RVector d = contamination_diag(pilot, a, main_gain, num_samples);
    Rng rng(seed);
    std::uniform_real_distribution<double> to(0.0, eta), cfo(-fmax_norm, fmax_norm);
    std::vector<Running> acc(indices.size());
    const double amp = std::sqrt(main_gain);
    for (int t = 0; t < trials; ++t) {
        const Taps2 k = kernel_rows(to(rng) + main_delay_chips);
        const double f = cfo(rng);
        const cdouble psi = complex_normal(rng);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            const int n = indices[i];
            const double su = k.w0 * pilot.chip(n - k.r0) + k.w1 * pilot.chip(n - k.r0 - 1);
            const cdouble v = std::polar(1.0, kTwoPi * f * n) * amp * psi * su;
            acc[i].add(std::norm(v));
        }
    }
    std::vector<DElementSample> out;
    for (std::size_t i = 0; i < indices.size(); ++i)
        out.push_back({indices[i], d(indices[i]), acc[i].mean, acc[i].se()});
    return out;
}

std::vector<ResultRow> run_fig_d_elements(const ExperimentConfig& cfg) {
    std::vector<ResultRow> rows;
    const std::uint64_t base = cfg.scenario.seed;
    for (int n_len : cfg.pilot_lens) {
        const auto pilot = PilotSequence::random_bpsk(n_len, derive_seed(base, {kPilotTag, static_cast<std::uint64_t>(n_len)}));
        for (double c : cfg.main_delays)
            for (int eta : cfg.etas) {
                const int m = ObservationWindow::minimal(n_len, eta + 1.0).num_samples;
                const RVector d = contamination_diag(pilot, SecondMomentA(c, eta), 1.0, m);
                std::vector<int> idx;
                for (int n : {1, 2, eta + 1, n_len / 2, n_len, n_len + eta, m - 1})
                    if (n >= 0 && n < m && d(n) > 0.0 && std::find(idx.begin(), idx.end(), n) == idx.end()) idx.push_back(n);
                const auto seed = derive_seed(base, {static_cast<std::uint64_t>(n_len), static_cast<std::uint64_t>(c * 1000),
                                                     static_cast<std::uint64_t>(eta)});
                const auto samples = d_element_check(pilot, c, eta, cfg.scenario.fmax_norm, 1.0, idx, m, cfg.num_trials, seed);
                const std::string label = "N" + std::to_string(n_len) + "_c" + fmt(c) + "_eta" + std::to_string(eta);
                for (const auto& s : samples) {
                    rows.push_back({cfg.experiment, base, double(s.n), "derived", s.derived, label});
                    rows.push_back({cfg.experiment, base, double(s.n), "monte_carlo", s.monte_carlo, label});
                    rows.push_back({cfg.experiment, base, double(s.n), "standard_error", s.standard_error, label});
                }
            }
    }
    return rows;
}

std::vector<ResultRow> run_fig_contamination_power(const ExperimentConfig& cfg) {
    std::vector<ResultRow> rows;
    const Scenario& sc = cfg.scenario;
    const std::uint64_t base = sc.seed;
    for (int n_len : cfg.pilot_lens) {
        const auto pilot = PilotSequence::random_bpsk(n_len, derive_seed(base, {kPilotTag, static_cast<std::uint64_t>(n_len)}));
        const int m = ObservationWindow::minimal(n_len, sc.eta + 1.0).num_samples;
        const std::string label = "N" + std::to_string(n_len);
        for (double d_km : cfg.sweep) {
            const double c = frac(main_delay_chips(d_km, sc));
            const double g = large_scale_beta(d_km, sc);
            const double derived = contamination_diag(pilot, SecondMomentA(c, sc.eta), g, m).sum();

            Rng rng(derive_seed(base, {static_cast<std::uint64_t>(n_len), static_cast<std::uint64_t>(d_km * 1e6)}));
            std::uniform_real_distribution<double> to(0.0, sc.eta);
            auto power_at = [&](double x) {
                const Taps2 k = kernel_rows(x);
                double p = 0.0;
                for (int n = 0; n < m; ++n) {
                    const double v = k.w0 * pilot.chip(n - k.r0) + k.w1 * pilot.chip(n - k.r0 - 1);
                    p += v * v;
                }
                return p;
            };
            Running mc;
            for (int t = 0; t < cfg.num_trials; ++t) {
                const double x = to(rng) + c;
                mc.add(g * std::norm(complex_normal(rng)) * power_at(x));
            }
            rows.push_back({cfg.experiment, base, d_km, "derived_power", derived, label});
            rows.push_back({cfg.experiment, base, d_km, "monte_carlo_power", mc.mean, label});
            rows.push_back({cfg.experiment, base, d_km, "standard_error", mc.se(), label});
            // Power for a fixed TO: the CFO drops out of |.|^2 entirely.
            for (double fixed : {0.25, 1.5, 2.75})
                if (fixed <= sc.eta)
                    rows.push_back({cfg.experiment, base, d_km, "fixed_to_power", g * power_at(fixed + c),
                                    label + "_to" + fmt(fixed)});
        }
    }
    return rows;
}

CrbMlSetup make_crb_ml_setup(const ExperimentConfig& cfg) {
    const Scenario& sc = cfg.scenario;
    const LinkChannel fixture = load_channel_fixture(resolve_fixture(cfg.channel_fixture));
    Rng rng(derive_seed(sc.seed, {kPsiTag}));
    std::vector<cdouble> psi;
    for (int l = 0; l < fixture.num_taps(); ++l) psi.push_back(complex_normal(rng));
    // Scale so that the tap norm matches the gains alone; SNR then sets sigma2.
    LinkChannel ch = fixture.with_small_scale(psi).with_beta(1.0);

    CrbMlSetup s{PilotSequence::random_bpsk(sc.pilot_len, derive_seed(sc.seed, {kPilotTag}), sc.chip_interval_s), ch,
                 {}, {}, sc.eta, sc.fmax_norm, cfg.true_to_chips, cfg.true_cfo_norm, {}, 0.0, {}};
    s.delays_chips = ch.delays_chips(sc.chip_interval_s);
    const double max_delay = *std::max_element(s.delays_chips.begin(), s.delays_chips.end());
    s.window = ObservationWindow::minimal(sc.pilot_len, sc.eta + std::max(max_delay, 1.0));
    for (std::size_t i = 0; i < cfg.interferer_gains.size(); ++i)
        s.interferers.push_back({cfg.interferer_gains[i], cfg.interferer_delays[i]});
    s.desired_trace = contamination_diag(s.pilot, SecondMomentA(0.0, sc.eta), 1.0, s.window.num_samples).sum();
    s.grid = GridSpec::from_prior(sc.eta, cfg.ml_cfo_halfwidth);
    s.grid.refine_levels = cfg.ml_refine_levels;
    return s;
}

double sigma2_for_snr(const CrbMlSetup& s, double snr_db) {
    return s.desired_trace / (s.window.num_samples * std::pow(10.0, snr_db / 10.0));
}

FisherReport setup_crb(const CrbMlSetup& s, double noise_sigma2, bool contaminated) {
    LinkCrbInput in;
    in.pilot = &s.pilot;
    in.channel = &s.channel;
    in.to_chips = s.to_chips;
    in.cfo_norm = s.cfo_norm;
    if (contaminated) in.interferers = s.interferers;
    in.noise_sigma2 = noise_sigma2;
    in.eta = s.eta;
    in.num_samples = s.window.num_samples;
    return link_crb(in);
}

MlStats ml_monte_carlo(const CrbMlSetup& s, double noise_sigma2, bool contaminated, int trials, std::uint64_t seed) {
    const double ts = s.pilot.chip_interval();
    const Emitter primary{SyncOffset::from_normalized(s.to_chips, s.cfo_norm, ts, s.fmax_norm, s.eta), s.channel};
    Running to_err, cfo_err;
    for (int t = 0; t < trials; ++t) {
        const auto trial_seed = derive_seed(seed, {static_cast<std::uint64_t>(t)});
        Rng rng(trial_seed);
        std::uniform_real_distribution<double> to(0.0, s.eta), cfo(-s.fmax_norm, s.fmax_norm);
        std::vector<Emitter> interferers;
        if (contaminated) {
            for (const auto& i : s.interferers) {
                const double x = to(rng);
                const double f = cfo(rng);
                const LinkChannel ch({{i.main_delay_chips * ts, 1.0, complex_normal(rng)}}, i.main_gain);
                interferers.push_back({SyncOffset::from_normalized(x, f, ts, s.fmax_norm, s.eta), ch});
            }
        }
        const CVector y = synthesize_rx(primary, interferers, s.pilot, s.window, noise_sigma2, mix_seed(trial_seed));
        const MlEstimate e = ml_estimate(y, s.grid, s.pilot, s.delays_chips, s.window);
        to_err.add(std::pow(e.to_chips_hat - s.to_chips, 2));
        cfo_err.add(std::pow(e.cfo_norm_hat - s.cfo_norm, 2));
    }
    return {to_err.mean, cfo_err.mean, to_err.se(), cfo_err.se(), trials};
}

std::vector<ResultRow> run_fig_crb_ml(const ExperimentConfig& cfg) {
    const CrbMlSetup s = make_crb_ml_setup(cfg);
    std::vector<ResultRow> rows;
    const std::uint64_t base = cfg.scenario.seed;
    for (double snr : cfg.sweep) {
        const double sigma2 = sigma2_for_snr(s, snr);
        for (bool contaminated : {false, true}) {
            const std::string label = contaminated ? "contaminated" : "clean";
            const FisherReport crb = setup_crb(s, sigma2, contaminated);
            const MlStats ml = ml_monte_carlo(s, sigma2, contaminated, cfg.num_trials,
                                              derive_seed(base, {static_cast<std::uint64_t>(snr * 100), contaminated}));
            rows.push_back({cfg.experiment, base, snr, "crb_to", crb.crb_to_chips, label});
            rows.push_back({cfg.experiment, base, snr, "crb_cfo", crb.crb_cfo_norm, label});
            rows.push_back({cfg.experiment, base, snr, "mse_to", ml.mse_to, label});
            rows.push_back({cfg.experiment, base, snr, "mse_cfo", ml.mse_cfo, label});
            rows.push_back({cfg.experiment, base, snr, "mse_to_se", ml.se_to, label});
            rows.push_back({cfg.experiment, base, snr, "mse_cfo_se", ml.se_cfo, label});
        }
    }
    return rows;
}

ClusterComparison compare_clusters(Scenario scenario, std::uint64_t seed) {
    scenario.seed = seed;
    const auto locs = locations(place_aps(scenario));
    const NetworkModel net(scenario, locs, seed);
    CrbEvaluator eval(net);

    ClusterComparison out;
    out.dis_max_km = max_intra_distance(scenario.sinr_min_db, PilotStats::bpsk_average(scenario.pilot_len), scenario).dis_max_km;
    const ClusterPlan proposed = adaptive_clusters(locs, {out.dis_max_km}, kUnbounded, seed);
    out.num_clusters = proposed.num_clusters;
    out.proposed = eval(proposed, nullptr);

    ClusterPlan b2 = proposed;
    assign_random_masters(b2, locs, derive_seed(seed, {kMasterTag}));
    out.benchmark2 = eval(b2, nullptr);

    ClusterPlan b3 = agglomerative_partition(locs, proposed.num_clusters);
    assign_medoid_masters(b3, locs);
    out.benchmark3 = eval(b3, nullptr);

    auto with_cpu = locs;
    with_cpu.push_back({0.0, 0.0});
    const NetworkModel net_cpu(scenario, with_cpu, seed);
    CrbEvaluator eval_cpu(net_cpu);
    out.benchmark1 = eval_cpu(central_plan(scenario.num_aps), nullptr);
    return out;
}

std::vector<ResultRow> run_fig_cluster_compare(const ExperimentConfig& cfg) {
    std::vector<ResultRow> rows;
    const std::uint64_t base = cfg.scenario.seed;
    for (double kv : cfg.sweep) {
        Scenario sc = cfg.scenario;
        sc.num_aps = static_cast<int>(kv);
        for (int s = 0; s < cfg.num_seeds; ++s) {
            const auto seed = derive_seed(base, {static_cast<std::uint64_t>(sc.num_aps), static_cast<std::uint64_t>(s)});
            const ClusterComparison c = compare_clusters(sc, seed);
            auto emit = [&](const char* label, const SumCrb& v) {
                rows.push_back({cfg.experiment, std::uint64_t(s), kv, "sum_crb", v.total(), label});
                rows.push_back({cfg.experiment, std::uint64_t(s), kv, "sum_crb_to", v.to, label});
                rows.push_back({cfg.experiment, std::uint64_t(s), kv, "sum_crb_cfo", v.cfo, label});
            };
            emit("proposed", c.proposed);
            emit("benchmark1", c.benchmark1);
            emit("benchmark2", c.benchmark2);
            emit("benchmark3", c.benchmark3);
            rows.push_back({cfg.experiment, std::uint64_t(s), kv, "num_clusters", double(c.num_clusters), "proposed"});
        }
    }
    return rows;
}

namespace {

SchemeOutcome outcome(const NetworkModel& net, const ClusterPlan& plan, const PilotAssignment& a,
                      const SinrRequirement& req) {
    CrbEvaluator eval(net);
    SchemeOutcome o;
    o.crb = eval(plan, &a);
    o.num_clusters = plan.num_clusters;
    o.tau = a.tau();
    o.overhead = 2 * plan.num_clusters + a.tau();
    o.objective = objective(a, SinrModel(net, plan), req);
    o.valid = audit_assignment(a, plan).empty();
    return o;
}

}  // namespace

PilotComparison compare_pilot_schemes(Scenario scenario, std::uint64_t seed, const SwapConfig& swap) {
    scenario.seed = seed;
    const auto locs = locations(place_aps(scenario));
    const NetworkModel net(scenario, locs, seed);
    PilotComparison out;

    OptimizeConfig oc;
    oc.overhead_budget = scenario.overhead_budget;
    oc.swap = swap;
    try {
        const OptimizeResult r = optimize_all(net, oc, seed);
        out.proposed = outcome(net, r.plan, r.assignment, swap.requirement);
    } catch (const Infeasible&) {
        out.proposed.valid = false;
        out.proposed.crb.to = out.proposed.crb.cfo = std::numeric_limits<double>::infinity();
    }

    const double dis =
        max_intra_distance(scenario.sinr_min_db, PilotStats::bpsk_average(scenario.pilot_len), scenario).dis_max_km;
    const ClusterPlan adaptive = adaptive_clusters(locs, {dis}, kUnbounded, seed);
    out.scheme3 = outcome(net, adaptive, initial_assignment(adaptive), swap.requirement);

    ClusterPlan random_masters = adaptive;
    assign_random_masters(random_masters, locs, derive_seed(seed, {kMasterTag}));
    out.scheme2 = outcome(net, random_masters, initial_assignment(random_masters), swap.requirement);

    ClusterPlan hier = agglomerative_partition(locs, adaptive.num_clusters);
    assign_medoid_masters(hier, locs);
    const PilotAssignment hier_init = initial_assignment(hier);
    out.scheme4 = outcome(net, hier, greedy_swap_improve(hier_init, SinrModel(net, hier), swap.requirement),
                          swap.requirement);

    auto with_cpu = locs;
    with_cpu.push_back({0.0, 0.0});
    const NetworkModel net_cpu(scenario, with_cpu, seed);
    ClusterPlan central = central_plan(scenario.num_aps);
    update_cluster_distances(central, with_cpu);
    out.scheme1 = outcome(net_cpu, central, PilotAssignment::orthogonal(central.slaves()), swap.requirement);
    return out;
}

std::vector<ResultRow> run_fig_pilot_sharing(const ExperimentConfig& cfg) {
    std::vector<ResultRow> rows;
    const std::uint64_t base = cfg.scenario.seed;
    SwapConfig swap;
    swap.n2_max = cfg.n2_max;
    swap.temperature = cfg.temperature;
    swap.requirement.global_db = cfg.scenario.sinr_min_db;
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        Scenario sc = cfg.scenario;
        sc.num_aps = static_cast<int>(cfg.sweep[i]);
        if (!cfg.budgets.empty()) sc.overhead_budget = cfg.budgets.size() == 1 ? cfg.budgets[0] : cfg.budgets[i];
        const double kv = cfg.sweep[i];
        for (int s = 0; s < cfg.num_seeds; ++s) {
            const auto seed = derive_seed(base, {static_cast<std::uint64_t>(sc.num_aps), static_cast<std::uint64_t>(s)});
            const PilotComparison c = compare_pilot_schemes(sc, seed, swap);
            auto emit = [&](const char* label, const SchemeOutcome& o) {
                const auto sd = std::uint64_t(s);
                rows.push_back({cfg.experiment, sd, kv, "sum_crb", o.crb.total(), label});
                rows.push_back({cfg.experiment, sd, kv, "sum_crb_to", o.crb.to, label});
                rows.push_back({cfg.experiment, sd, kv, "sum_crb_cfo", o.crb.cfo, label});
                rows.push_back({cfg.experiment, sd, kv, "tau", double(o.tau), label});
                rows.push_back({cfg.experiment, sd, kv, "overhead", double(o.overhead), label});
                rows.push_back({cfg.experiment, sd, kv, "num_clusters", double(o.num_clusters), label});
                rows.push_back({cfg.experiment, sd, kv, "objective", o.objective, label});
                rows.push_back({cfg.experiment, sd, kv, "budget", double(sc.overhead_budget), label});
            };
            emit("proposed", c.proposed);
            emit("scheme1", c.scheme1);
            emit("scheme2", c.scheme2);
            emit("scheme3", c.scheme3);
            emit("scheme4", c.scheme4);
        }
    }
    return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.experiment == "fig3") return run_fig_d_elements(cfg);
    if (cfg.experiment == "fig4") return run_fig_contamination_power(cfg);
    if (cfg.experiment == "fig5") return run_fig_crb_ml(cfg);
    if (cfg.experiment == "fig6") return run_fig_cluster_compare(cfg);
    if (cfg.experiment == "fig7") return run_fig_pilot_sharing(cfg);
    throw InvalidArgument("experiment '" + cfg.experiment + "' has no runner; use one of fig3..fig7");
}

RunArtifacts run_and_write(const ExperimentConfig& cfg) {
    const auto rows = run_experiment(cfg);
    const auto dir = resolve_output_dir(cfg.output_dir);
    RunArtifacts a{dir / (cfg.experiment + ".csv"), dir / (cfg.experiment + "_summary.json"), rows.size()};
    write_csv(a.csv, rows);
    write_summary(a.summary, cfg, rows.size());
    return a;
}

}  // namespace cfsync::harness

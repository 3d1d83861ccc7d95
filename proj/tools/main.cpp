// cfsync command-line front end.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cfsync/clustering.hpp"
#include "cfsync/error.hpp"
#include "cfsync/harness/audit.hpp"
#include "cfsync/harness/config.hpp"
#include "cfsync/harness/experiments.hpp"
#include "cfsync/harness/serialize.hpp"
#include "cfsync/network.hpp"
#include "cfsync/pilots.hpp"

namespace h = cfsync::harness;

namespace {

// Scenario flags shared by several subcommands; unset flags keep the config value.
struct ScenarioFlags {
    std::string config;
    std::optional<int> aps, pilot_len, eta, budget, taps;
    std::optional<double> area, fmax, sinr, noise_dbm, loss;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON config file");
        app->add_option("--aps", aps, "number of access points K");
        app->add_option("--pilot-len", pilot_len, "pilot length N (chips)");
        app->add_option("--eta", eta, "TO bound in chips");
        app->add_option("--fmax", fmax, "CFO bound, normalized to the chip rate");
        app->add_option("--sinr-min", sinr, "SINR requirement (dB)");
        app->add_option("--budget", budget, "overhead budget L_S");
        app->add_option("--taps", taps, "channel taps per link");
        app->add_option("--area", area, "side of the square area (km)");
        app->add_option("--noise-dbm", noise_dbm, "noise power (dBm)");
        app->add_option("--loss-db", loss, "path-loss constant L (dB)");
        app->add_option("--seed", seed, "base seed");
    }

    h::ExperimentConfig resolve(const std::string& experiment) const {
        h::ExperimentConfig cfg = config.empty() ? h::ExperimentConfig::defaults_for(experiment) : h::load_config(config);
        auto& s = cfg.scenario;
        if (aps) s.num_aps = *aps;
        if (pilot_len) s.pilot_len = *pilot_len;
        if (eta) s.eta = *eta;
        if (budget) s.overhead_budget = *budget;
        if (taps) s.num_taps = *taps;
        if (area) s.area_x_km = s.area_y_km = *area;
        if (fmax) s.fmax_norm = *fmax;
        if (sinr) s.sinr_min_db = *sinr;
        if (noise_dbm) s.noise_sigma2 = std::pow(10.0, (*noise_dbm - 30.0) / 10.0);
        if (loss) s.loss_db = *loss;
        if (seed) s.seed = *seed;
        s.validate();
        return cfg;
    }
};

void write_to(const std::string& path, const auto& writer) {
    if (path.empty() || path == "-") {
        writer(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw cfsync::Error("cannot write " + path);
    writer(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clustered over-the-air synchronization: CRBs, ML estimation, clustering and pilot sharing"};
    app.require_subcommand(1);

    // crb
    ScenarioFlags crb_flags;
    double crb_snr = 20.0;
    std::optional<double> crb_sigma2;
    bool crb_contaminated = false, crb_seconds = false;
    auto* crb = app.add_subcommand("crb", "CRB of TO and CFO for the fixture link");
    crb_flags.attach(crb);
    crb->add_option("--snr-db", crb_snr, "SNR (dB)");
    crb->add_option("--sigma2", crb_sigma2, "noise variance, overrides --snr-db");
    crb->add_flag("--contaminated", crb_contaminated, "include the configured interferers");
    crb->add_flag("--seconds", crb_seconds, "report in s^2 and Hz^2 instead of chips^2 and normalized^2");

    // ml
    ScenarioFlags ml_flags;
    double ml_snr = 20.0;
    int ml_trials = 100;
    bool ml_contaminated = false;
    auto* ml = app.add_subcommand("ml", "Monte-Carlo MSE of the ML estimator against the CRB");
    ml_flags.attach(ml);
    ml->add_option("--snr-db", ml_snr, "SNR (dB)");
    ml->add_option("--trials", ml_trials, "number of trials")->check(CLI::PositiveNumber);
    ml->add_flag("--contaminated", ml_contaminated, "include the configured interferers");

    // cluster
    ScenarioFlags cl_flags;
    std::string cl_out;
    auto* cluster = app.add_subcommand("cluster", "Adaptive cluster classification; writes a plan file");
    cl_flags.attach(cluster);
    cluster->add_option("-o,--out", cl_out, "plan file (default stdout)");

    // pilots
    ScenarioFlags pl_flags;
    std::string pl_plan_out, pl_assign_out;
    int pl_n2 = 2000;
    auto* pilots = app.add_subcommand("pilots", "Joint clustering and pilot sharing under the overhead budget");
    pl_flags.attach(pilots);
    pilots->add_option("--plan-out", pl_plan_out, "plan file");
    pilots->add_option("--assignment-out", pl_assign_out, "assignment file (default stdout)");
    pilots->add_option("--n2-max", pl_n2, "swap-matching iterations per level");

    // run
    ScenarioFlags run_flags;
    std::string run_id, run_out;
    std::optional<int> run_trials, run_seeds;
    auto* run = app.add_subcommand("run", "Run an experiment (fig3..fig7) and write CSV plus JSON summary");
    run->add_option("experiment", run_id, "experiment id")->required()->check(CLI::IsMember({"fig3", "fig4", "fig5", "fig6", "fig7"}));
    run_flags.attach(run);
    run->add_option("--out", run_out, "output directory (env CFSYNC_OUT_DIR overrides)");
    run->add_option("--trials", run_trials, "trials per point");
    run->add_option("--seeds", run_seeds, "number of seeds");

    // audit
    std::string au_plan, au_assign;
    h::AuditOptions au_opts;
    auto* audit = app.add_subcommand("audit", "Re-check a plan and assignment; exit code 0 iff all rules pass");
    audit->add_option("--plan", au_plan, "plan file")->required()->check(CLI::ExistingFile);
    audit->add_option("--assignment", au_assign, "assignment file")->required()->check(CLI::ExistingFile);
    audit->add_option("--budget", au_opts.overhead_budget, "overhead budget L_S");
    audit->add_option("--dis-max", au_opts.dis_max_km, "master-to-slave distance bound (km)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (crb->parsed() || ml->parsed()) {
            const bool is_crb = crb->parsed();
            const auto cfg = (is_crb ? crb_flags : ml_flags).resolve("fig5");
            const auto setup = h::make_crb_ml_setup(cfg);
            const double snr = is_crb ? crb_snr : ml_snr;
            const double sigma2 = (is_crb && crb_sigma2) ? *crb_sigma2 : h::sigma2_for_snr(setup, snr);
            const bool contaminated = is_crb ? crb_contaminated : ml_contaminated;
            const auto r = h::setup_crb(setup, sigma2, contaminated);
            double to = r.crb_to_chips, cfo = r.crb_cfo_norm;
            const char* to_unit = "chips^2";
            const char* cfo_unit = "(cycles/chip)^2";
            if (is_crb && crb_seconds) {
                const double ts = setup.pilot.chip_interval();
                to *= ts * ts;
                cfo /= ts * ts;
                to_unit = "s^2";
                cfo_unit = "Hz^2";
            }
            std::printf("sigma2 %.6g\ncrb_to %.6g %s\ncrb_cfo %.6g %s\n", sigma2, to, to_unit, cfo, cfo_unit);
            if (ml->parsed()) {
                const auto stats = h::ml_monte_carlo(setup, sigma2, contaminated, ml_trials, cfg.scenario.seed);
                std::printf("mse_to %.6g +- %.2g\nmse_cfo %.6g +- %.2g\n", stats.mse_to, stats.se_to, stats.mse_cfo,
                            stats.se_cfo);
            }
            return 0;
        }
        if (cluster->parsed()) {
            const auto cfg = cl_flags.resolve("fig6");
            const auto& s = cfg.scenario;
            const auto nodes = cfsync::locations(cfsync::place_aps(s));
            const auto bound = cfsync::max_intra_distance(s.sinr_min_db, cfsync::PilotStats::bpsk_average(s.pilot_len), s);
            const auto plan = cfsync::adaptive_clusters(nodes, bound, s.overhead_budget, s.seed);
            std::fprintf(stderr, "dis_max %.6g km, %d clusters\n", bound.dis_max_km, plan.num_clusters);
            write_to(cl_out, [&](std::ostream& o) { h::write_plan(o, plan, nodes); });
            return 0;
        }
        if (pilots->parsed()) {
            auto cfg = pl_flags.resolve("fig7");
            const auto& s = cfg.scenario;
            const auto nodes = cfsync::locations(cfsync::place_aps(s));
            const cfsync::NetworkModel net(s, nodes, s.seed);
            cfsync::OptimizeConfig oc;
            oc.overhead_budget = s.overhead_budget;
            oc.swap.n2_max = pl_n2;
            oc.swap.temperature = cfg.temperature;
            oc.swap.requirement.global_db = s.sinr_min_db;
            const auto r = cfsync::optimize_all(net, oc, s.seed);
            std::fprintf(stderr, "K_C %d, tau %d, overhead %d, sum-CRB %.6g\n", r.plan.num_clusters, r.assignment.tau(),
                         r.overhead(), r.crb.total());
            if (!pl_plan_out.empty()) write_to(pl_plan_out, [&](std::ostream& o) { h::write_plan(o, r.plan, nodes); });
            write_to(pl_assign_out, [&](std::ostream& o) { h::write_assignment(o, r.assignment); });
            return 0;
        }
        if (run->parsed()) {
            auto cfg = run_flags.resolve(run_id);
            cfg.experiment = run_id;
            if (!run_out.empty()) cfg.output_dir = run_out;
            if (run_trials) cfg.num_trials = *run_trials;
            if (run_seeds) cfg.num_seeds = *run_seeds;
            const auto a = h::run_and_write(cfg);
            std::printf("%zu rows -> %s\nsummary -> %s\n", a.rows, a.csv.string().c_str(), a.summary.string().c_str());
            return 0;
        }
        if (audit->parsed()) {
            const auto report = h::audit_files(au_plan, au_assign, au_opts);
            std::printf("%s\n", report.text().c_str());
            return report.ok() ? 0 : 1;
        }
    } catch (const cfsync::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

#pragma once

// Figure reproductions. Each run_* returns rows in deterministic order; the
// building blocks are exposed so tests can check them point by point.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cfsync/clustering.hpp"
#include "cfsync/harness/config.hpp"
#include "cfsync/harness/serialize.hpp"
#include "cfsync/mle.hpp"
#include "cfsync/network.hpp"
#include "cfsync/pilots.hpp"

namespace cfsync::harness {

// Tries `path` as given, then the same file name in the bundled fixtures
// directory.
std::filesystem::path resolve_fixture(const std::filesystem::path& path);

// ---- contamination covariance (fig3, fig4) ----

struct DElementSample {
    int n = 0;
    double derived = 0.0;
    double monte_carlo = 0.0;
    double standard_error = 0.0;
};

// Derived [D]_{n,n} against the sample mean of |F S U h|^2 at n over uniform
// TO in [0, eta], CFO in [-fmax, fmax] and psi ~ CN(0,1).
std::vector<DElementSample> d_element_check(const PilotSequence& pilot, double main_delay_chips, int eta,
                                            double fmax_norm, double main_gain, const std::vector<int>& indices,
                                            int num_samples, int trials, std::uint64_t seed);

std::vector<ResultRow> run_fig_d_elements(const ExperimentConfig& cfg);
std::vector<ResultRow> run_fig_contamination_power(const ExperimentConfig& cfg);

// ---- CRB and ML versus SNR (fig5) ----

struct CrbMlSetup {
    PilotSequence pilot;
    LinkChannel channel;  // beta normalized to 1, psi fixed
    std::vector<double> delays_chips;
    ObservationWindow window;
    int eta = 3;
    double fmax_norm = 3.0;
    double to_chips = 0.0;
    double cfo_norm = 0.0;
    std::vector<InterfererStat> interferers;  // gains relative to the desired link
    double desired_trace = 0.0;               // Tr(D) of the desired main path
    GridSpec grid;
};

CrbMlSetup make_crb_ml_setup(const ExperimentConfig& cfg);
double sigma2_for_snr(const CrbMlSetup& s, double snr_db);
FisherReport setup_crb(const CrbMlSetup& s, double noise_sigma2, bool contaminated);

struct MlStats {
    double mse_to = 0.0;
    double mse_cfo = 0.0;
    double se_to = 0.0;   // standard error of mse_to
    double se_cfo = 0.0;
    int trials = 0;
};

MlStats ml_monte_carlo(const CrbMlSetup& s, double noise_sigma2, bool contaminated, int trials, std::uint64_t seed);

std::vector<ResultRow> run_fig_crb_ml(const ExperimentConfig& cfg);

// ---- clustering baselines (fig6) ----

struct ClusterComparison {
    int num_clusters = 0;
    double dis_max_km = 0.0;
    SumCrb proposed, benchmark1, benchmark2, benchmark3;
};

// All slaves on orthogonal pilots. `seed` fixes placement, channels and
// every random choice.
ClusterComparison compare_clusters(Scenario scenario, std::uint64_t seed);
std::vector<ResultRow> run_fig_cluster_compare(const ExperimentConfig& cfg);

// ---- pilot sharing (fig7) ----

struct SchemeOutcome {
    SumCrb crb;
    int num_clusters = 0;
    int tau = 0;
    int overhead = 0;
    double objective = 0.0;
    bool valid = true;  // passes the sharing and reuse rules
};

struct PilotComparison {
    SchemeOutcome proposed, scheme1, scheme2, scheme3, scheme4;
};

PilotComparison compare_pilot_schemes(Scenario scenario, std::uint64_t seed, const SwapConfig& swap);
std::vector<ResultRow> run_fig_pilot_sharing(const ExperimentConfig& cfg);

// ---- dispatch ----

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

struct RunArtifacts {
    std::filesystem::path csv;
    std::filesystem::path summary;
    std::size_t rows = 0;
};

// Runs and writes <out>/<experiment>.csv and <out>/<experiment>_summary.json.
RunArtifacts run_and_write(const ExperimentConfig& cfg);

}  // namespace cfsync::harness

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfsync/geometry.hpp"

namespace cfsync::harness {

// One experiment run. Loaded from JSON; every field has a default so a
// config file only needs the fields it changes.
//
//   {
//     "experiment": "fig5",
//     "scenario": { "num_aps": 20, "pilot_len": 128, ... },
//     "sweep": [0, 5, 10],
//     "budgets": [25, 28],
//     "num_trials": 500,
//     "baselines": ["proposed", "benchmark1"],
//     "output_dir": "out",
//     "channel_fixture": "fixtures/fig5_channel.json"
//   }
struct ExperimentConfig {
    std::string experiment = "custom";
    Scenario scenario;
    std::vector<double> sweep;
    std::vector<int> budgets;  // overhead budgets L_S, paired with sweep or a single value
    int num_trials = 100;
    int num_seeds = 100;
    std::vector<std::string> baselines;
    std::string output_dir = "out";
    std::string channel_fixture;

    // fig3/fig4
    std::vector<double> main_delays{0.0, 0.3, 0.7};
    std::vector<int> etas{1, 2, 3};
    std::vector<int> pilot_lens{64, 128, 256};
    // fig5: true offsets and co-pilot interferers relative to the desired link
    double true_to_chips = 1.37;
    double true_cfo_norm = 0.01;
    std::vector<double> interferer_gains{0.03, 0.02};
    std::vector<double> interferer_delays{0.3, 0.6};
    double ml_cfo_halfwidth = 0.05;
    int ml_refine_levels = 5;
    // pilot search
    int n2_max = 2000;
    double temperature = 0.01;

    void validate() const;
    static ExperimentConfig defaults_for(const std::string& experiment);
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::string& experiment_hint = {});
std::string to_json(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical JSON form.
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace cfsync::harness

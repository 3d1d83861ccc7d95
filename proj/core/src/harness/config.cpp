#include "cfsync/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cfsync/error.hpp"

namespace cfsync::harness {

namespace {

using nlohmann::json;

const std::set<std::string> kExperiments{"fig3", "fig4", "fig5", "fig6", "fig7", "custom"};

int line_of(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

json scenario_json(const Scenario& s) {
    return {{"area_x_km", s.area_x_km},     {"area_y_km", s.area_y_km},       {"num_aps", s.num_aps},
            {"tx_power_w", s.tx_power_w},   {"noise_sigma2", s.noise_sigma2}, {"loss_db", s.loss_db},
            {"d0_km", s.d0_km},             {"d1_km", s.d1_km},               {"pilot_len", s.pilot_len},
            {"eta", s.eta},                 {"fmax_norm", s.fmax_norm},       {"sinr_min_db", s.sinr_min_db},
            {"overhead_budget", s.overhead_budget}, {"seed", s.seed},         {"chip_interval_s", s.chip_interval_s},
            {"num_taps", s.num_taps},       {"cp_chips", s.cp_chips},
            {"min_tap_spacing_chips", s.min_tap_spacing_chips}};
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

Scenario scenario_from(const json& j, Scenario s) {
    get_if(j, "area_x_km", s.area_x_km);
    get_if(j, "area_y_km", s.area_y_km);
    get_if(j, "num_aps", s.num_aps);
    get_if(j, "tx_power_w", s.tx_power_w);
    get_if(j, "noise_sigma2", s.noise_sigma2);
    if (j.contains("noise_dbm")) s.noise_sigma2 = std::pow(10.0, (j.at("noise_dbm").get<double>() - 30.0) / 10.0);
    get_if(j, "loss_db", s.loss_db);
    get_if(j, "d0_km", s.d0_km);
    get_if(j, "d1_km", s.d1_km);
    get_if(j, "pilot_len", s.pilot_len);
    get_if(j, "eta", s.eta);
    get_if(j, "fmax_norm", s.fmax_norm);
    get_if(j, "sinr_min_db", s.sinr_min_db);
    get_if(j, "overhead_budget", s.overhead_budget);
    get_if(j, "seed", s.seed);
    get_if(j, "chip_interval_s", s.chip_interval_s);
    get_if(j, "num_taps", s.num_taps);
    get_if(j, "cp_chips", s.cp_chips);
    get_if(j, "min_tap_spacing_chips", s.min_tap_spacing_chips);
    return s;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!kExperiments.count(experiment)) throw InvalidArgument("unknown experiment id '" + experiment + "'");
    scenario.validate();
    if (num_trials < 1) throw InvalidArgument("num_trials must be >= 1");
    if (num_seeds < 1) throw InvalidArgument("num_seeds must be >= 1");
    if (experiment != "custom" && experiment != "fig3" && sweep.empty())
        throw InvalidArgument("sweep values must be nonempty");
    if (!budgets.empty() && budgets.size() != 1 && budgets.size() != sweep.size())
        throw InvalidArgument("budgets must hold one value or one per sweep value");
    if (interferer_gains.size() != interferer_delays.size())
        throw InvalidArgument("interferer_gains and interferer_delays differ in length");
}

ExperimentConfig ExperimentConfig::defaults_for(const std::string& experiment) {
    ExperimentConfig c;
    c.experiment = experiment;
    if (experiment == "fig3") {
        c.num_trials = 100000;
        c.sweep = {};
    } else if (experiment == "fig4") {
        c.num_trials = 20000;
        c.sweep = {0.02, 0.05, 0.08, 0.11, 0.14};
    } else if (experiment == "fig5") {
        c.scenario.pilot_len = 128;
        c.num_trials = 500;
        c.sweep = {0, 5, 10, 15, 20, 25, 30};
        c.channel_fixture = "fixtures/fig5_channel.json";
    } else if (experiment == "fig6") {
        c.sweep = {20, 30, 40, 50, 60};
        c.baselines = {"proposed", "benchmark1", "benchmark2", "benchmark3"};
    } else if (experiment == "fig7") {
        c.sweep = {20, 24, 28, 32, 36, 40};
        c.budgets = {25, 28, 31, 34, 37, 40};
        c.baselines = {"proposed", "scheme1", "scheme2", "scheme3", "scheme4"};
        c.num_seeds = 20;
    }
    return c;
}

ExperimentConfig parse_config(const std::string& text, const std::string& experiment_hint) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_of(text, e.byte));
    }
    try {
        std::string id = j.value("experiment", experiment_hint.empty() ? std::string("custom") : experiment_hint);
        ExperimentConfig c = ExperimentConfig::defaults_for(id);
        if (j.contains("scenario")) c.scenario = scenario_from(j.at("scenario"), c.scenario);
        get_if(j, "sweep", c.sweep);
        get_if(j, "budgets", c.budgets);
        get_if(j, "num_trials", c.num_trials);
        get_if(j, "num_seeds", c.num_seeds);
        get_if(j, "baselines", c.baselines);
        get_if(j, "output_dir", c.output_dir);
        get_if(j, "channel_fixture", c.channel_fixture);
        get_if(j, "main_delays", c.main_delays);
        get_if(j, "etas", c.etas);
        get_if(j, "pilot_lens", c.pilot_lens);
        get_if(j, "true_to_chips", c.true_to_chips);
        get_if(j, "true_cfo_norm", c.true_cfo_norm);
        get_if(j, "interferer_gains", c.interferer_gains);
        get_if(j, "interferer_delays", c.interferer_delays);
        get_if(j, "ml_cfo_halfwidth", c.ml_cfo_halfwidth);
        get_if(j, "ml_refine_levels", c.ml_refine_levels);
        get_if(j, "n2_max", c.n2_max);
        get_if(j, "temperature", c.temperature);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what(), 0);
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
    json j = {{"experiment", c.experiment},
              {"scenario", scenario_json(c.scenario)},
              {"sweep", c.sweep},
              {"budgets", c.budgets},
              {"num_trials", c.num_trials},
              {"num_seeds", c.num_seeds},
              {"baselines", c.baselines},
              {"output_dir", c.output_dir},
              {"channel_fixture", c.channel_fixture},
              {"main_delays", c.main_delays},
              {"etas", c.etas},
              {"pilot_lens", c.pilot_lens},
              {"true_to_chips", c.true_to_chips},
              {"true_cfo_norm", c.true_cfo_norm},
              {"interferer_gains", c.interferer_gains},
              {"interferer_delays", c.interferer_delays},
              {"ml_cfo_halfwidth", c.ml_cfo_halfwidth},
              {"ml_refine_levels", c.ml_refine_levels},
              {"n2_max", c.n2_max},
              {"temperature", c.temperature}};
    return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace cfsync::harness

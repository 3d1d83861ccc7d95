#include "cfsync/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "cfsync/error.hpp"
#include "cfsync/rng.hpp"

namespace cfsync {

namespace {

constexpr std::uint64_t kPilotTag = 0x70696c6f74ULL;
constexpr std::uint64_t kChannelTag = 0x6368616eULL;
constexpr std::uint64_t kOffsetTag = 0x6f666673ULL;

std::uint64_t link_seed(std::uint64_t seed, std::uint64_t tag, int from, int to) {
    return derive_seed(seed, {tag, static_cast<std::uint64_t>(from), static_cast<std::uint64_t>(to)});
}

}  // namespace

std::vector<int> PilotAssignment::pilot_map(int num_nodes) const {
    std::vector<int> m(static_cast<std::size_t>(num_nodes), -1);
    for (std::size_t p = 0; p < groups.size(); ++p)
        for (int s : groups[p])
            if (s >= 0 && s < num_nodes) m[static_cast<std::size_t>(s)] = static_cast<int>(p);
    return m;
}

void PilotAssignment::normalize() {
    for (auto& g : groups) std::sort(g.begin(), g.end());
    std::erase_if(groups, [](const auto& g) { return g.empty(); });
}

PilotAssignment PilotAssignment::orthogonal(std::span<const int> slaves) {
    PilotAssignment a;
    a.reuse_cap = 1;
    for (int s : slaves) a.groups.push_back({s});
    return a;
}

std::vector<Violation> audit_assignment(const PilotAssignment& a, const ClusterPlan& plan, int overhead_budget) {
    std::vector<Violation> out;
    const int n = plan.num_nodes();
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (std::size_t p = 0; p < a.groups.size(); ++p) {
        const auto& g = a.groups[p];
        if (static_cast<int>(g.size()) > a.reuse_cap) {
            out.push_back({"reuse-cap", "pilot " + std::to_string(p) + " is shared by " + std::to_string(g.size()) +
                                            " slaves, cap is " + std::to_string(a.reuse_cap)});
        }
        for (int s : g) {
            if (s < 0 || s >= n) {
                out.push_back({"coverage", "pilot " + std::to_string(p) + " lists unknown AP " + std::to_string(s)});
                continue;
            }
            ++seen[static_cast<std::size_t>(s)];
            if (plan.is_master(s))
                out.push_back({"coverage", "master AP " + std::to_string(s) + " holds pilot " + std::to_string(p)});
        }
        for (std::size_t x = 0; x < g.size(); ++x)
            for (std::size_t y = x + 1; y < g.size(); ++y) {
                const int u = g[x], v = g[y];
                if (u < 0 || v < 0 || u >= n || v >= n) continue;
                if (plan.cluster_of(u) == plan.cluster_of(v))
                    out.push_back({"same-cluster-sharing", "APs " + std::to_string(u) + " and " + std::to_string(v) +
                                                               " of cluster " + std::to_string(plan.cluster_of(u)) +
                                                               " share pilot " + std::to_string(p)});
            }
    }
    for (int s : plan.slaves()) {
        const int c = seen[static_cast<std::size_t>(s)];
        if (c == 0) out.push_back({"coverage", "slave AP " + std::to_string(s) + " has no pilot"});
        if (c > 1) out.push_back({"coverage", "slave AP " + std::to_string(s) + " holds " + std::to_string(c) + " pilots"});
    }
    if (overhead_budget >= 0 && 2 * plan.num_clusters + a.tau() > overhead_budget) {
        out.push_back({"budget", "overhead 2*" + std::to_string(plan.num_clusters) + " + " + std::to_string(a.tau()) +
                                     " exceeds budget " + std::to_string(overhead_budget)});
    }
    return out;
}

NetworkModel::NetworkModel(Scenario scenario, std::vector<Point2> nodes, std::uint64_t seed)
    : scenario_(std::move(scenario)),
      nodes_(std::move(nodes)),
      seed_(seed),
      links_(nodes_, scenario_),
      window_(scenario_.window()),
      pilot_(PilotSequence::random_bpsk(scenario_.pilot_len, derive_seed(seed, {kPilotTag}), scenario_.chip_interval_s,
                                        scenario_.tx_power_w)),
      noise_level_(window_.num_samples * scenario_.noise_sigma2 / (2.0 * scenario_.pilot_len / 3.0)) {
    scenario_.validate();
}

LinkChannel NetworkModel::channel(int from, int to) const {
    LinkChannel ch = sample_channel(nodes_.at(static_cast<std::size_t>(from)), nodes_.at(static_cast<std::size_t>(to)),
                                    scenario_.num_taps, scenario_, link_seed(seed_, kChannelTag, from, to));
    std::vector<cdouble> psi;
    for (const auto& t : ch.taps()) psi.push_back(std::abs(t.small_scale) > 0.0 ? t.small_scale / std::abs(t.small_scale)
                                                                             : cdouble{1.0, 0.0});
    return ch.with_small_scale(psi).with_beta(links_.beta(from, to));
}

double NetworkModel::true_to_chips(int from, int to) const {
    Rng rng(link_seed(seed_, kOffsetTag, from, to));
    return std::uniform_real_distribution<double>(0.0, scenario_.eta)(rng);
}

double NetworkModel::true_cfo_norm(int from, int to) const {
    Rng rng(link_seed(seed_, kOffsetTag, from, to));
    rng.discard(1);
    return std::uniform_real_distribution<double>(-scenario_.fmax_norm, scenario_.fmax_norm)(rng);
}

InterfererStat NetworkModel::interferer(int from, int master) const {
    const double x = links_.main_delay_s(from, master) / scenario_.chip_interval_s;
    return {links_.beta(from, master), x - std::floor(x)};
}

FisherReport CrbEvaluator::link(int slave, int master, std::span<const int> interferers) {
    const LinkChannel ch = net_.channel(slave, master);
    std::vector<InterfererStat> stats;
    for (int i : interferers) stats.push_back(net_.interferer(i, master));
    LinkCrbInput in;
    in.pilot = &net_.reference_pilot();
    in.channel = &ch;
    in.to_chips = net_.true_to_chips(slave, master);
    in.cfo_norm = net_.true_cfo_norm(slave, master);
    in.interferers = stats;
    in.noise_sigma2 = net_.scenario().noise_sigma2;
    in.eta = net_.scenario().eta;
    in.num_samples = net_.window().num_samples;
    return link_crb(in);
}

SumCrb CrbEvaluator::operator()(const ClusterPlan& plan, const PilotAssignment* assignment) {
    SumCrb sum;
    const auto pilot_of = assignment ? assignment->pilot_map(plan.num_nodes()) : std::vector<int>{};
    for (int s : plan.slaves()) {
        const int master = plan.master_of(s);
        std::vector<int> key{s, master};
        if (assignment) {
            const int p = pilot_of.at(static_cast<std::size_t>(s));
            if (p < 0) throw InvalidArgument("slave " + std::to_string(s) + " has no pilot");
            for (int o : assignment->groups[static_cast<std::size_t>(p)])
                if (o != s) key.push_back(o);
            std::sort(key.begin() + 2, key.end());
        }
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            const auto r = link(s, master, std::span<const int>(key).subspan(2));
            it = cache_.emplace(key, std::make_pair(r.crb_to_chips, r.crb_cfo_norm)).first;
        }
        sum.to += it->second.first;
        sum.cfo += it->second.second;
        ++sum.num_links;
    }
    return sum;
}

ClusterPlan central_plan(int num_aps) {
    ClusterPlan plan;
    plan.num_clusters = 1;
    plan.assignment.assign(static_cast<std::size_t>(num_aps + 1), 0);
    plan.masters = {num_aps};
    return plan;
}

}  // namespace cfsync

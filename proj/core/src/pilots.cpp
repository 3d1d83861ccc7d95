#include "cfsync/pilots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cfsync/error.hpp"
#include "cfsync/rng.hpp"

namespace cfsync {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kSwapTag = 0x73776170ULL;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Lexicographic (objective, raw SINR sum).
struct Score {
    double objective = 0.0;
    double sinr_sum = kNegInf;
    bool better_than(const Score& o) const {
        if (objective != o.objective) return objective > o.objective;
        return sinr_sum > o.sinr_sum;
    }
};

// Mutable walk state with incremental SINR bookkeeping.
class Walk {
public:
    Walk(const SinrModel& model, const SinrRequirement& req, const PilotAssignment& a)
        : model_(model), req_(req), slaves_(model.plan().slaves()) {
        load(a);
    }

    void load(const PilotAssignment& a) {
        a_ = a;
        pilot_of_ = a_.pilot_map(model_.plan().num_nodes());
        sinr_ = model_.pair_sinr(a_);
        failing_ = 0;
        sum_ = 0.0;
        for (int s : slaves_) {
            const double v = sinr_[static_cast<std::size_t>(s)];
            sum_ += v;
            if (v < req_.for_slave(s)) ++failing_;
        }
    }

    Score score() const { return {failing_ == 0 && !slaves_.empty() ? sum_ : 0.0, sum_}; }
    const PilotAssignment& assignment() const { return a_; }
    const std::vector<int>& slaves() const { return slaves_; }
    int pilot_of(int s) const { return pilot_of_[static_cast<std::size_t>(s)]; }
    double sinr(int s) const { return sinr_[static_cast<std::size_t>(s)]; }

    // Swap-blocking: a moving to q, or b moving to p, would share a pilot
    // with a member of its own cluster.
    bool blocking(int a, int b) const {
        const auto& plan = model_.plan();
        const int p = pilot_of(a), q = pilot_of(b);
        for (int o : a_.groups[static_cast<std::size_t>(q)])
            if (o != b && plan.cluster_of(o) == plan.cluster_of(a)) return true;
        for (int o : a_.groups[static_cast<std::size_t>(p)])
            if (o != a && plan.cluster_of(o) == plan.cluster_of(b)) return true;
        return false;
    }

    void swap(int a, int b) {
        const int p = pilot_of(a), q = pilot_of(b);
        auto& gp = a_.groups[static_cast<std::size_t>(p)];
        auto& gq = a_.groups[static_cast<std::size_t>(q)];
        *std::find(gp.begin(), gp.end(), a) = b;
        *std::find(gq.begin(), gq.end(), b) = a;
        pilot_of_[static_cast<std::size_t>(a)] = q;
        pilot_of_[static_cast<std::size_t>(b)] = p;
        refresh(gp);
        refresh(gq);
    }

private:
    void refresh(const std::vector<int>& g) {
        for (int s : g) {
            auto& v = sinr_[static_cast<std::size_t>(s)];
            const double req = req_.for_slave(s);
            sum_ -= v;
            if (v < req) --failing_;
            v = model_.sinr_db(s, g);
            sum_ += v;
            if (v < req) ++failing_;
        }
    }

    const SinrModel& model_;
    const SinrRequirement& req_;
    std::vector<int> slaves_;
    PilotAssignment a_;
    std::vector<int> pilot_of_;
    std::vector<double> sinr_;
    int failing_ = 0;
    double sum_ = 0.0;
};

// Move members of over-full groups into groups with room and no same-cluster
// member. Returns false when some member cannot be placed.
bool repair_caps(PilotAssignment& a, const ClusterPlan& plan) {
    for (std::size_t p = 0; p < a.groups.size(); ++p) {
        while (static_cast<int>(a.groups[p].size()) > a.reuse_cap) {
            bool moved = false;
            // Try the last member first: deterministic and cheap.
            for (std::size_t idx = a.groups[p].size(); idx-- > 0 && !moved;) {
                const int s = a.groups[p][idx];
                for (std::size_t q = a.groups.size(); q-- > 0;) {
                    if (q == p || static_cast<int>(a.groups[q].size()) >= a.reuse_cap) continue;
                    const bool clash = std::any_of(a.groups[q].begin(), a.groups[q].end(),
                                                   [&](int o) { return plan.cluster_of(o) == plan.cluster_of(s); });
                    if (clash) continue;
                    a.groups[q].push_back(s);
                    a.groups[p].erase(a.groups[p].begin() + static_cast<std::ptrdiff_t>(idx));
                    moved = true;
                    break;
                }
            }
            if (!moved) return false;
        }
    }
    return true;
}

// Open pilot tau+1 for up to max(N^max - 1, 1) low-SINR slaves drawn from
// the bottom quartile, at most one per pilot and per cluster.
PilotAssignment escalate(const PilotAssignment& from, const SinrModel& model, const std::vector<double>& sinr,
                         Rng& rng) {
    const auto& plan = model.plan();
    auto slaves = plan.slaves();
    const int total = static_cast<int>(slaves.size());
    PilotAssignment next = from;
    next.groups.emplace_back();
    const int tau = next.tau();
    next.reuse_cap = ceil_div(total, tau);
    const int want = std::max(next.reuse_cap - 1, 1);

    std::stable_sort(slaves.begin(), slaves.end(), [&](int a, int b) {
        return sinr[static_cast<std::size_t>(a)] < sinr[static_cast<std::size_t>(b)];
    });
    const auto pilot_of = from.pilot_map(plan.num_nodes());
    std::size_t pool = static_cast<std::size_t>(std::max(ceil_div(total, 4), want));
    pool = std::min(pool, slaves.size());
    std::vector<int> candidates(slaves.begin(), slaves.begin() + static_cast<std::ptrdiff_t>(pool));
    std::shuffle(candidates.begin(), candidates.end(), rng);

    std::vector<char> pilot_used(static_cast<std::size_t>(tau), 0), cluster_used(static_cast<std::size_t>(plan.num_clusters), 0);
    auto take = [&](int s) {
        const int p = pilot_of[static_cast<std::size_t>(s)];
        const int k = plan.cluster_of(s);
        if (pilot_used[static_cast<std::size_t>(p)] || cluster_used[static_cast<std::size_t>(k)]) return false;
        if (from.groups[static_cast<std::size_t>(p)].size() <= 1) return false;  // would empty a pilot
        pilot_used[static_cast<std::size_t>(p)] = 1;
        cluster_used[static_cast<std::size_t>(k)] = 1;
        auto& g = next.groups[static_cast<std::size_t>(p)];
        g.erase(std::find(g.begin(), g.end(), s));
        next.groups.back().push_back(s);
        return true;
    };
    int picked = 0;
    for (int s : candidates)
        if (picked < want && take(s)) ++picked;
    // Top up from the rest, lowest SINR first, if the quartile ran dry.
    for (std::size_t i = pool; i < slaves.size() && picked < want; ++i)
        if (take(slaves[i])) ++picked;

    if (next.groups.back().empty()) next.groups.pop_back();
    if (!repair_caps(next, plan)) {
        next = dsatur_color(ConflictMatrix::from_plan(plan), next.reuse_cap);
    }
    next.normalize();
    // The fallback colouring may need fewer pilots; split the largest groups
    // so that tau still grows by at least one per level.
    while (next.tau() <= from.tau()) {
        auto largest = std::max_element(next.groups.begin(), next.groups.end(),
                                        [](const auto& x, const auto& y) { return x.size() < y.size(); });
        if (largest == next.groups.end() || largest->size() <= 1) break;
        const int s = largest->back();
        largest->pop_back();
        next.groups.push_back({s});
    }
    return next;
}

}  // namespace

ConflictMatrix::ConflictMatrix(std::vector<int> slaves, std::vector<std::uint8_t> dense)
    : slaves_(std::move(slaves)), b_(std::move(dense)) {
    require(b_.size() == slaves_.size() * slaves_.size(), "conflict matrix must be square");
}

ConflictMatrix ConflictMatrix::from_plan(const ClusterPlan& plan) {
    auto slaves = plan.slaves();
    const std::size_t n = slaves.size();
    std::vector<std::uint8_t> b(n * n, 0);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y)
            if (x != y && plan.cluster_of(slaves[x]) == plan.cluster_of(slaves[y])) b[x * n + y] = 1;
    return ConflictMatrix(std::move(slaves), std::move(b));
}

int ConflictMatrix::degree(int a) const {
    int d = 0;
    for (int b = 0; b < size(); ++b) d += (*this)(a, b) ? 1 : 0;
    return d;
}

PilotAssignment dsatur_color(const ConflictMatrix& b, int reuse_cap) {
    require(reuse_cap >= 1, "reuse cap must be >= 1");
    const int n = b.size();
    std::vector<int> color(static_cast<std::size_t>(n), -1);
    std::vector<int> degree(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) degree[static_cast<std::size_t>(v)] = b.degree(v);
    std::vector<int> group_size;

    for (int step = 0; step < n; ++step) {
        int pick = -1, best_sat = -1, best_deg = -1;
        for (int v = 0; v < n; ++v) {
            if (color[static_cast<std::size_t>(v)] >= 0) continue;
            std::vector<char> seen(group_size.size(), 0);
            int sat = 0;
            for (int u = 0; u < n; ++u) {
                const int c = color[static_cast<std::size_t>(u)];
                if (c >= 0 && b(v, u) && !seen[static_cast<std::size_t>(c)]) {
                    seen[static_cast<std::size_t>(c)] = 1;
                    ++sat;
                }
            }
            const int deg = degree[static_cast<std::size_t>(v)];
            if (sat > best_sat || (sat == best_sat && deg > best_deg)) {
                pick = v;
                best_sat = sat;
                best_deg = deg;
            }
        }
        std::vector<char> forbidden(group_size.size(), 0);
        for (int u = 0; u < n; ++u) {
            const int c = color[static_cast<std::size_t>(u)];
            if (c >= 0 && b(pick, u)) forbidden[static_cast<std::size_t>(c)] = 1;
        }
        int chosen = -1;
        for (std::size_t c = 0; c < group_size.size(); ++c)
            if (!forbidden[c] && group_size[c] < reuse_cap) {
                chosen = static_cast<int>(c);
                break;
            }
        if (chosen < 0) {
            chosen = static_cast<int>(group_size.size());
            group_size.push_back(0);
        }
        color[static_cast<std::size_t>(pick)] = chosen;
        ++group_size[static_cast<std::size_t>(chosen)];
    }

    PilotAssignment a;
    a.reuse_cap = reuse_cap;
    a.groups.resize(group_size.size());
    for (int v = 0; v < n; ++v) a.groups[static_cast<std::size_t>(color[static_cast<std::size_t>(v)])].push_back(b.slaves()[static_cast<std::size_t>(v)]);
    a.normalize();
    return a;
}

PilotAssignment initial_assignment(const ClusterPlan& plan) {
    const auto groups = plan.members();
    int tau = 0;
    for (const auto& g : groups) tau = std::max(tau, static_cast<int>(g.size()) - 1);
    const int total = static_cast<int>(plan.slaves().size());
    if (total == 0) return PilotAssignment{};
    return dsatur_color(ConflictMatrix::from_plan(plan), ceil_div(total, tau));
}

double SinrRequirement::for_slave(int id) const {
    auto it = per_slave_db.find(id);
    return it == per_slave_db.end() ? global_db : it->second;
}

SinrModel::SinrModel(const NetworkModel& net, const ClusterPlan& plan) : net_(net), plan_(plan) {
    require(plan.num_nodes() == net.num_nodes(), "plan and network disagree on the node count");
}

double SinrModel::sinr_db(int slave, std::span<const int> group) const {
    const int master = plan_.master_of(slave);
    const auto& links = net_.links();
    double interference = net_.noise_level();
    for (int o : group)
        if (o != slave) interference += links.beta(o, master);
    return 10.0 * std::log10(links.beta(slave, master) / interference);
}

std::vector<double> SinrModel::pair_sinr(const PilotAssignment& a) const {
    std::vector<double> out(static_cast<std::size_t>(plan_.num_nodes()), kNegInf);
    for (const auto& g : a.groups)
        for (int s : g) out[static_cast<std::size_t>(s)] = sinr_db(s, g);
    return out;
}

double objective(const std::vector<double>& sinr_by_node, std::span<const int> slaves, const SinrRequirement& req) {
    double sum = 0.0;
    for (int s : slaves) {
        const double v = sinr_by_node.at(static_cast<std::size_t>(s));
        if (v < req.for_slave(s)) return 0.0;
        sum += v;
    }
    return sum;
}

double objective(const PilotAssignment& a, const SinrModel& model, const SinrRequirement& req) {
    return objective(model.pair_sinr(a), model.plan().slaves(), req);
}

double swap_probability(double obj_new, double obj_old, double temperature) {
    require(temperature > 0.0, "temperature must be > 0");
    return 1.0 / (1.0 + std::exp(-temperature * (obj_new - obj_old)));
}

SwapResult swap_matching_search(const PilotAssignment& initial, const SinrModel& model, int overhead_budget,
                                const SwapConfig& cfg, std::uint64_t seed) {
    require(cfg.n2_max >= 0, "n2_max must be >= 0");
    const auto& plan = model.plan();
    const int tau_budget = overhead_budget - 2 * plan.num_clusters;
    {
        const auto bad = audit_assignment(initial, plan);
        if (!bad.empty()) throw InvalidArgument("initial assignment invalid: " + bad.front().message);
    }
    if (initial.tau() > tau_budget)
        throw Infeasible("initial assignment needs " + std::to_string(initial.tau()) + " pilots, budget leaves " +
                         std::to_string(tau_budget));

    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SwapResult res;
    res.initial = initial;
    Walk walk(model, cfg.requirement, initial);
    const auto& slaves = walk.slaves();
    const int total = static_cast<int>(slaves.size());

    Score best = walk.score();
    res.best = initial;
    PilotAssignment level_start = initial;

    while (level_start.tau() <= tau_budget) {
        walk.load(level_start);
        Score level_best = walk.score();
        PilotAssignment level_best_a = level_start;

        if (level_start.tau() > 1 && total > 1) {
            std::uniform_int_distribution<int> pick(0, total - 1);
            for (int n2 = 0; n2 < cfg.n2_max; ++n2) {
                const int a = slaves[static_cast<std::size_t>(pick(rng))];
                const int b = slaves[static_cast<std::size_t>(pick(rng))];
                if (walk.pilot_of(a) == walk.pilot_of(b) || walk.blocking(a, b)) continue;
                const Score old = walk.score();
                walk.swap(a, b);
                const Score cand = walk.score();
                if (cand.better_than(level_best)) {
                    level_best = cand;
                    level_best_a = walk.assignment();
                }
                const double pa = swap_probability(cand.objective, old.objective, cfg.temperature);
                if (!(unit(rng) < pa)) walk.swap(a, b);
            }
        }
        level_best_a.normalize();
        res.level_bests.push_back(level_best_a);
        res.level_objectives.push_back(level_best.objective);
        if (level_best.better_than(best)) {
            best = level_best;
            res.best = level_best_a;
        }
        if (level_start.tau() >= total) break;
        walk.load(level_best_a);
        std::vector<double> sinr(static_cast<std::size_t>(plan.num_nodes()), kNegInf);
        for (int s : slaves) sinr[static_cast<std::size_t>(s)] = walk.sinr(s);
        level_start = escalate(level_best_a, model, sinr, rng);
    }
    res.best_objective = best.objective;
    res.best_sinr_sum = best.sinr_sum;
    return res;
}

PilotAssignment greedy_swap_improve(const PilotAssignment& start, const SinrModel& model, const SinrRequirement& req) {
    Walk walk(model, req, start);
    const auto& slaves = walk.slaves();
    bool improved = true;
    int rounds = 0;
    while (improved && rounds++ < 1000) {
        improved = false;
        for (std::size_t x = 0; x < slaves.size(); ++x)
            for (std::size_t y = x + 1; y < slaves.size(); ++y) {
                const int a = slaves[x], b = slaves[y];
                if (walk.pilot_of(a) == walk.pilot_of(b) || walk.blocking(a, b)) continue;
                const Score old = walk.score();
                walk.swap(a, b);
                if (walk.score().better_than(old)) {
                    improved = true;
                } else {
                    walk.swap(a, b);
                }
            }
    }
    PilotAssignment out = walk.assignment();
    out.normalize();
    return out;
}

OptimizeResult optimize_all(const NetworkModel& net, const OptimizeConfig& cfg, std::uint64_t seed) {
    const int k = net.num_nodes();
    const int max_kc = cfg.max_clusters > 0 ? std::min(cfg.max_clusters, k - 1) : k - 1;
    CrbEvaluator eval(net);
    OptimizeResult out;
    bool found = false;
    double best = std::numeric_limits<double>::infinity();

    for (int kc = std::max(cfg.min_clusters, 1); kc <= max_kc && 2 * kc <= cfg.overhead_budget; ++kc) {
        ClusterPlan plan = clusters_at(net.nodes(), kc, seed);
        const PilotAssignment init = initial_assignment(plan);
        if (2 * kc + init.tau() > cfg.overhead_budget) continue;
        const SinrModel model(net, plan);
        const SwapResult sr = swap_matching_search(init, model, cfg.overhead_budget, cfg.swap,
                                                   derive_seed(seed, {kSwapTag, static_cast<std::uint64_t>(kc)}));
        std::vector<const PilotAssignment*> candidates{&sr.initial};
        for (const auto& a : sr.level_bests) candidates.push_back(&a);
        for (const auto* a : candidates) {
            const SumCrb c = eval(plan, a);
            out.explored.push_back({kc, a->tau(), c});
            if (c.total() < best) {
                best = c.total();
                out.plan = plan;
                out.assignment = *a;
                out.crb = c;
                found = true;
            }
        }
    }
    if (!found) throw Infeasible("no cluster count fits the overhead budget " + std::to_string(cfg.overhead_budget));
    return out;
}

}  // namespace cfsync

#include "cfsync/harness/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cfsync/error.hpp"

#ifndef CFSYNC_GIT_REVISION
#define CFSYNC_GIT_REVISION "unknown"
#endif

namespace cfsync::harness {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

// Tokenized non-comment lines with their 1-based line numbers.
std::vector<std::pair<int, std::vector<std::string>>> tokenize(std::istream& in) {
    std::vector<std::pair<int, std::vector<std::string>>> out;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::vector<std::string> tok;
        for (std::string t; ss >> t;) tok.push_back(t);
        if (!tok.empty()) out.emplace_back(no, std::move(tok));
    }
    return out;
}

int to_int(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected an integer, got '" + s + "'", line);
    }
}

double to_double(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected a number, got '" + s + "'", line);
    }
}

}  // namespace

std::string format_row(const ResultRow& r) {
    return r.experiment + "," + std::to_string(r.seed) + "," + fmt_double(r.sweep) + "," + r.metric + "," +
           fmt_double(r.value) + "," + r.label;
}

void write_csv(std::ostream& out, std::span<const ResultRow> rows) {
    out << kCsvHeader << "\n";
    for (const auto& r : rows) out << format_row(r) << "\n";
}

void write_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_csv(out, rows);
}

std::vector<ResultRow> read_csv(std::istream& in) {
    std::vector<ResultRow> rows;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (no == 1) {
            if (line != kCsvHeader) throw ParseError("unexpected CSV header '" + line + "'", no);
            continue;
        }
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 6) throw ParseError("expected 6 fields, got " + std::to_string(f.size()), no);
        ResultRow r;
        r.experiment = f[0];
        try {
            r.seed = std::stoull(f[1]);
        } catch (const std::exception&) {
            throw ParseError("bad seed '" + f[1] + "'", no);
        }
        r.sweep = to_double(f[2], no);
        r.metric = f[3];
        r.value = to_double(f[4], no);
        r.label = f[5];
        rows.push_back(std::move(r));
    }
    return rows;
}

const char* git_revision() noexcept { return CFSYNC_GIT_REVISION; }

std::filesystem::path resolve_output_dir(const std::string& configured) {
    if (const char* env = std::getenv("CFSYNC_OUT_DIR"); env && *env) return env;
    return configured;
}

void write_summary(const std::filesystem::path& path, const ExperimentConfig& cfg, std::size_t num_rows) {
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    nlohmann::json j = {{"experiment", cfg.experiment},
                        {"seed", cfg.scenario.seed},
                        {"git_revision", git_revision()},
                        {"config_hash", hash},
                        {"rows", num_rows},
                        {"config", nlohmann::json::parse(to_json(cfg))}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_plan(std::ostream& out, const ClusterPlan& plan, std::span<const Point2> nodes) {
    out << "# cluster plan\n";
    out << "clusters " << plan.num_clusters << "\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < nodes.size(); ++i) out << "node " << i << " " << nodes[i].x << " " << nodes[i].y << "\n";
    const auto groups = plan.members();
    for (int k = 0; k < plan.num_clusters; ++k) {
        out << "cluster " << k << " master " << plan.masters.at(static_cast<std::size_t>(k)) << " members";
        for (int m : groups[static_cast<std::size_t>(k)]) out << " " << m;
        out << "\n";
    }
}

PlanFile read_plan(std::istream& in) {
    PlanFile pf;
    int clusters = -1;
    std::map<int, Point2> nodes;
    std::map<int, std::pair<int, std::vector<int>>> groups;  // k -> (master, members)
    std::map<int, int> member_line;
    for (const auto& [line, tok] : tokenize(in)) {
        if (tok[0] == "clusters") {
            if (tok.size() != 2) throw ParseError("'clusters' takes one value", line);
            clusters = to_int(tok[1], line);
            if (clusters < 1) throw ParseError("cluster count must be >= 1", line);
        } else if (tok[0] == "node") {
            if (tok.size() != 4) throw ParseError("'node' takes id, x, y", line);
            const int id = to_int(tok[1], line);
            if (nodes.count(id)) throw ParseError("node " + tok[1] + " listed twice", line);
            nodes[id] = {to_double(tok[2], line), to_double(tok[3], line)};
        } else if (tok[0] == "cluster") {
            if (tok.size() < 6 || tok[2] != "master" || tok[4] != "members")
                throw ParseError("expected 'cluster <k> master <id> members <ids...>'", line);
            const int k = to_int(tok[1], line);
            if (groups.count(k)) throw ParseError("cluster " + tok[1] + " listed twice", line);
            std::vector<int> members;
            for (std::size_t i = 5; i < tok.size(); ++i) {
                const int id = to_int(tok[i], line);
                if (member_line.count(id))
                    throw ParseError("AP " + tok[i] + " already in a cluster (line " +
                                         std::to_string(member_line[id]) + ")",
                                     line);
                member_line[id] = line;
                members.push_back(id);
            }
            groups[k] = {to_int(tok[3], line), std::move(members)};
        } else {
            throw ParseError("unknown keyword '" + tok[0] + "'", line);
        }
    }
    if (clusters < 0) throw ParseError("missing 'clusters' line", 0);
    if (static_cast<int>(groups.size()) != clusters)
        throw ParseError("expected " + std::to_string(clusters) + " cluster lines, found " + std::to_string(groups.size()), 0);
    const int n = static_cast<int>(member_line.size());
    pf.plan.num_clusters = clusters;
    pf.plan.assignment.assign(static_cast<std::size_t>(n), -1);
    pf.plan.masters.assign(static_cast<std::size_t>(clusters), -1);
    for (const auto& [k, g] : groups) {
        if (k < 0 || k >= clusters) throw ParseError("cluster index " + std::to_string(k) + " out of range", 0);
        pf.plan.masters[static_cast<std::size_t>(k)] = g.first;
        for (int id : g.second) {
            if (id < 0 || id >= n)
                throw ParseError("AP ids must be 0..N-1, got " + std::to_string(id), member_line[id]);
            pf.plan.assignment[static_cast<std::size_t>(id)] = k;
        }
    }
    try {
        pf.plan.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), 0);
    }
    if (!nodes.empty()) {
        if (static_cast<int>(nodes.size()) != n) throw ParseError("node lines do not cover every AP", 0);
        for (const auto& [id, p] : nodes) {
            if (id < 0 || id >= n) throw ParseError("node id " + std::to_string(id) + " out of range", 0);
            pf.nodes.push_back(p);
        }
        update_cluster_distances(pf.plan, pf.nodes);
    }
    return pf;
}

void write_assignment(std::ostream& out, const PilotAssignment& a) {
    out << "# pilot assignment\n";
    out << "reuse_cap " << a.reuse_cap << "\n";
    for (int p = 0; p < a.tau(); ++p) {
        out << "pilot " << p << " slaves";
        for (int s : a.groups[static_cast<std::size_t>(p)]) out << " " << s;
        out << "\n";
    }
}

PilotAssignment read_assignment(std::istream& in) {
    PilotAssignment a;
    bool have_cap = false;
    std::map<int, std::vector<int>> groups;
    for (const auto& [line, tok] : tokenize(in)) {
        if (tok[0] == "reuse_cap") {
            if (tok.size() != 2) throw ParseError("'reuse_cap' takes one value", line);
            a.reuse_cap = to_int(tok[1], line);
            if (a.reuse_cap < 1) throw ParseError("reuse cap must be >= 1", line);
            have_cap = true;
        } else if (tok[0] == "pilot") {
            if (tok.size() < 3 || tok[2] != "slaves") throw ParseError("expected 'pilot <p> slaves <ids...>'", line);
            const int p = to_int(tok[1], line);
            if (p < 0) throw ParseError("pilot index must be >= 0", line);
            if (groups.count(p)) throw ParseError("pilot " + tok[1] + " listed twice", line);
            auto& g = groups[p];
            for (std::size_t i = 3; i < tok.size(); ++i) g.push_back(to_int(tok[i], line));
        } else {
            throw ParseError("unknown keyword '" + tok[0] + "'", line);
        }
    }
    if (!have_cap) throw ParseError("missing 'reuse_cap' line", 0);
    for (auto& [p, g] : groups) a.groups.push_back(std::move(g));
    return a;
}

}  // namespace cfsync::harness

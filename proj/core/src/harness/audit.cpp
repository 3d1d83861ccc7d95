#include "cfsync/harness/audit.hpp"

#include <fstream>
#include <sstream>

#include "cfsync/error.hpp"

namespace cfsync::harness {

std::string AuditReport::text() const {
    if (ok()) return "PASS\n";
    std::ostringstream out;
    out << "FAIL (" << violations.size() << " violation" << (violations.size() == 1 ? "" : "s") << ")\n";
    for (const auto& v : violations) out << "  [" << v.rule << "] " << v.message << "\n";
    return out.str();
}

AuditReport audit(const PlanFile& plan, const PilotAssignment& assignment, const AuditOptions& opts) {
    AuditReport r;
    r.violations = audit_assignment(assignment, plan.plan, opts.overhead_budget);
    if (opts.dis_max_km >= 0.0) {
        if (plan.nodes.empty()) {
            r.violations.push_back({"distance", "plan has no node coordinates; cannot check dis_max"});
        } else {
            for (int s : plan.plan.slaves()) {
                const int m = plan.plan.master_of(s);
                const double d = distance(plan.nodes[static_cast<std::size_t>(s)], plan.nodes[static_cast<std::size_t>(m)]);
                if (d > opts.dis_max_km)
                    r.violations.push_back({"distance", "slave " + std::to_string(s) + " is " + std::to_string(d) +
                                                            " km from master " + std::to_string(m) + ", bound " +
                                                            std::to_string(opts.dis_max_km) + " km"});
            }
        }
    }
    return r;
}

AuditReport audit_files(const std::filesystem::path& plan_path, const std::filesystem::path& assignment_path,
                        const AuditOptions& opts) {
    std::ifstream pin(plan_path);
    if (!pin) throw Error("cannot open plan " + plan_path.string());
    std::ifstream ain(assignment_path);
    if (!ain) throw Error("cannot open assignment " + assignment_path.string());
    PlanFile plan;
    try {
        plan = read_plan(pin);
    } catch (const ParseError& e) {
        throw ParseError(plan_path.string() + ": " + e.detail(), e.line());
    }
    PilotAssignment a;
    try {
        a = read_assignment(ain);
    } catch (const ParseError& e) {
        throw ParseError(assignment_path.string() + ": " + e.detail(), e.line());
    }
    return audit(plan, a, opts);
}

}  // namespace cfsync::harness

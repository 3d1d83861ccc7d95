#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cfsync/assignment.hpp"
#include "cfsync/harness/serialize.hpp"

namespace cfsync::harness {

struct AuditOptions {
    int overhead_budget = -1;  // skip when < 0
    double dis_max_km = -1.0;  // skip when < 0; needs node lines in the plan
};

struct AuditReport {
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
    std::string text() const;
};

AuditReport audit(const PlanFile& plan, const PilotAssignment& assignment, const AuditOptions& opts);
AuditReport audit_files(const std::filesystem::path& plan_path, const std::filesystem::path& assignment_path,
                        const AuditOptions& opts);

}  // namespace cfsync::harness

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfsync/assignment.hpp"
#include "cfsync/clustering.hpp"
#include "cfsync/harness/config.hpp"

namespace cfsync::harness {

inline constexpr const char* kCsvHeader = "experiment,seed,sweep,metric,value,label";

struct ResultRow {
    std::string experiment;
    std::uint64_t seed = 0;
    double sweep = 0.0;
    std::string metric;
    double value = 0.0;
    std::string label;
};

std::string format_row(const ResultRow& r);
void write_csv(std::ostream& out, std::span<const ResultRow> rows);
void write_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);
std::vector<ResultRow> read_csv(std::istream& in);

const char* git_revision() noexcept;

// $CFSYNC_OUT_DIR when set, else `configured`.
std::filesystem::path resolve_output_dir(const std::string& configured);

// {"experiment", "seed", "git_revision", "config_hash", "rows", "config"}
void write_summary(const std::filesystem::path& path, const ExperimentConfig& cfg, std::size_t num_rows);

// Plan text format:
//   clusters <K_C>
//   node <id> <x_km> <y_km>          (one per node, optional)
//   cluster <k> master <id> members <id> <id> ...
// Blank lines and lines starting with '#' are ignored.
struct PlanFile {
    ClusterPlan plan;
    std::vector<Point2> nodes;  // empty when the file has no node lines
};

void write_plan(std::ostream& out, const ClusterPlan& plan, std::span<const Point2> nodes = {});
PlanFile read_plan(std::istream& in);

// Assignment text format:
//   reuse_cap <N^max>
//   pilot <p> slaves <id> <id> ...
void write_assignment(std::ostream& out, const PilotAssignment& a);
PilotAssignment read_assignment(std::istream& in);

}  // namespace cfsync::harness

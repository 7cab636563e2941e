#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wflow/ast.hpp"
#include "wflow/dag.hpp"
#include "wflow/diagnostics.hpp"

namespace wflow {

// Node names are plain identifiers; `pfs` is reserved for the remote
// parallel file system and always exists.
using NodeId = std::string;
inline const NodeId kPfs = "pfs";

using Bandwidth = std::int64_t;  // bytes per second

struct NodeSpec {
    NodeId name;
    int workers = 1;
    Bandwidth nic_bw = 0;
    std::optional<ByteCount> capacity;
};

enum class SchedulerKind { Fcfs, Locality, Proactive };

struct ClusterSpec {
    std::vector<NodeSpec> nodes;
    Bandwidth pfs_bw = 0;
    RankMode rank_mode = RankMode::Time;
    double proactive_threshold = 0.5;
    SchedulerKind scheduler = SchedulerKind::Locality;

    std::optional<std::size_t> index_of(std::string_view name) const;
    bool has_node(std::string_view name) const;  // compute node or pfs
    Bandwidth bandwidth(std::string_view name) const;
};

DiagnosticList validate_cluster(const ClusterSpec& spec);

// JSON document with bandwidths in MB/s (SI):
// {"nodes":[{"name":"n1","workers":1,"nic_bw_mbps":100,"capacity_bytes":...}],
//  "pfs_bw_mbps":50,"scheduler":"locality","proactive_threshold":0.5,"rank_mode":"time"}
// Throws std::runtime_error on schema errors.
ClusterSpec cluster_from_json(const nlohmann::json& doc);
ClusterSpec load_cluster(const std::filesystem::path& path);
nlohmann::ordered_json cluster_to_json(const ClusterSpec& spec);

Bandwidth mbps_to_bandwidth(double mbps);

// ceil(bytes / min(bw(src), bw(dst)) × 10^6) µs
SimTime transfer_duration(ByteCount bytes, std::string_view src, std::string_view dst, const ClusterSpec& spec);

std::string to_string(SchedulerKind kind);
std::optional<SchedulerKind> parse_scheduler(std::string_view text);

}  // namespace wflow

#include "wflow/cluster.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "wflow/parser.hpp"

namespace wflow {

std::optional<std::size_t> ClusterSpec::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].name == name) return i;
    }
    return std::nullopt;
}

bool ClusterSpec::has_node(std::string_view name) const { return name == kPfs || index_of(name).has_value(); }

Bandwidth ClusterSpec::bandwidth(std::string_view name) const {
    if (name == kPfs) return pfs_bw;
    auto i = index_of(name);
    if (!i) throw std::out_of_range(fmt::format("unknown node '{}'", name));
    return nodes[*i].nic_bw;
}

DiagnosticList validate_cluster(const ClusterSpec& spec) {
    DiagnosticList out;
    auto error = [&out](std::string msg) { out.push_back({Severity::Error, {}, std::move(msg)}); };
    if (spec.nodes.empty()) error("cluster has no compute nodes");
    if (spec.pfs_bw <= 0) error("pfs bandwidth must be positive");
    std::set<std::string> names;
    for (const auto& n : spec.nodes) {
        if (!is_identifier(n.name)) error(fmt::format("invalid node name '{}'", n.name));
        if (n.name == kPfs) error("node name 'pfs' is reserved");
        if (!names.insert(n.name).second) error(fmt::format("duplicate node '{}'", n.name));
        if (n.workers < 1) error(fmt::format("node '{}' needs at least one worker", n.name));
        if (n.nic_bw <= 0) error(fmt::format("node '{}' NIC bandwidth must be positive", n.name));
        if (n.capacity && *n.capacity < 0) error(fmt::format("node '{}' capacity is negative", n.name));
    }
    if (!(spec.proactive_threshold >= 0.0 && spec.proactive_threshold <= 1.0)) {
        error("proactive_threshold must lie in [0, 1]");
    }
    return out;
}

Bandwidth mbps_to_bandwidth(double mbps) { return static_cast<Bandwidth>(std::llround(mbps * 1e6)); }

ClusterSpec cluster_from_json(const nlohmann::json& doc) {
    ClusterSpec spec;
    try {
        for (const auto& n : doc.at("nodes")) {
            NodeSpec node;
            node.name = n.at("name").get<std::string>();
            node.workers = n.value("workers", 1);
            node.nic_bw = mbps_to_bandwidth(n.at("nic_bw_mbps").get<double>());
            if (n.contains("capacity_bytes") && !n.at("capacity_bytes").is_null()) {
                node.capacity = n.at("capacity_bytes").get<ByteCount>();
            }
            spec.nodes.push_back(std::move(node));
        }
        spec.pfs_bw = mbps_to_bandwidth(doc.at("pfs_bw_mbps").get<double>());
        if (doc.contains("scheduler")) {
            auto name = doc.at("scheduler").get<std::string>();
            auto kind = parse_scheduler(name);
            if (!kind) throw std::runtime_error(fmt::format("unknown scheduler '{}'", name));
            spec.scheduler = *kind;
        }
        spec.proactive_threshold = doc.value("proactive_threshold", 0.5);
        if (doc.contains("rank_mode")) {
            auto name = doc.at("rank_mode").get<std::string>();
            auto mode = parse_rank_mode(name);
            if (!mode) throw std::runtime_error(fmt::format("unknown rank_mode '{}'", name));
            spec.rank_mode = *mode;
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(fmt::format("malformed cluster spec: {}", e.what()));
    }
    auto diags = validate_cluster(spec);
    if (!diags.empty()) throw std::runtime_error(fmt::format("invalid cluster spec: {}", diags.front().message));
    return spec;
}

ClusterSpec load_cluster(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open cluster spec '{}'", path.string()));
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(fmt::format("{}: {}", path.string(), e.what()));
    }
    return cluster_from_json(doc);
}

nlohmann::ordered_json cluster_to_json(const ClusterSpec& spec) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : spec.nodes) {
        nlohmann::ordered_json j{{"name", n.name}, {"workers", n.workers},
                                 {"nic_bw_mbps", static_cast<double>(n.nic_bw) / 1e6}};
        if (n.capacity) j["capacity_bytes"] = *n.capacity;
        nodes.push_back(std::move(j));
    }
    return {{"nodes", nodes},
            {"pfs_bw_mbps", static_cast<double>(spec.pfs_bw) / 1e6},
            {"scheduler", to_string(spec.scheduler)},
            {"proactive_threshold", spec.proactive_threshold},
            {"rank_mode", to_string(spec.rank_mode)}};
}

SimTime transfer_duration(ByteCount bytes, std::string_view src, std::string_view dst, const ClusterSpec& spec) {
    if (bytes <= 0) return 0;
    auto bw = static_cast<unsigned __int128>(std::min(spec.bandwidth(src), spec.bandwidth(dst)));
    auto scaled = static_cast<unsigned __int128>(bytes) * kMicrosPerSecond;
    return static_cast<SimTime>((scaled + bw - 1) / bw);
}

std::string to_string(SchedulerKind kind) {
    switch (kind) {
        case SchedulerKind::Fcfs: return "fcfs";
        case SchedulerKind::Locality: return "locality";
        case SchedulerKind::Proactive: return "proactive";
    }
    return "?";
}

std::optional<SchedulerKind> parse_scheduler(std::string_view text) {
    if (text == "fcfs") return SchedulerKind::Fcfs;
    if (text == "locality") return SchedulerKind::Locality;
    if (text == "proactive") return SchedulerKind::Proactive;
    return std::nullopt;
}

}  // namespace wflow

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "wflow/sim.hpp"

namespace wflow {

namespace {

struct Interval {
    SimTime start;
    SimTime end;
    std::string what;
};

}  // namespace

DiagnosticList verify_report(const SimReport& report, const TaskDag& dag, const ClusterSpec& spec) {
    DiagnosticList out;
    auto fail = [&out](std::string msg) { out.push_back({Severity::Error, {}, std::move(msg)}); };

    std::map<std::string, const TaskRecord*> by_task;
    for (const auto& rec : report.tasks) {
        if (!by_task.emplace(rec.task, &rec).second) fail(fmt::format("task '{}' appears twice", rec.task));
    }
    for (const auto& task : dag.tasks) {
        if (!by_task.contains(task.id)) fail(fmt::format("task '{}' missing from report", task.id));
    }
    if (!out.empty()) return out;

    SimTime max_end = 0;
    for (const auto& rec : report.tasks) max_end = std::max(max_end, rec.end);
    if (report.makespan != max_end) {
        fail(fmt::format("makespan {} differs from last task end {}", report.makespan, max_end));
    }

    // Replay actual sizes: sources as declared, outputs from actual inputs.
    std::vector<ByteCount> actual(dag.data.size(), 0);
    for (DataIndex d = 0; d < dag.data.size(); ++d) {
        if (dag.data[d].is_source()) actual[d] = dag.data[d].actual_size.value_or(dag.data[d].est_size);
    }
    for (TaskIndex t : dag.topo_order) {
        const TaskNode& task = dag.tasks[t];
        ByteCount in = 0;
        for (DataIndex d : task.inputs) in += actual[d];
        auto sizes = split_output_bytes(in, task.io_ratio, task.outputs.size());
        for (std::size_t i = 0; i < task.outputs.size(); ++i) actual[task.outputs[i]] = sizes[i];
    }

    // Where and when each item first exists, and when it reaches each node.
    std::map<std::string, NodeId> relocated;  // capacity fallbacks
    for (const auto& e : report.event_log) {
        if (e.kind == EventKind::Warning && !e.item.empty()) relocated[e.item] = e.node;
    }
    std::map<std::pair<std::string, NodeId>, SimTime> resident_since;
    for (DataIndex d = 0; d < dag.data.size(); ++d) {
        const DataItem& item = dag.data[d];
        NodeId origin;
        SimTime created = 0;
        if (item.is_source()) {
            origin = item.location_hint.value_or(kPfs);
        } else {
            const TaskRecord& producer = *by_task.at(dag.tasks[*item.producer].id);
            origin = producer.node;
            created = producer.end;
        }
        if (auto it = relocated.find(item.id); it != relocated.end()) origin = it->second;
        resident_since[{item.id, origin}] = created;
    }
    for (const auto& x : report.transfers) {
        auto key = std::make_pair(x.item, x.dst);
        auto it = resident_since.find(key);
        if (it == resident_since.end() || x.end < it->second) resident_since[key] = x.end;
    }
    auto resident_at = [&](const std::string& item, const NodeId& node, SimTime when) {
        auto it = resident_since.find({item, node});
        return it != resident_since.end() && it->second <= when;
    };

    std::map<NodeId, std::vector<std::pair<SimTime, int>>> slot_deltas;
    for (const auto& task : dag.tasks) {
        const TaskRecord& rec = *by_task.at(task.id);
        auto node = spec.index_of(rec.node);
        if (!node) {
            fail(fmt::format("task '{}' ran on unknown node '{}'", task.id, rec.node));
            continue;
        }
        if (rec.procs != task.procs) fail(fmt::format("task '{}' recorded with {} procs, expected {}", task.id, rec.procs, task.procs));
        if (task.location_hint && *task.location_hint != rec.node) {
            fail(fmt::format("task '{}' ran on '{}' despite @location({})", task.id, rec.node, *task.location_hint));
        }
        if (rec.start < rec.ready_time) fail(fmt::format("task '{}' starts before it is ready", task.id));

        ByteCount in = 0;
        SimTime ready = 0;
        for (DataIndex d : task.inputs) {
            in += actual[d];
            const DataItem& item = dag.data[d];
            if (item.producer) {
                const TaskRecord& producer = *by_task.at(dag.tasks[*item.producer].id);
                ready = std::max(ready, producer.end);
                if (rec.start < producer.end) {
                    fail(fmt::format("task '{}' starts at {} before producer '{}' of '{}' ends at {}", task.id,
                                     rec.start, producer.task, item.id, producer.end));
                }
            }
            if (!resident_at(item.id, rec.node, rec.start)) {
                fail(fmt::format("task '{}' starts on '{}' without input '{}' present", task.id, rec.node, item.id));
            }
        }
        if (rec.ready_time != ready) {
            fail(fmt::format("task '{}' ready_time {} but its last input appeared at {}", task.id, rec.ready_time, ready));
        }
        SimTime expected = estimate_duration(task.complexity, in);
        if (rec.end - rec.start != expected) {
            fail(fmt::format("task '{}' ran {} us, expected {} us", task.id, rec.end - rec.start, expected));
        }
        slot_deltas[rec.node].push_back({rec.start, task.procs});
        slot_deltas[rec.node].push_back({rec.end, -task.procs});
    }

    for (auto& [node, deltas] : slot_deltas) {
        std::sort(deltas.begin(), deltas.end());  // releases sort before acquisitions at equal times
        int running = 0;
        int workers = spec.nodes[*spec.index_of(node)].workers;
        for (const auto& [time, delta] : deltas) {
            running += delta;
            if (running > workers) {
                fail(fmt::format("node '{}' runs {} procs at {} with {} workers", node, running, time, workers));
                break;
            }
        }
    }

    std::map<NodeId, std::vector<Interval>> nic;
    ByteCount pfs_bytes = 0;
    ByteCount inter_bytes = 0;
    for (const auto& x : report.transfers) {
        auto d = dag.find_data(x.item);
        if (!d) {
            fail(fmt::format("transfer of unknown item '{}'", x.item));
            continue;
        }
        if (!spec.has_node(x.src) || !spec.has_node(x.dst) || x.src == x.dst) {
            fail(fmt::format("transfer of '{}' has invalid endpoints {} -> {}", x.item, x.src, x.dst));
            continue;
        }
        if (x.bytes != actual[*d]) fail(fmt::format("transfer of '{}' moved {} B, item has {} B", x.item, x.bytes, actual[*d]));
        if (x.end - x.start != transfer_duration(x.bytes, x.src, x.dst, spec)) {
            fail(fmt::format("transfer of '{}' {} -> {} has wrong duration", x.item, x.src, x.dst));
        }
        if (!resident_at(x.item, x.src, x.start)) {
            fail(fmt::format("transfer of '{}' leaves '{}' before a replica exists there", x.item, x.src));
        }
        std::string what = fmt::format("{} {}->{}", x.item, x.src, x.dst);
        nic[x.src].push_back({x.start, x.end, what});
        nic[x.dst].push_back({x.start, x.end, what});
        (x.src == kPfs || x.dst == kPfs ? pfs_bytes : inter_bytes) += x.bytes;
    }
    for (auto& [node, intervals] : nic) {
        std::sort(intervals.begin(), intervals.end(),
                  [](const Interval& a, const Interval& b) { return std::tie(a.start, a.end) < std::tie(b.start, b.end); });
        for (std::size_t i = 1; i < intervals.size(); ++i) {
            if (intervals[i].start < intervals[i - 1].end) {
                fail(fmt::format("NIC of '{}' carries '{}' and '{}' at once", node, intervals[i - 1].what, intervals[i].what));
            }
        }
    }

    if (report.ledger.pfs != pfs_bytes) {
        fail(fmt::format("ledger pfs={} B but transfers touching pfs moved {} B", report.ledger.pfs, pfs_bytes));
    }
    if (report.ledger.inter_node != inter_bytes) {
        fail(fmt::format("ledger inter_node={} B but node-to-node transfers moved {} B", report.ledger.inter_node,
                         inter_bytes));
    }

    for (std::size_t i = 1; i < report.event_log.size(); ++i) {
        const auto& a = report.event_log[i - 1];
        const auto& b = report.event_log[i];
        if (b.time < a.time || b.seq <= a.seq) {
            fail(fmt::format("event log out of order at seq {}", b.seq));
            break;
        }
    }
    return out;
}

}  // namespace wflow

#include "wflow/schedulers.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace wflow {

NodeId nearest_replica(const std::string& item, const NodeId& dst, const LocalityStore& store, const ClusterSpec& spec) {
    const FileRecord* rec = store.find(item);
    if (!rec) throw StoreError(StoreError::Code::NotFound, "no such file '" + item + "'");
    const NodeId* best = nullptr;
    Bandwidth best_bw = 0;
    for (const NodeId& r : rec->replicas) {
        Bandwidth bw = std::min(spec.bandwidth(r), spec.bandwidth(dst));
        if (!best || bw > best_bw || (bw == best_bw && r < *best)) {
            best = &r;
            best_bw = bw;
        }
    }
    return *best;
}

SimTime move_cost_us(const TaskDag& dag, TaskIndex task, const NodeId& node, const LocalityStore& store,
                     const ClusterSpec& spec, const LocationPredictor* predict) {
    SimTime cost = 0;
    for (DataIndex d : dag.tasks[task].inputs) {
        const DataItem& item = dag.data[d];
        if (const FileRecord* rec = store.find(item.id)) {
            if (store.is_local(item.id, node)) continue;
            cost += transfer_duration(rec->size, nearest_replica(item.id, node, store, spec), node, spec);
        } else {
            NodeId where = predict ? (*predict)(d) : store.fallback_placement(item.id);
            if (where == node) continue;
            cost += transfer_duration(item.est_size, where, node, spec);
        }
    }
    return cost;
}

double move_cost(const TaskDag& dag, TaskIndex task, const NodeId& node, const LocalityStore& store,
                 const ClusterSpec& spec, const LocationPredictor* predict) {
    return to_seconds(move_cost_us(dag, task, node, store, spec, predict));
}

ByteCount known_input_bytes(const TaskDag& dag, TaskIndex task, const LocalityStore& store) {
    ByteCount total = 0;
    for (DataIndex d : dag.tasks[task].inputs) {
        const FileRecord* rec = store.find(dag.data[d].id);
        total += rec ? rec->size : dag.data[d].est_size;
    }
    return total;
}

double available_input_fraction(const TaskDag& dag, TaskIndex task, const LocalityStore& store) {
    ByteCount have = 0;
    ByteCount total = 0;
    for (DataIndex d : dag.tasks[task].inputs) {
        if (const FileRecord* rec = store.find(dag.data[d].id)) {
            have += rec->size;
            total += rec->size;
        } else {
            total += dag.data[d].est_size;
        }
    }
    return total == 0 ? 1.0 : static_cast<double>(have) / static_cast<double>(total);
}

std::vector<TaskIndex> priority_order(std::span<const TaskIndex> tasks, const TaskDag& dag, const LocalityStore& store) {
    struct Key {
        SimTime rank;
        ByteCount bytes;
        TaskIndex t;
    };
    std::vector<Key> keys;
    keys.reserve(tasks.size());
    for (TaskIndex t : tasks) keys.push_back({dag.tasks[t].rank, known_input_bytes(dag, t, store), t});
    std::sort(keys.begin(), keys.end(), [&dag](const Key& a, const Key& b) {
        if (a.rank != b.rank) return a.rank > b.rank;
        if (a.bytes != b.bytes) return a.bytes > b.bytes;
        return dag.tasks[a.t].id < dag.tasks[b.t].id;
    });
    std::vector<TaskIndex> out;
    out.reserve(keys.size());
    for (const Key& k : keys) out.push_back(k.t);
    return out;
}

bool may_run_on(const TaskNode& task, const NodeId& node) { return !task.location_hint || *task.location_hint == node; }

std::vector<Assignment> fcfs_select(std::span<const TaskIndex> ready, const ClusterState& state, const TaskDag& dag,
                                    const ClusterSpec& spec, std::size_t& cursor) {
    std::vector<Assignment> out;
    std::vector<int> free = state.free_slots;
    const std::size_t n = spec.nodes.size();
    for (TaskIndex t : ready) {
        const TaskNode& task = dag.tasks[t];
        std::optional<std::size_t> chosen;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t i = (cursor + k) % n;
            if (free[i] >= task.procs && may_run_on(task, spec.nodes[i].name)) {
                chosen = i;
                break;
            }
        }
        if (!chosen) break;
        free[*chosen] -= task.procs;
        cursor = (*chosen + 1) % n;
        out.push_back({t, spec.nodes[*chosen].name, false});
    }
    return out;
}

std::vector<Assignment> heuristic_select(std::span<const TaskIndex> ready, const SchedulerView& view,
                                         const PinTable* pins) {
    std::vector<Assignment> out;
    std::vector<int> free = view.state.free_slots;
    for (TaskIndex t : priority_order(ready, view.dag, view.store)) {
        const TaskNode& task = view.dag.tasks[t];
        const NodeId* pin = nullptr;
        if (pins) {
            if (auto it = pins->find(t); it != pins->end()) pin = &it->second;
        }
        std::optional<std::size_t> best;
        SimTime best_cost = 0;
        for (std::size_t i = 0; i < view.spec.nodes.size(); ++i) {
            const NodeId& name = view.spec.nodes[i].name;
            if (free[i] < task.procs || !may_run_on(task, name) || (pin && *pin != name)) continue;
            SimTime c = move_cost_us(view.dag, t, name, view.store, view.spec);
            if (!best || c < best_cost || (c == best_cost && name < view.spec.nodes[*best].name)) {
                best = i;
                best_cost = c;
            }
        }
        if (!best) continue;
        free[*best] -= task.procs;
        out.push_back({t, view.spec.nodes[*best].name, pin != nullptr});
    }
    return out;
}

ScanResult proactive_scan(const SchedulerView& view, double theta, PinTable& pins) {
    ScanResult result;
    const TaskDag& dag = view.dag;
    const LocalityStore& store = view.store;

    LocationPredictor predict = [&](DataIndex d) -> NodeId {
        const DataItem& item = dag.data[d];
        if (item.producer) {
            if (auto it = pins.find(*item.producer); it != pins.end()) return it->second;
            if (const auto& placed = view.placed[*item.producer]) return *placed;
        }
        return store.fallback_placement(item.id);
    };

    std::set<std::pair<std::string, NodeId>> requested;
    auto request_inputs = [&](TaskIndex t, const NodeId& dst) {
        for (DataIndex d : dag.tasks[t].inputs) {
            const std::string& id = dag.data[d].id;
            if (!store.exists(id) || store.is_local(id, dst) || store.in_flight(id, dst)) continue;
            if (requested.emplace(id, dst).second) result.requests.push_back({id, dst, t});
        }
    };

    // earlier pins whose inputs appeared since
    for (const auto& [t, node] : pins) {
        if (view.phase[t] == TaskPhase::Waiting || view.phase[t] == TaskPhase::Ready) request_inputs(t, node);
    }

    if (theta >= 1.0) return result;

    std::vector<TaskIndex> candidates;
    for (TaskIndex t = 0; t < dag.tasks.size(); ++t) {
        if (view.phase[t] != TaskPhase::Waiting || pins.contains(t)) continue;
        if (available_input_fraction(dag, t, store) >= theta) candidates.push_back(t);
    }

    for (TaskIndex t : priority_order(candidates, dag, store)) {
        const TaskNode& task = dag.tasks[t];
        const NodeSpec* best = nullptr;
        SimTime best_cost = 0;
        for (const NodeSpec& node : view.spec.nodes) {
            if (node.workers < task.procs || !may_run_on(task, node.name)) continue;
            SimTime c = move_cost_us(dag, t, node.name, store, view.spec, &predict);
            if (!best || c < best_cost || (c == best_cost && node.name < best->name)) {
                best = &node;
                best_cost = c;
            }
        }
        if (!best) continue;
        pins.emplace(t, best->name);
        result.pins.push_back({t, best->name, true});
        request_inputs(t, best->name);
    }
    return result;
}

std::vector<Assignment> FcfsScheduler::select(const SchedulerView& view, std::span<const TaskIndex> ready) {
    return fcfs_select(ready, view.state, view.dag, view.spec, cursor_);
}

std::vector<Assignment> LocalityScheduler::select(const SchedulerView& view, std::span<const TaskIndex> ready) {
    return heuristic_select(ready, view);
}

std::vector<Assignment> ProactiveScheduler::select(const SchedulerView& view, std::span<const TaskIndex> ready) {
    return heuristic_select(ready, view, &pins_);
}

ScanResult ProactiveScheduler::scan(const SchedulerView& view) { return proactive_scan(view, theta_, pins_); }

std::unique_ptr<Scheduler> make_scheduler(SchedulerKind kind, double proactive_threshold) {
    switch (kind) {
        case SchedulerKind::Fcfs: return std::make_unique<FcfsScheduler>();
        case SchedulerKind::Locality: return std::make_unique<LocalityScheduler>();
        case SchedulerKind::Proactive: return std::make_unique<ProactiveScheduler>(proactive_threshold);
    }
    return nullptr;
}

}  // namespace wflow

#include "wflow/sim.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace wflow {

namespace {

enum class Wakeup { TransferEnd, TaskEnd };

struct QueueEntry {
    SimTime time;
    std::uint64_t order;
    Wakeup kind;
    std::uint64_t id;

    bool operator>(const QueueEntry& o) const { return std::tie(time, order) > std::tie(o.time, o.order); }
};

class Simulation {
public:
    Simulation(const TaskDag& dag, const ClusterSpec& spec, Scheduler& scheduler)
        : dag_(dag),
          spec_(spec),
          sched_(scheduler),
          store_(spec.nodes),
          phase_(dag.tasks.size(), TaskPhase::Waiting),
          placed_(dag.tasks.size()),
          missing_(dag.tasks.size(), 0),
          ready_time_(dag.tasks.size(), 0),
          start_(dag.tasks.size(), 0),
          end_(dag.tasks.size(), 0),
          nic_active_(spec.nodes.size() + 1) {}

    SimReport run() {
        check_inputs();
        state_.free_slots.clear();
        for (const auto& n : spec_.nodes) state_.free_slots.push_back(n.workers);
        state_.nic_busy_until.assign(spec_.nodes.size() + 1, 0);

        for (const DataItem& item : dag_.data) {
            if (!item.is_source()) continue;
            store_.create(item.id, item.actual_size.value_or(item.est_size), item.location_hint.value_or(kPfs), kPfs, 0);
            log_warnings(item.id);
        }
        std::vector<TaskIndex> initially_ready;
        for (TaskIndex t = 0; t < dag_.tasks.size(); ++t) {
            if (inputs_exist(t)) initially_ready.push_back(t);
        }
        mark_ready(std::move(initially_ready));
        schedule(true);

        while (!queue_.empty()) {
            QueueEntry e = queue_.top();
            queue_.pop();
            now_ = e.time;
            if (e.kind == Wakeup::TaskEnd) {
                on_task_end(static_cast<TaskIndex>(e.id));
            } else {
                on_transfer_end(e.id);
            }
        }
        if (done_ != dag_.tasks.size()) deadlock();
        return report();
    }

private:
    std::size_t endpoint(const NodeId& name) const {
        return name == kPfs ? spec_.nodes.size() : *spec_.index_of(name);
    }

    void check_inputs() const {
        auto diags = validate_cluster(spec_);
        if (!diags.empty()) throw SimError(SimError::Code::InvalidSpec, diags.front().message);
        for (const auto& item : dag_.data) {
            if (item.is_source() && item.location_hint && !spec_.has_node(*item.location_hint)) {
                throw SimError(SimError::Code::UnknownNode,
                               fmt::format("file '{}' is placed on unknown node '{}'", item.id, *item.location_hint));
            }
        }
        for (const auto& task : dag_.tasks) {
            if (task.location_hint && !spec_.index_of(*task.location_hint)) {
                throw SimError(SimError::Code::UnknownNode,
                               fmt::format("task '{}' is placed on unknown node '{}'", task.id, *task.location_hint));
            }
        }
    }

    void log(EventKind kind, std::string task = {}, std::string item = {}, NodeId node = {},
             std::optional<TransferId> transfer = {}, std::string message = {}) {
        log_.push_back({now_, log_.size() + 1, kind, std::move(task), std::move(item), std::move(node), transfer,
                        std::move(message)});
    }

    void log_warnings(const std::string& item) {
        for (auto& w : store_.take_warnings()) log(EventKind::Warning, {}, item, store_.stat_location(item), {}, std::move(w));
    }

    void push(SimTime at, Wakeup kind, std::uint64_t id) { queue_.push({at, ++order_, kind, id}); }

    bool inputs_exist(TaskIndex t) const {
        const auto& ins = dag_.tasks[t].inputs;
        return std::all_of(ins.begin(), ins.end(), [this](DataIndex d) { return store_.exists(dag_.data[d].id); });
    }

    ByteCount actual_input_bytes(TaskIndex t) const {
        ByteCount total = 0;
        for (DataIndex d : dag_.tasks[t].inputs) total += store_.find(dag_.data[d].id)->size;
        return total;
    }

    void mark_ready(std::vector<TaskIndex> tasks) {
        std::sort(tasks.begin(), tasks.end(), [this](TaskIndex a, TaskIndex b) { return dag_.tasks[a].id < dag_.tasks[b].id; });
        for (TaskIndex t : tasks) {
            phase_[t] = TaskPhase::Ready;
            ready_time_[t] = now_;
            ready_fifo_.push_back(t);
        }
    }

    SchedulerView view() {
        state_.now = now_;
        return SchedulerView{dag_, store_, spec_, state_, phase_, placed_};
    }

    void schedule(bool created) {
        for (const Assignment& a : sched_.select(view(), ready_fifo_)) dispatch(a);
        if (created) {
            ScanResult scan = sched_.scan(view());
            for (const Assignment& pin : scan.pins) log(EventKind::PinCreated, dag_.tasks[pin.task].id, {}, pin.node);
            for (const PipelineRequest& req : scan.requests) enqueue(req.item, req.dst, TransferClass::Pipeline);
        }
        pump_transfers();
    }

    std::optional<TransferId> enqueue(const std::string& item, const NodeId& dst, TransferClass cls) {
        if (store_.is_local(item, dst)) return std::nullopt;
        if (auto existing = store_.in_flight(item, dst)) return existing;
        TransferHandle h = store_.enqueue_transfer(item, nearest_replica(item, dst, store_, spec_), dst, cls, now_);
        auto key = [this](TransferId id) {
            return std::make_pair(store_.transfer(id).cls == TransferClass::Pipeline, id);
        };
        pending_.insert(std::upper_bound(pending_.begin(), pending_.end(), h.id,
                                         [&](TransferId a, TransferId b) { return key(a) < key(b); }),
                        h.id);
        return h.id;
    }

    void dispatch(const Assignment& a) {
        const TaskNode& task = dag_.tasks[a.task];
        auto node = spec_.index_of(a.node);
        if (phase_[a.task] != TaskPhase::Ready || !node || state_.free_slots[*node] < task.procs) {
            throw std::logic_error(fmt::format("scheduler '{}' produced an invalid assignment of '{}' to '{}'",
                                               sched_.name(), task.id, a.node));
        }
        ready_fifo_.erase(std::find(ready_fifo_.begin(), ready_fifo_.end(), a.task));
        phase_[a.task] = TaskPhase::Dispatched;
        placed_[a.task] = a.node;
        state_.free_slots[*node] -= task.procs;

        for (DataIndex d : task.inputs) {
            const std::string& id = dag_.data[d].id;
            if (store_.is_local(id, a.node)) {
                store_.record_local_read(store_.find(id)->size);
                continue;
            }
            enqueue(id, a.node, TransferClass::Demand);
            waiters_[{id, a.node}].push_back(a.task);
            ++missing_[a.task];
        }
        if (missing_[a.task] == 0) start_task(a.task);
    }

    void start_task(TaskIndex t) {
        phase_[t] = TaskPhase::Running;
        start_[t] = now_;
        log(EventKind::TaskStart, dag_.tasks[t].id, {}, *placed_[t]);
        push(now_ + estimate_duration(dag_.tasks[t].complexity, actual_input_bytes(t)), Wakeup::TaskEnd, t);
    }

    void on_task_end(TaskIndex t) {
        const TaskNode& task = dag_.tasks[t];
        const NodeId& node = *placed_[t];
        phase_[t] = TaskPhase::Done;
        end_[t] = now_;
        ++done_;
        state_.free_slots[endpoint(node)] += task.procs;
        log(EventKind::TaskEnd, task.id, {}, node);

        auto sizes = split_output_bytes(actual_input_bytes(t), task.io_ratio, task.outputs.size());
        std::vector<TaskIndex> newly_ready;
        for (std::size_t i = 0; i < task.outputs.size(); ++i) {
            const DataItem& item = dag_.data[task.outputs[i]];
            store_.create(item.id, sizes[i], node, node, now_);
            log_warnings(item.id);
            for (TaskIndex c : item.consumers) {
                if (phase_[c] == TaskPhase::Waiting && inputs_exist(c) &&
                    std::find(newly_ready.begin(), newly_ready.end(), c) == newly_ready.end()) {
                    newly_ready.push_back(c);
                }
            }
        }
        mark_ready(std::move(newly_ready));
        schedule(true);
    }

    void on_transfer_end(TransferId id) {
        store_.complete_transfer(id, now_);
        const TransferHandle& h = store_.transfer(id);
        nic_active_[endpoint(h.src)].reset();
        nic_active_[endpoint(h.dst)].reset();
        log(EventKind::TransferEnd, {}, h.item, h.dst, id);
        transfers_.push_back({h.item, h.src, h.dst, h.bytes, h.cls, h.started_at, h.finished_at});

        auto it = waiters_.find({h.item, h.dst});
        if (it != waiters_.end()) {
            std::vector<TaskIndex> waiting = std::move(it->second);
            waiters_.erase(it);
            for (TaskIndex t : waiting) {
                if (--missing_[t] == 0) {
                    log(EventKind::InputsArrived, dag_.tasks[t].id, {}, *placed_[t]);
                    start_task(t);
                }
            }
        }
        pump_transfers();
    }

    // Strict FIFO per NIC: a queued transfer blocks later ones at both of its
    // endpoints until it can start. The source is re-resolved on every pass,
    // so a transfer that waited starts from the nearest replica at that time.
    void pump_transfers() {
        std::vector<bool> claimed(nic_active_.size(), false);
        for (auto it = pending_.begin(); it != pending_.end();) {
            const TransferHandle& h = store_.transfer(*it);
            NodeId nearest = nearest_replica(h.item, h.dst, store_, spec_);
            if (nearest != h.src) store_.rebind_source(*it, nearest);
            std::size_t s = endpoint(h.src);
            std::size_t d = endpoint(h.dst);
            if (nic_active_[s] || nic_active_[d] || claimed[s] || claimed[d]) {
                claimed[s] = claimed[d] = true;
                ++it;
                continue;
            }
            TransferId id = *it;
            it = pending_.erase(it);
            store_.start_transfer(id, now_);
            nic_active_[s] = nic_active_[d] = id;
            SimTime until = now_ + transfer_duration(h.bytes, h.src, h.dst, spec_);
            state_.nic_busy_until[s] = state_.nic_busy_until[d] = until;
            log(EventKind::TransferStart, {}, h.item, h.dst, id, fmt::format("from {}", h.src));
            push(until, Wakeup::TransferEnd, id);
            claimed[s] = claimed[d] = true;
        }
    }

    [[noreturn]] void deadlock() const {
        std::vector<std::string> stuck;
        for (TaskIndex t = 0; t < dag_.tasks.size(); ++t) {
            const TaskNode& task = dag_.tasks[t];
            switch (phase_[t]) {
                case TaskPhase::Waiting: {
                    std::vector<std::string> absent;
                    for (DataIndex d : task.inputs) {
                        if (!store_.exists(dag_.data[d].id)) absent.push_back(dag_.data[d].id);
                    }
                    stuck.push_back(fmt::format("{}: waiting for inputs {}", task.id, fmt::join(absent, ", ")));
                    break;
                }
                case TaskPhase::Ready:
                    stuck.push_back(fmt::format("{}: ready but no node can take {} procs", task.id, task.procs));
                    break;
                case TaskPhase::Dispatched:
                    stuck.push_back(fmt::format("{}: dispatched to {} but inputs never arrived", task.id, *placed_[t]));
                    break;
                default: break;
            }
        }
        throw SimError(SimError::Code::Deadlock,
                       fmt::format("deadlock at t={:.6f}s with {} unfinished tasks", to_seconds(now_), stuck.size()),
                       std::move(stuck));
    }

    SimReport report() {
        SimReport r;
        for (TaskIndex t = 0; t < dag_.tasks.size(); ++t) {
            r.tasks.push_back({dag_.tasks[t].id, *placed_[t], ready_time_[t], start_[t], end_[t], dag_.tasks[t].procs});
            r.makespan = std::max(r.makespan, end_[t]);
        }
        r.transfers = std::move(transfers_);
        r.ledger = store_.bytes_ledger();
        r.event_log = std::move(log_);
        return r;
    }

    const TaskDag& dag_;
    const ClusterSpec& spec_;
    Scheduler& sched_;
    LocalityStore store_;

    std::vector<TaskPhase> phase_;
    std::vector<std::optional<NodeId>> placed_;
    std::vector<int> missing_;
    std::vector<SimTime> ready_time_;
    std::vector<SimTime> start_;
    std::vector<SimTime> end_;
    std::vector<TaskIndex> ready_fifo_;
    std::size_t done_ = 0;

    ClusterState state_;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue_;
    std::uint64_t order_ = 0;
    SimTime now_ = 0;

    std::vector<std::optional<TransferId>> nic_active_;  // nodes, then pfs
    std::vector<TransferId> pending_;                    // Demand before Pipeline, then FIFO
    std::map<std::pair<std::string, NodeId>, std::vector<TaskIndex>> waiters_;
    std::vector<TransferRecord> transfers_;
    std::vector<SimEvent> log_;
};

std::string seconds_fixed(SimTime us) { return fmt::format("{:.6f}", to_seconds(us)); }

}  // namespace

SimReport run(const TaskDag& dag, const ClusterSpec& spec, Scheduler& scheduler) {
    return Simulation(dag, spec, scheduler).run();
}

SimReport run(const TaskDag& dag, const ClusterSpec& spec) {
    auto scheduler = make_scheduler(spec.scheduler, spec.proactive_threshold);
    return run(dag, spec, *scheduler);
}

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::InputsArrived: return "InputsArrived";
        case EventKind::TaskStart: return "TaskStart";
        case EventKind::TaskEnd: return "TaskEnd";
        case EventKind::TransferStart: return "TransferStart";
        case EventKind::TransferEnd: return "TransferEnd";
        case EventKind::PinCreated: return "PinCreated";
        case EventKind::Warning: return "Warning";
    }
    return "?";
}

std::string to_string(TransferClass cls) { return cls == TransferClass::Demand ? "demand" : "pipeline"; }

namespace {

nlohmann::ordered_json event_json(const SimEvent& e) {
    nlohmann::ordered_json j{{"time", e.time}, {"seq", e.seq}, {"kind", to_string(e.kind)}};
    if (!e.task.empty()) j["task"] = e.task;
    if (!e.item.empty()) j["item"] = e.item;
    if (!e.node.empty()) j["node"] = e.node;
    if (e.transfer) j["transfer"] = *e.transfer;
    if (!e.message.empty()) j["message"] = e.message;
    return j;
}

}  // namespace

nlohmann::ordered_json report_to_json(const SimReport& report) {
    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    for (const auto& t : report.tasks) {
        tasks.push_back({{"task", t.task}, {"node", t.node}, {"ready_time", t.ready_time},
                         {"start", t.start}, {"end", t.end}, {"procs", t.procs}});
    }
    nlohmann::ordered_json transfers = nlohmann::ordered_json::array();
    for (const auto& x : report.transfers) {
        transfers.push_back({{"item", x.item}, {"src", x.src}, {"dst", x.dst}, {"bytes", x.bytes},
                             {"class", to_string(x.cls)}, {"start", x.start}, {"end", x.end}});
    }
    nlohmann::ordered_json events = nlohmann::ordered_json::array();
    for (const auto& e : report.event_log) events.push_back(event_json(e));
    return {{"time_unit", "us"},
            {"makespan", report.makespan},
            {"tasks", tasks},
            {"transfers", transfers},
            {"ledger",
             {{"local", report.ledger.local}, {"inter_node", report.ledger.inter_node}, {"pfs", report.ledger.pfs}}},
            {"event_log", events}};
}

std::string timeline_csv(const SimReport& report) {
    std::string out = "task,node,ready,start,end\n";
    for (const auto& t : report.tasks) {
        out += fmt::format("{},{},{},{},{}\n", t.task, t.node, seconds_fixed(t.ready_time), seconds_fixed(t.start),
                           seconds_fixed(t.end));
    }
    return out;
}

std::string event_log_jsonl(const SimReport& report) {
    std::string out;
    for (const auto& e : report.event_log) out += event_json(e).dump() + "\n";
    return out;
}

}  // namespace wflow

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wflow/cluster.hpp"
#include "wflow/dag.hpp"
#include "wflow/store.hpp"

namespace wflow {

enum class TaskPhase {
    Waiting,     // some input does not exist yet
    Ready,       // all inputs exist, not dispatched
    Dispatched,  // slots held, inputs still arriving
    Running,
    Done,
};

// Dynamic worker availability as seen by the scheduler.
struct ClusterState {
    std::vector<int> free_slots;          // indexed like ClusterSpec::nodes
    std::vector<SimTime> nic_busy_until;  // ClusterSpec::nodes, then pfs last
    SimTime now = 0;
};

struct Assignment {
    TaskIndex task = 0;
    NodeId node;
    bool pinned = false;

    bool operator==(const Assignment&) const = default;
};

struct PipelineRequest {
    std::string item;
    NodeId dst;
    TaskIndex reason = 0;

    bool operator==(const PipelineRequest&) const = default;
};

struct SchedulerView {
    const TaskDag& dag;
    const LocalityStore& store;
    const ClusterSpec& spec;
    const ClusterState& state;
    std::span<const TaskPhase> phase;
    std::span<const std::optional<NodeId>> placed;  // node of every dispatched, running or done task
};

using PinTable = std::map<TaskIndex, NodeId>;

// Where an input that does not exist yet is expected to appear.
using LocationPredictor = std::function<NodeId(DataIndex)>;

// Highest-bandwidth replica of `item` as seen from dst; ties go to the
// smaller node name.
NodeId nearest_replica(const std::string& item, const NodeId& dst, const LocalityStore& store, const ClusterSpec& spec);

// Data movement cost of running `task` on `node`: transfer time of every
// non-local input from its nearest replica. Inputs that do not exist yet are
// costed at their estimated size from `predict` (or the store's fallback
// placement when no predictor is given).
SimTime move_cost_us(const TaskDag& dag, TaskIndex task, const NodeId& node, const LocalityStore& store,
                     const ClusterSpec& spec, const LocationPredictor* predict = nullptr);
double move_cost(const TaskDag& dag, TaskIndex task, const NodeId& node, const LocalityStore& store,
                 const ClusterSpec& spec, const LocationPredictor* predict = nullptr);

// Actual size for inputs that exist, estimated size otherwise.
ByteCount known_input_bytes(const TaskDag& dag, TaskIndex task, const LocalityStore& store);

// Fraction of input bytes that already exist; 1.0 when there are no bytes.
double available_input_fraction(const TaskDag& dag, TaskIndex task, const LocalityStore& store);

// Descending rank, then larger known input bytes, then smaller task id.
std::vector<TaskIndex> priority_order(std::span<const TaskIndex> tasks, const TaskDag& dag, const LocalityStore& store);

bool may_run_on(const TaskNode& task, const NodeId& node);

// Strict FCFS with a round-robin node cursor; stops at the first task that
// fits nowhere.
std::vector<Assignment> fcfs_select(std::span<const TaskIndex> ready, const ClusterState& state, const TaskDag& dag,
                                    const ClusterSpec& spec, std::size_t& cursor);

// Rank picks which task goes next, move cost picks where. Tasks that fit
// nowhere are skipped. Pinned tasks only consider their pinned node.
std::vector<Assignment> heuristic_select(std::span<const TaskIndex> ready, const SchedulerView& view,
                                         const PinTable* pins = nullptr);

struct ScanResult {
    std::vector<Assignment> pins;
    std::vector<PipelineRequest> requests;
};

// Pins not-yet-ready tasks whose available input fraction reaches theta and
// asks for their existing inputs to be pipelined to the pinned node. Also
// re-issues requests for inputs of earlier pins that have appeared since.
// theta >= 1 never pins: only a ready task has all of its input bytes.
ScanResult proactive_scan(const SchedulerView& view, double theta, PinTable& pins);

class Scheduler {
public:
    virtual ~Scheduler() = default;

    virtual std::string_view name() const = 0;

    // `ready` holds undispatched ready tasks ordered by ready time, then id.
    virtual std::vector<Assignment> select(const SchedulerView& view, std::span<const TaskIndex> ready) = 0;

    // Called after every data creation, once select's assignments are applied.
    virtual ScanResult scan(const SchedulerView&) { return {}; }
};

class FcfsScheduler final : public Scheduler {
public:
    std::string_view name() const override { return "fcfs"; }
    std::vector<Assignment> select(const SchedulerView& view, std::span<const TaskIndex> ready) override;

private:
    std::size_t cursor_ = 0;
};

class LocalityScheduler final : public Scheduler {
public:
    std::string_view name() const override { return "locality"; }
    std::vector<Assignment> select(const SchedulerView& view, std::span<const TaskIndex> ready) override;
};

class ProactiveScheduler final : public Scheduler {
public:
    explicit ProactiveScheduler(double theta) : theta_(theta) {}

    std::string_view name() const override { return "proactive"; }
    std::vector<Assignment> select(const SchedulerView& view, std::span<const TaskIndex> ready) override;
    ScanResult scan(const SchedulerView& view) override;

    const PinTable& pins() const { return pins_; }

private:
    double theta_;
    PinTable pins_;
};

std::unique_ptr<Scheduler> make_scheduler(SchedulerKind kind, double proactive_threshold);

}  // namespace wflow

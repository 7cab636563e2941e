#pragma once

#include <optional>
#include <set>
#include <vector>

#include "wflow/dag.hpp"
#include "wflow/schedulers.hpp"
#include "wflow/sim.hpp"

namespace wflow::testing {

// Upward rank and EST by enumerating every path explicitly. Edges are
// re-derived from task inputs/outputs, not taken from the DAG's adjacency.
struct PathValues {
    std::vector<SimTime> rank;
    std::vector<SimTime> est_start;
};
PathValues enumerate_paths(const TaskDag& dag, RankMode mode);

// Fixed scheduling plan: a node per task, a global priority order, a
// dispatch discipline and an optional prefetch threshold.
struct Plan {
    enum class Discipline {
        Greedy,       // dispatch any ready task whose node has room, in priority order
        NodeStrict,   // per node, dispatch in priority order without overtaking
        GlobalStrict  // dispatch in exact priority order without overtaking
    };
    std::vector<std::size_t> node;  // index into ClusterSpec::nodes
    std::vector<TaskIndex> order;
    Discipline discipline = Discipline::Greedy;
    std::optional<double> prefetch_threshold;
};

class PlanScheduler final : public Scheduler {
public:
    explicit PlanScheduler(Plan plan) : plan_(std::move(plan)) {}

    std::string_view name() const override { return "plan"; }
    std::vector<Assignment> select(const SchedulerView& view, std::span<const TaskIndex> ready) override;
    ScanResult scan(const SchedulerView& view) override;

private:
    Plan plan_;
    std::set<TaskIndex> triggered_;
};

struct OracleResult {
    SimTime makespan = 0;
    Plan best;
    std::size_t plans_tried = 0;
};

// Minimum makespan over every node assignment, priority order, discipline
// and prefetch setting {off, 0.5, 0}. Meant for <= 4 tasks and <= 2 nodes.
OracleResult exhaustive_optimum(const TaskDag& dag, const ClusterSpec& spec);

// Minimum total bytes that must cross the network over all task -> node
// maps, counting an input as moved when its holder differs from the task's
// node (sources at their hinted node or pfs, outputs at their producer).
ByteCount min_bytes_moved(const TaskDag& dag, const ClusterSpec& spec);

}  // namespace wflow::testing

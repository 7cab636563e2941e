#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wflow/ast.hpp"

namespace wflow {

using TaskIndex = std::size_t;
using DataIndex = std::size_t;

enum class RankMode { Time, Hops };

struct DataItem {
    std::string id;
    ByteCount est_size = 0;
    std::optional<ByteCount> actual_size;  // set for source files only
    std::optional<TaskIndex> producer;     // absent iff source file
    std::vector<TaskIndex> consumers;      // sorted by task id
    std::optional<std::string> location_hint;
    std::optional<std::string> external_path;

    bool is_source() const { return !producer.has_value(); }
};

struct TaskNode {
    std::string id;
    std::string app_name;
    std::vector<DataIndex> inputs;
    std::vector<DataIndex> outputs;
    int procs = 1;
    ComplexityHint complexity;
    double io_ratio = 1.0;
    std::optional<std::string> location_hint;

    SimTime est_time = 0;   // µs
    SimTime rank = 0;       // µs in Time mode; hops × 1 s in Hops mode
    SimTime est_start = 0;  // µs

    std::vector<TaskIndex> predecessors;  // sorted by task id
    std::vector<TaskIndex> successors;    // sorted by task id
};

// Task and data vectors are indexed by TaskIndex / DataIndex. Tasks keep
// script order; data items are sorted by id.
struct TaskDag {
    std::vector<TaskNode> tasks;
    std::vector<DataItem> data;
    std::vector<TaskIndex> topo_order;
    RankMode rank_mode = RankMode::Time;

    std::optional<TaskIndex> find_task(const std::string& id) const;
    std::optional<DataIndex> find_data(const std::string& id) const;

    const TaskNode& task(const std::string& id) const;
    const DataItem& item(const std::string& id) const;

    ByteCount est_input_bytes(TaskIndex t) const;
};

class CyclicDependency : public std::runtime_error {
public:
    explicit CyclicDependency(std::vector<std::string> cycle_tasks);

    const std::vector<std::string>& cycle() const { return cycle_; }

private:
    std::vector<std::string> cycle_;
};

// Requires validate(ast) to be clean. Task ids are the app name, or
// `app#k` (k = 1, 2, ...) when the same app is called more than once.
TaskDag build_dag(const WorkflowAst& ast);

// Estimated output size = io_ratio × sum of estimated input sizes, split
// evenly across outputs with the remainder going to the first output.
TaskDag propagate_sizes(TaskDag dag);

std::vector<ByteCount> split_output_bytes(ByteCount total_in, double io_ratio, std::size_t n_outputs);

SimTime estimate_duration(const ComplexityHint& complexity, ByteCount total_input_bytes);
double estimate_time(const TaskNode& task, ByteCount total_input_bytes);

TaskDag estimate_times(TaskDag dag);

// Upward rank: rank(t) = w(t) + max over successors of rank(s), where w is
// est_time (Time) or one second per task (Hops).
TaskDag compute_ranks(TaskDag dag, RankMode mode = RankMode::Time);

// EST(t) = max over predecessors p of EST(p) + est_time(p); contention-free.
TaskDag earliest_start_times(TaskDag dag);

// build → sizes → times → ranks → EST.
TaskDag compile(const WorkflowAst& ast, RankMode mode = RankMode::Time);

std::string export_dot(const TaskDag& dag);
nlohmann::ordered_json dag_to_json(const TaskDag& dag);

std::string to_string(RankMode mode);
std::optional<RankMode> parse_rank_mode(std::string_view text);

}  // namespace wflow

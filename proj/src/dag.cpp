#include "wflow/dag.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>

#include <fmt/format.h>

namespace wflow {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> find_cycle(const TaskDag& dag, const std::vector<int>& indegree) {
    // every remaining node has a remaining predecessor, so walking backwards
    // from any of them must revisit a node
    TaskIndex start = 0;
    for (TaskIndex t = 0; t < dag.tasks.size(); ++t) {
        if (indegree[t] > 0) {
            start = t;
            break;
        }
    }
    std::vector<TaskIndex> path;
    std::map<TaskIndex, std::size_t> seen_at;
    TaskIndex cur = start;
    while (!seen_at.contains(cur)) {
        seen_at[cur] = path.size();
        path.push_back(cur);
        for (TaskIndex p : dag.tasks[cur].predecessors) {
            if (indegree[p] > 0) {
                cur = p;
                break;
            }
        }
    }
    std::vector<std::string> cycle;
    for (std::size_t i = path.size(); i-- > seen_at[cur];) cycle.push_back(dag.tasks[path[i]].id);
    return cycle;
}

std::string fmt_seconds(SimTime us) { return fmt::format("{:.3f}", to_seconds(us)); }

}  // namespace

CyclicDependency::CyclicDependency(std::vector<std::string> cycle_tasks)
    : std::runtime_error(fmt::format("cyclic dependency: {} -> {}", join(cycle_tasks, " -> "),
                                     cycle_tasks.empty() ? "" : cycle_tasks.front())),
      cycle_(std::move(cycle_tasks)) {}

std::optional<TaskIndex> TaskDag::find_task(const std::string& id) const {
    for (TaskIndex t = 0; t < tasks.size(); ++t) {
        if (tasks[t].id == id) return t;
    }
    return std::nullopt;
}

std::optional<DataIndex> TaskDag::find_data(const std::string& id) const {
    auto it = std::lower_bound(data.begin(), data.end(), id, [](const DataItem& d, const std::string& key) {
        return d.id < key;
    });
    if (it == data.end() || it->id != id) return std::nullopt;
    return static_cast<DataIndex>(it - data.begin());
}

const TaskNode& TaskDag::task(const std::string& id) const {
    auto t = find_task(id);
    if (!t) throw std::out_of_range(fmt::format("no task '{}'", id));
    return tasks[*t];
}

const DataItem& TaskDag::item(const std::string& id) const {
    auto d = find_data(id);
    if (!d) throw std::out_of_range(fmt::format("no data item '{}'", id));
    return data[*d];
}

ByteCount TaskDag::est_input_bytes(TaskIndex t) const {
    ByteCount total = 0;
    for (DataIndex d : tasks[t].inputs) total += data[d].est_size;
    return total;
}

TaskDag build_dag(const WorkflowAst& ast) {
    TaskDag dag;

    std::map<std::string, DataItem> items;
    for (const auto& decl : ast.file_decls) {
        DataItem& item = items[decl.name];
        item.id = decl.name;
        item.location_hint = decl.location_hint;
        item.external_path = decl.external_path;
        if (decl.size_hint) item.est_size = *decl.size_hint;
    }
    for (const auto& call : ast.app_calls) {
        for (const auto& o : call.outputs) items[o].id = o;
        for (const auto& i : call.inputs) items[i].id = i;
    }
    for (auto& [id, item] : items) dag.data.push_back(std::move(item));

    std::map<std::string, int> app_calls;
    for (const auto& call : ast.app_calls) ++app_calls[call.app_name];
    std::map<std::string, int> app_seen;

    for (const auto& call : ast.app_calls) {
        TaskNode node;
        node.app_name = call.app_name;
        node.id = app_calls[call.app_name] == 1 ? call.app_name
                                                : fmt::format("{}#{}", call.app_name, ++app_seen[call.app_name]);
        node.procs = call.procs;
        node.complexity = call.complexity;
        node.io_ratio = call.io_ratio;
        node.location_hint = call.location_hint;
        for (const auto& i : call.inputs) node.inputs.push_back(*dag.find_data(i));
        for (const auto& o : call.outputs) node.outputs.push_back(*dag.find_data(o));
        dag.tasks.push_back(std::move(node));
    }

    auto by_id = [&dag](TaskIndex a, TaskIndex b) { return dag.tasks[a].id < dag.tasks[b].id; };

    for (TaskIndex t = 0; t < dag.tasks.size(); ++t) {
        for (DataIndex d : dag.tasks[t].outputs) dag.data[d].producer = t;
    }
    for (TaskIndex t = 0; t < dag.tasks.size(); ++t) {
        for (DataIndex d : dag.tasks[t].inputs) {
            dag.data[d].consumers.push_back(t);
            if (auto p = dag.data[d].producer) {
                dag.tasks[t].predecessors.push_back(*p);
                dag.tasks[*p].successors.push_back(t);
            }
        }
    }
    auto sort_unique = [&by_id](std::vector<TaskIndex>& v) {
        std::sort(v.begin(), v.end(), by_id);
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    for (auto& task : dag.tasks) {
        sort_unique(task.predecessors);
        sort_unique(task.successors);
    }
    for (auto& item : dag.data) {
        sort_unique(item.consumers);
        if (item.is_source()) item.actual_size = item.est_size;
    }

    // Kahn's algorithm, smallest task id first among available tasks
    std::vector<int> indegree(dag.tasks.size());
    for (TaskIndex t = 0; t < dag.tasks.size(); ++t) indegree[t] = static_cast<int>(dag.tasks[t].predecessors.size());
    auto later = [&dag](TaskIndex a, TaskIndex b) { return dag.tasks[a].id > dag.tasks[b].id; };
    std::priority_queue<TaskIndex, std::vector<TaskIndex>, decltype(later)> avail(later);
    for (TaskIndex t = 0; t < dag.tasks.size(); ++t) {
        if (indegree[t] == 0) avail.push(t);
    }
    while (!avail.empty()) {
        TaskIndex t = avail.top();
        avail.pop();
        dag.topo_order.push_back(t);
        for (TaskIndex s : dag.tasks[t].successors) {
            if (--indegree[s] == 0) avail.push(s);
        }
    }
    if (dag.topo_order.size() != dag.tasks.size()) throw CyclicDependency(find_cycle(dag, indegree));
    return dag;
}

std::vector<ByteCount> split_output_bytes(ByteCount total_in, double io_ratio, std::size_t n_outputs) {
    std::vector<ByteCount> out(n_outputs, 0);
    if (n_outputs == 0) return out;
    auto total = static_cast<ByteCount>(std::llround(io_ratio * static_cast<double>(total_in)));
    auto n = static_cast<ByteCount>(n_outputs);
    for (auto& b : out) b = total / n;
    out.front() += total % n;
    return out;
}

TaskDag propagate_sizes(TaskDag dag) {
    for (TaskIndex t : dag.topo_order) {
        const TaskNode& task = dag.tasks[t];
        auto sizes = split_output_bytes(dag.est_input_bytes(t), task.io_ratio, task.outputs.size());
        for (std::size_t i = 0; i < task.outputs.size(); ++i) dag.data[task.outputs[i]].est_size = sizes[i];
    }
    return dag;
}

SimTime estimate_duration(const ComplexityHint& complexity, ByteCount total_input_bytes) {
    if (complexity.form == ComplexityForm::Const) {
        return static_cast<SimTime>(std::llround(complexity.coefficient * kMicrosPerSecond));
    }
    // s/MB × bytes/10^6 × 10^6 µs/s
    return static_cast<SimTime>(std::llround(complexity.coefficient * static_cast<double>(total_input_bytes)));
}

double estimate_time(const TaskNode& task, ByteCount total_input_bytes) {
    return to_seconds(estimate_duration(task.complexity, total_input_bytes));
}

TaskDag estimate_times(TaskDag dag) {
    for (TaskIndex t = 0; t < dag.tasks.size(); ++t) {
        dag.tasks[t].est_time = estimate_duration(dag.tasks[t].complexity, dag.est_input_bytes(t));
    }
    return dag;
}

TaskDag compute_ranks(TaskDag dag, RankMode mode) {
    dag.rank_mode = mode;
    for (auto it = dag.topo_order.rbegin(); it != dag.topo_order.rend(); ++it) {
        TaskNode& task = dag.tasks[*it];
        SimTime best = 0;
        for (TaskIndex s : task.successors) best = std::max(best, dag.tasks[s].rank);
        task.rank = (mode == RankMode::Hops ? kMicrosPerSecond : task.est_time) + best;
    }
    return dag;
}

TaskDag earliest_start_times(TaskDag dag) {
    for (TaskIndex t : dag.topo_order) {
        SimTime best = 0;
        for (TaskIndex p : dag.tasks[t].predecessors) {
            best = std::max(best, dag.tasks[p].est_start + dag.tasks[p].est_time);
        }
        dag.tasks[t].est_start = best;
    }
    return dag;
}

TaskDag compile(const WorkflowAst& ast, RankMode mode) {
    return earliest_start_times(compute_ranks(estimate_times(propagate_sizes(build_dag(ast))), mode));
}

std::string export_dot(const TaskDag& dag) {
    std::string out = "digraph wdsl {\n";

    std::vector<TaskIndex> tasks(dag.tasks.size());
    for (TaskIndex t = 0; t < tasks.size(); ++t) tasks[t] = t;
    std::sort(tasks.begin(), tasks.end(), [&dag](TaskIndex a, TaskIndex b) { return dag.tasks[a].id < dag.tasks[b].id; });

    for (TaskIndex t : tasks) {
        const TaskNode& task = dag.tasks[t];
        std::string rank = dag.rank_mode == RankMode::Hops ? fmt::format("{}", task.rank / kMicrosPerSecond)
                                                            : fmt_seconds(task.rank) + "s";
        out += fmt::format("  \"t:{}\" [shape=box, label=\"{}\\n{} est_time={}s rank={}\"];\n", task.id, task.id,
                           task.app_name, fmt_seconds(task.est_time), rank);
    }
    for (const DataItem& item : dag.data) {
        out += fmt::format("  \"d:{}\" [shape=ellipse, label=\"{}\\n{} B\"];\n", item.id, item.id, item.est_size);
    }

    std::vector<std::string> edges;
    for (const TaskNode& task : dag.tasks) {
        for (DataIndex d : task.inputs) edges.push_back(fmt::format("  \"d:{}\" -> \"t:{}\";\n", dag.data[d].id, task.id));
        for (DataIndex d : task.outputs) edges.push_back(fmt::format("  \"t:{}\" -> \"d:{}\";\n", task.id, dag.data[d].id));
    }
    std::sort(edges.begin(), edges.end());
    for (const auto& e : edges) out += e;
    out += "}\n";
    return out;
}

nlohmann::ordered_json dag_to_json(const TaskDag& dag) {
    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    for (const TaskNode& t : dag.tasks) {
        nlohmann::ordered_json j;
        j["id"] = t.id;
        j["app_name"] = t.app_name;
        j["inputs"] = nlohmann::ordered_json::array();
        for (DataIndex d : t.inputs) j["inputs"].push_back(dag.data[d].id);
        j["outputs"] = nlohmann::ordered_json::array();
        for (DataIndex d : t.outputs) j["outputs"].push_back(dag.data[d].id);
        j["procs"] = t.procs;
        j["complexity"] = {{"form", t.complexity.form == ComplexityForm::Const ? "const" : "linear"},
                           {"coefficient", t.complexity.coefficient}};
        j["io_ratio"] = t.io_ratio;
        j["est_time_us"] = t.est_time;
        j["rank_us"] = t.rank;
        j["est_start_us"] = t.est_start;
        j["location_hint"] = t.location_hint ? nlohmann::ordered_json(*t.location_hint) : nullptr;
        tasks.push_back(std::move(j));
    }
    nlohmann::ordered_json data = nlohmann::ordered_json::array();
    for (const DataItem& d : dag.data) {
        nlohmann::ordered_json j;
        j["id"] = d.id;
        j["est_size"] = d.est_size;
        j["actual_size"] = d.actual_size ? nlohmann::ordered_json(*d.actual_size) : nullptr;
        j["producer"] = d.producer ? nlohmann::ordered_json(dag.tasks[*d.producer].id) : nullptr;
        j["consumers"] = nlohmann::ordered_json::array();
        for (TaskIndex c : d.consumers) j["consumers"].push_back(dag.tasks[c].id);
        j["location_hint"] = d.location_hint ? nlohmann::ordered_json(*d.location_hint) : nullptr;
        data.push_back(std::move(j));
    }
    nlohmann::ordered_json topo = nlohmann::ordered_json::array();
    for (TaskIndex t : dag.topo_order) topo.push_back(dag.tasks[t].id);
    return {{"rank_mode", to_string(dag.rank_mode)}, {"tasks", tasks}, {"data", data}, {"topo_order", topo}};
}

std::string to_string(RankMode mode) { return mode == RankMode::Time ? "time" : "hops"; }

std::optional<RankMode> parse_rank_mode(std::string_view text) {
    if (text == "time") return RankMode::Time;
    if (text == "hops") return RankMode::Hops;
    return std::nullopt;
}

}  // namespace wflow

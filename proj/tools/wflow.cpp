// wflow: compile hint-annotated workflows and simulate them under the
// fcfs, locality and proactive schedulers.
//
// Exit codes: 0 success, 1 input or diagnostic error, 2 usage error,
// 3 internal invariant violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "wflow/cluster.hpp"
#include "wflow/dag.hpp"
#include "wflow/parser.hpp"
#include "wflow/sim.hpp"

namespace fs = std::filesystem;
using namespace wflow;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kUsageError = 2;
constexpr int kInvariantViolation = 3;

struct InputError {
    std::string message;
};

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError{fmt::format("cannot write '{}'", path.string())};
    out << content;
}

TaskDag compile_workflow(const std::string& path, RankMode mode) {
    SourceScript script;
    try {
        script = load_script(path);
    } catch (const std::exception& e) {
        throw InputError{e.what()};
    }
    ParseResult parsed = parse(script);
    for (const auto& d : parsed.diagnostics) std::cerr << format_diagnostic(d, script.origin) << "\n";
    if (!parsed.ok()) throw InputError{fmt::format("{}: parse failed", script.origin)};

    DiagnosticList diags = validate(*parsed.ast);
    for (const auto& d : diags) std::cerr << format_diagnostic(d, script.origin) << "\n";
    if (has_errors(diags)) throw InputError{fmt::format("{}: validation failed", script.origin)};

    try {
        return compile(*parsed.ast, mode);
    } catch (const CyclicDependency& e) {
        throw InputError{fmt::format("{}: error: {}", script.origin, e.what())};
    }
}

struct SimOptions {
    std::string workflow;
    std::string cluster;
    std::string rank_mode;
    std::optional<double> theta;
    std::string out = ".";
};

ClusterSpec load_spec(const SimOptions& opts) {
    ClusterSpec spec;
    try {
        spec = load_cluster(opts.cluster);
    } catch (const std::exception& e) {
        throw InputError{e.what()};
    }
    if (!opts.rank_mode.empty()) spec.rank_mode = *parse_rank_mode(opts.rank_mode);
    if (opts.theta) spec.proactive_threshold = *opts.theta;
    return spec;
}

std::string summary_line(SchedulerKind kind, const SimReport& r) {
    return fmt::format("scheduler={} makespan={:.6f}s pfs={}B inter={}B local={}B", to_string(kind),
                       to_seconds(r.makespan), r.ledger.pfs, r.ledger.inter_node, r.ledger.local);
}

SimReport simulate_checked(const TaskDag& dag, const ClusterSpec& spec, bool& clean) {
    SimReport report;
    try {
        report = run(dag, spec);
    } catch (const SimError& e) {
        std::string msg = e.what();
        for (const auto& line : e.details()) msg += "\n  " + line;
        throw InputError{msg};
    }
    DiagnosticList violations = verify_report(report, dag, spec);
    for (const auto& v : violations) std::cerr << "invariant violation: " << v.message << "\n";
    clean = violations.empty();
    return report;
}

int cmd_compile(const std::string& workflow, const std::string& rank_mode, bool emit_dot, const std::string& out) {
    TaskDag dag = compile_workflow(workflow, parse_rank_mode(rank_mode).value_or(RankMode::Time));
    write_file(fs::path(out) / "dag.json", dag_to_json(dag).dump(2) + "\n");
    if (emit_dot) write_file(fs::path(out) / "dag.dot", export_dot(dag));

    bool hops = dag.rank_mode == RankMode::Hops;
    std::cout << fmt::format("{:<16} {:<12} {:>5} {:>14} {:>14} {:>14}\n", "task", "app", "procs", "est_time(s)",
                             hops ? "rank(hops)" : "rank(s)", "est_start(s)");
    for (TaskIndex t : dag.topo_order) {
        const TaskNode& task = dag.tasks[t];
        std::string rank = hops ? fmt::format("{}", task.rank / kMicrosPerSecond) : fmt::format("{:.6f}", to_seconds(task.rank));
        std::cout << fmt::format("{:<16} {:<12} {:>5} {:>14.6f} {:>14} {:>14.6f}\n", task.id, task.app_name, task.procs,
                                 to_seconds(task.est_time), rank, to_seconds(task.est_start));
    }
    return kOk;
}

int cmd_simulate(const SimOptions& opts, const std::string& scheduler, bool trace) {
    ClusterSpec spec = load_spec(opts);
    if (!scheduler.empty()) spec.scheduler = *parse_scheduler(scheduler);
    TaskDag dag = compile_workflow(opts.workflow, spec.rank_mode);

    bool clean = false;
    SimReport report = simulate_checked(dag, spec, clean);
    fs::path out(opts.out);
    write_file(out / "report.json", report_to_json(report).dump(2) + "\n");
    write_file(out / "timeline.csv", timeline_csv(report));
    if (trace) write_file(out / "trace.jsonl", event_log_jsonl(report));

    std::cout << summary_line(spec.scheduler, report) << "\n";
    return clean ? kOk : kInvariantViolation;
}

int cmd_compare(const SimOptions& opts, const std::vector<std::string>& schedulers) {
    ClusterSpec base = load_spec(opts);
    TaskDag dag = compile_workflow(opts.workflow, base.rank_mode);

    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    std::cout << fmt::format("{:<10} {:>16} {:>16} {:>16}\n", "scheduler", "makespan(s)", "pfs(B)", "inter_node(B)");
    bool all_clean = true;
    for (const auto& name : schedulers) {
        ClusterSpec spec = base;
        spec.scheduler = *parse_scheduler(name);
        bool clean = false;
        SimReport report = simulate_checked(dag, spec, clean);
        all_clean = all_clean && clean;
        std::cout << fmt::format("{:<10} {:>16.6f} {:>16} {:>16}\n", name, to_seconds(report.makespan), report.ledger.pfs,
                                 report.ledger.inter_node);
        runs.push_back({{"scheduler", name}, {"clean", clean}, {"report", report_to_json(report)}});
    }
    nlohmann::ordered_json doc{{"workflow", opts.workflow}, {"cluster", cluster_to_json(base)}, {"runs", runs}};
    write_file(fs::path(opts.out) / "compare.json", doc.dump(2) + "\n");
    return all_clean ? kOk : kInvariantViolation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compile and simulate hint-annotated scientific workflows"};
    app.require_subcommand(1);
    const std::vector<std::string> kSchedulers{"fcfs", "locality", "proactive"};

    std::string compile_workflow_path;
    std::string compile_rank_mode = "time";
    bool emit_dot = false;
    std::string compile_out = ".";
    auto* compile_cmd = app.add_subcommand("compile", "Build the annotated task DAG of a workflow");
    compile_cmd->add_option("--workflow,workflow", compile_workflow_path, "Workflow script (.wdsl)")->required();
    compile_cmd->add_option("--rank-mode", compile_rank_mode, "Rank weighting")->check(CLI::IsMember({"time", "hops"}));
    compile_cmd->add_flag("--emit-dot", emit_dot, "Also write dag.dot");
    compile_cmd->add_option("--out", compile_out, "Output directory");

    SimOptions sim;
    std::string scheduler;
    bool trace = false;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run one scheduler on a cluster");
    simulate_cmd->add_option("--workflow", sim.workflow, "Workflow script (.wdsl)")->required();
    simulate_cmd->add_option("--cluster", sim.cluster, "Cluster spec (JSON)")->required();
    simulate_cmd->add_option("--scheduler", scheduler, "fcfs | locality | proactive")->check(CLI::IsMember(kSchedulers));
    simulate_cmd->add_option("--rank-mode", sim.rank_mode, "Rank weighting")->check(CLI::IsMember({"time", "hops"}));
    simulate_cmd->add_option("--theta", sim.theta, "Proactive threshold")->check(CLI::Range(0.0, 1.0));
    simulate_cmd->add_flag("--trace", trace, "Also write the event log as trace.jsonl");
    simulate_cmd->add_option("--out", sim.out, "Output directory");

    SimOptions cmp;
    std::vector<std::string> compare_schedulers;
    auto* compare_cmd = app.add_subcommand("compare", "Run several schedulers on identical inputs");
    compare_cmd->add_option("--workflow", cmp.workflow, "Workflow script (.wdsl)")->required();
    compare_cmd->add_option("--cluster", cmp.cluster, "Cluster spec (JSON)")->required();
    compare_cmd->add_option("--scheduler,schedulers", compare_schedulers, "Schedulers, in table order")
        ->check(CLI::IsMember(kSchedulers))
        ->delimiter(',');
    compare_cmd->add_option("--rank-mode", cmp.rank_mode, "Rank weighting")->check(CLI::IsMember({"time", "hops"}));
    compare_cmd->add_option("--theta", cmp.theta, "Proactive threshold")->check(CLI::Range(0.0, 1.0));
    compare_cmd->add_option("--out", cmp.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (compile_cmd->parsed()) return cmd_compile(compile_workflow_path, compile_rank_mode, emit_dot, compile_out);
        if (simulate_cmd->parsed()) return cmd_simulate(sim, scheduler, trace);
        if (compare_schedulers.empty()) compare_schedulers = kSchedulers;
        return cmd_compare(cmp, compare_schedulers);
    } catch (const InputError& e) {
        std::cerr << e.message << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInvariantViolation;
    }
}

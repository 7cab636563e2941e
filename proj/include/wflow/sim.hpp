#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wflow/cluster.hpp"
#include "wflow/dag.hpp"
#include "wflow/diagnostics.hpp"
#include "wflow/schedulers.hpp"
#include "wflow/store.hpp"

namespace wflow {

enum class EventKind { InputsArrived, TaskStart, TaskEnd, TransferStart, TransferEnd, PinCreated, Warning };

struct SimEvent {
    SimTime time = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Warning;
    std::string task;
    std::string item;
    NodeId node;
    std::optional<TransferId> transfer;
    std::string message;
};

struct TaskRecord {
    std::string task;
    NodeId node;
    SimTime ready_time = 0;
    SimTime start = 0;
    SimTime end = 0;
    int procs = 1;
};

struct TransferRecord {
    std::string item;
    NodeId src;
    NodeId dst;
    ByteCount bytes = 0;
    TransferClass cls = TransferClass::Demand;
    SimTime start = 0;
    SimTime end = 0;
};

struct SimReport {
    SimTime makespan = 0;
    std::vector<TaskRecord> tasks;          // script order
    std::vector<TransferRecord> transfers;  // completion order
    ByteLedger ledger;
    std::vector<SimEvent> event_log;
};

class SimError : public std::runtime_error {
public:
    enum class Code { UnknownNode, Deadlock, InvalidSpec };

    SimError(Code code, const std::string& what, std::vector<std::string> details = {})
        : std::runtime_error(what), code_(code), details_(std::move(details)) {}

    Code code() const { return code_; }
    // For Deadlock: one line per stuck task naming what it waits for.
    const std::vector<std::string>& details() const { return details_; }

private:
    Code code_;
    std::vector<std::string> details_;
};

// Runs the DAG to completion on the cluster. Source files start on pfs
// unless hinted onto a node; outputs are written on the producing node.
// Each node and pfs has one FIFO NIC; a transfer holds both endpoint NICs
// for its whole duration, and Demand transfers queue ahead of Pipeline ones.
SimReport run(const TaskDag& dag, const ClusterSpec& spec, Scheduler& scheduler);

// Uses spec.scheduler and spec.proactive_threshold.
SimReport run(const TaskDag& dag, const ClusterSpec& spec);

// Empty iff the timeline respects precedence, slot capacity, NIC
// exclusivity, data residency at task start and ledger conservation.
DiagnosticList verify_report(const SimReport& report, const TaskDag& dag, const ClusterSpec& spec);

nlohmann::ordered_json report_to_json(const SimReport& report);
std::string timeline_csv(const SimReport& report);
std::string event_log_jsonl(const SimReport& report);

std::string to_string(EventKind kind);
std::string to_string(TransferClass cls);

}  // namespace wflow

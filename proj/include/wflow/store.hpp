#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wflow/ast.hpp"
#include "wflow/cluster.hpp"

namespace wflow {

enum class TransferClass { Demand, Pipeline };
enum class TransferState { Queued, Active, Done, Cancelled };

using TransferId = std::uint64_t;

struct FileRecord {
    std::string id;
    ByteCount size = 0;
    std::optional<NodeId> requested_location;
    std::vector<NodeId> replicas;  // insertion order, front() is the primary
    SimTime created_at = 0;
};

struct LocationRecord {
    std::string id;
    NodeId primary;
    std::vector<NodeId> replicas;
};

struct TransferHandle {
    TransferId id = 0;
    std::string item;
    NodeId src;
    NodeId dst;
    ByteCount bytes = 0;
    TransferClass cls = TransferClass::Demand;
    TransferState state = TransferState::Queued;
    bool no_op = false;
    SimTime enqueued_at = 0;
    SimTime started_at = 0;
    SimTime finished_at = 0;
};

struct ByteLedger {
    ByteCount local = 0;
    ByteCount inter_node = 0;
    ByteCount pfs = 0;

    bool operator==(const ByteLedger&) const = default;
};

class StoreError : public std::runtime_error {
public:
    enum class Code { AlreadyExists, UnknownNode, NotFound, SourceHasNoReplica, InvalidTransfer };

    StoreError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Code code() const { return code_; }

private:
    Code code_;
};

// Extended attribute holding a file's primary location.
inline constexpr std::string_view kLocationXattr = "user.wflow.location";

// In-memory model of a compute-node-side store with location-aware creation,
// a location service, per-file location xattrs and replica tracking. Transfer
// timing is owned by the simulator; the store only tracks handle state.
//
// Mutations must come from a single thread (the simulation loop).
class LocalityStore {
public:
    explicit LocalityStore(std::vector<NodeSpec> nodes);

    // Places the file at `requested` when given and capacity allows, otherwise
    // at `default_node`; a placement that would exceed a configured capacity
    // falls back to pfs and queues a warning.
    const FileRecord& create(const std::string& item, ByteCount size, const std::optional<NodeId>& requested,
                             const NodeId& default_node, SimTime now);

    LocationRecord lookup(const std::string& item) const;
    NodeId stat_location(const std::string& item) const;
    std::optional<std::string> getxattr(const std::string& item, std::string_view key) const;

    TransferHandle enqueue_transfer(const std::string& item, const NodeId& src, const NodeId& dst, TransferClass cls,
                                    SimTime now);
    // Points a still-queued transfer at another replica holder.
    void rebind_source(TransferId id, const NodeId& src);
    void start_transfer(TransferId id, SimTime now);
    // Adds dst as a replica; Pipeline transfers also make dst the primary.
    void complete_transfer(TransferId id, SimTime now);
    void cancel_transfer(TransferId id, SimTime now);

    const TransferHandle& transfer(TransferId id) const;
    const std::vector<TransferHandle>& transfers() const { return transfers_; }
    // Queued or Active transfer of item to dst, if any.
    std::optional<TransferId> in_flight(const std::string& item, const NodeId& dst) const;

    bool exists(const std::string& item) const { return files_.contains(item); }
    const FileRecord* find(const std::string& item) const;
    bool is_local(const std::string& item, const NodeId& node) const;
    bool has_node(const NodeId& node) const;

    void record_local_read(ByteCount bytes) { ledger_.local += bytes; }
    ByteLedger bytes_ledger() const { return ledger_; }
    ByteCount resident_bytes(const NodeId& node) const;

    // Location-oblivious default placement: FNV-1a(item) mod compute-node count.
    NodeId fallback_placement(const std::string& item) const;

    std::vector<std::string> take_warnings() { return std::exchange(warnings_, {}); }

private:
    FileRecord& get(const std::string& item);
    const FileRecord& get(const std::string& item) const;
    TransferHandle& handle(TransferId id);
    void set_primary(FileRecord& rec);

    std::vector<NodeSpec> nodes_;
    std::map<std::string, FileRecord> files_;
    std::map<std::string, std::map<std::string, std::string, std::less<>>> xattrs_;
    std::map<NodeId, ByteCount> resident_;
    std::vector<TransferHandle> transfers_;
    std::map<std::pair<std::string, NodeId>, TransferId> in_flight_;
    ByteLedger ledger_;
    std::vector<std::string> warnings_;
};

}  // namespace wflow

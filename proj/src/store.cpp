#include "wflow/store.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace wflow {

LocalityStore::LocalityStore(std::vector<NodeSpec> nodes) : nodes_(std::move(nodes)) {}

bool LocalityStore::has_node(const NodeId& node) const {
    return node == kPfs || std::any_of(nodes_.begin(), nodes_.end(), [&](const NodeSpec& n) { return n.name == node; });
}

FileRecord& LocalityStore::get(const std::string& item) {
    auto it = files_.find(item);
    if (it == files_.end()) throw StoreError(StoreError::Code::NotFound, fmt::format("no such file '{}'", item));
    return it->second;
}

const FileRecord& LocalityStore::get(const std::string& item) const {
    auto it = files_.find(item);
    if (it == files_.end()) throw StoreError(StoreError::Code::NotFound, fmt::format("no such file '{}'", item));
    return it->second;
}

const FileRecord* LocalityStore::find(const std::string& item) const {
    auto it = files_.find(item);
    return it == files_.end() ? nullptr : &it->second;
}

void LocalityStore::set_primary(FileRecord& rec) { xattrs_[rec.id][std::string(kLocationXattr)] = rec.replicas.front(); }

ByteCount LocalityStore::resident_bytes(const NodeId& node) const {
    auto it = resident_.find(node);
    return it == resident_.end() ? 0 : it->second;
}

const FileRecord& LocalityStore::create(const std::string& item, ByteCount size, const std::optional<NodeId>& requested,
                                        const NodeId& default_node, SimTime now) {
    if (files_.contains(item)) throw StoreError(StoreError::Code::AlreadyExists, fmt::format("file '{}' exists", item));
    for (const NodeId* n : {requested ? &*requested : nullptr, &default_node}) {
        if (n && !has_node(*n)) throw StoreError(StoreError::Code::UnknownNode, fmt::format("unknown node '{}'", *n));
    }

    NodeId target = requested ? *requested : default_node;
    if (target != kPfs) {
        const NodeSpec& spec = *std::find_if(nodes_.begin(), nodes_.end(), [&](const NodeSpec& n) { return n.name == target; });
        if (spec.capacity && resident_bytes(target) + size > *spec.capacity) {
            warnings_.push_back(fmt::format("node '{}' lacks capacity for '{}' ({} B); placed on pfs", target, item, size));
            target = kPfs;
        }
    }

    FileRecord rec{item, size, requested, {target}, now};
    resident_[target] += size;
    auto [it, _] = files_.emplace(item, std::move(rec));
    set_primary(it->second);
    return it->second;
}

LocationRecord LocalityStore::lookup(const std::string& item) const {
    const FileRecord& rec = get(item);
    return {rec.id, rec.replicas.front(), rec.replicas};
}

std::optional<std::string> LocalityStore::getxattr(const std::string& item, std::string_view key) const {
    auto f = xattrs_.find(item);
    if (f == xattrs_.end()) return std::nullopt;
    auto v = f->second.find(key);
    if (v == f->second.end()) return std::nullopt;
    return v->second;
}

NodeId LocalityStore::stat_location(const std::string& item) const {
    auto loc = getxattr(item, kLocationXattr);
    if (!loc) throw StoreError(StoreError::Code::NotFound, fmt::format("no such file '{}'", item));
    return *loc;
}

bool LocalityStore::is_local(const std::string& item, const NodeId& node) const {
    const FileRecord& rec = get(item);
    return std::find(rec.replicas.begin(), rec.replicas.end(), node) != rec.replicas.end();
}

TransferHandle& LocalityStore::handle(TransferId id) {
    if (id == 0 || id > transfers_.size()) {
        throw StoreError(StoreError::Code::InvalidTransfer, fmt::format("no transfer #{}", id));
    }
    return transfers_[id - 1];
}

const TransferHandle& LocalityStore::transfer(TransferId id) const {
    if (id == 0 || id > transfers_.size()) {
        throw StoreError(StoreError::Code::InvalidTransfer, fmt::format("no transfer #{}", id));
    }
    return transfers_[id - 1];
}

std::optional<TransferId> LocalityStore::in_flight(const std::string& item, const NodeId& dst) const {
    auto it = in_flight_.find({item, dst});
    if (it == in_flight_.end()) return std::nullopt;
    return it->second;
}

TransferHandle LocalityStore::enqueue_transfer(const std::string& item, const NodeId& src, const NodeId& dst,
                                               TransferClass cls, SimTime now) {
    const FileRecord& rec = get(item);
    if (!has_node(dst)) throw StoreError(StoreError::Code::UnknownNode, fmt::format("unknown node '{}'", dst));
    if (!is_local(item, src)) {
        throw StoreError(StoreError::Code::SourceHasNoReplica, fmt::format("'{}' has no replica of '{}'", src, item));
    }

    if (auto existing = in_flight(item, dst)) return transfer(*existing);

    TransferHandle h;
    h.id = transfers_.size() + 1;
    h.item = item;
    h.src = src;
    h.dst = dst;
    h.cls = cls;
    h.enqueued_at = now;
    if (is_local(item, dst)) {
        h.no_op = true;
        h.state = TransferState::Done;
        h.started_at = h.finished_at = now;
    } else {
        h.bytes = rec.size;
        in_flight_[{item, dst}] = h.id;
    }
    transfers_.push_back(h);
    return h;
}

void LocalityStore::rebind_source(TransferId id, const NodeId& src) {
    TransferHandle& h = handle(id);
    if (h.state != TransferState::Queued) {
        throw StoreError(StoreError::Code::InvalidTransfer, fmt::format("transfer #{} is not queued", id));
    }
    if (src == h.dst) throw StoreError(StoreError::Code::InvalidTransfer, fmt::format("transfer #{} would be a self copy", id));
    if (!is_local(h.item, src)) {
        throw StoreError(StoreError::Code::SourceHasNoReplica, fmt::format("'{}' has no replica of '{}'", src, h.item));
    }
    h.src = src;
}

void LocalityStore::start_transfer(TransferId id, SimTime now) {
    TransferHandle& h = handle(id);
    if (h.state != TransferState::Queued) {
        throw StoreError(StoreError::Code::InvalidTransfer, fmt::format("transfer #{} is not queued", id));
    }
    h.state = TransferState::Active;
    h.started_at = now;
}

void LocalityStore::complete_transfer(TransferId id, SimTime now) {
    TransferHandle& h = handle(id);
    if (h.state != TransferState::Active) {
        throw StoreError(StoreError::Code::InvalidTransfer, fmt::format("transfer #{} is not active", id));
    }
    h.state = TransferState::Done;
    h.finished_at = now;
    in_flight_.erase({h.item, h.dst});

    FileRecord& rec = get(h.item);
    auto it = std::find(rec.replicas.begin(), rec.replicas.end(), h.dst);
    if (it == rec.replicas.end()) {
        rec.replicas.push_back(h.dst);
        resident_[h.dst] += rec.size;
        it = rec.replicas.end() - 1;
    }
    if (h.cls == TransferClass::Pipeline) {
        std::rotate(rec.replicas.begin(), it, it + 1);
        set_primary(rec);
    }

    if (h.src == kPfs || h.dst == kPfs) {
        ledger_.pfs += h.bytes;
    } else {
        ledger_.inter_node += h.bytes;
    }
}

void LocalityStore::cancel_transfer(TransferId id, SimTime now) {
    TransferHandle& h = handle(id);
    if (h.state != TransferState::Queued && h.state != TransferState::Active) {
        throw StoreError(StoreError::Code::InvalidTransfer, fmt::format("transfer #{} already finished", id));
    }
    h.state = TransferState::Cancelled;
    h.finished_at = now;
    in_flight_.erase({h.item, h.dst});
}

NodeId LocalityStore::fallback_placement(const std::string& item) const {
    if (nodes_.empty()) return kPfs;
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : item) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return nodes_[hash % nodes_.size()].name;
}

}  // namespace wflow

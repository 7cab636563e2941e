#include "store_props.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include <fmt/format.h>

#include "wflow/store.hpp"

namespace wflow::testing {

namespace {

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

std::optional<std::string> check_store_sequence(Rng& rng, int steps) {
    std::vector<NodeSpec> nodes;
    int n = uniform(rng, 1, 4);
    for (int i = 0; i < n; ++i) nodes.push_back({"n" + std::to_string(i + 1), 1, 100'000'000, std::nullopt});
    std::vector<NodeId> all;
    for (const auto& node : nodes) all.push_back(node.name);
    all.push_back(kPfs);

    LocalityStore store(nodes);
    std::vector<std::string> items;
    std::map<std::string, std::set<NodeId>> seen_replicas;
    std::vector<TransferId> queued, active;
    ByteCount done_bytes = 0;
    ByteCount local_reads = 0;

    for (int step = 0; step < steps; ++step) {
        SimTime now = step;
        int op = items.empty() ? 0 : uniform(rng, 0, 5);
        if (op == 0) {
            std::string id = "f" + std::to_string(items.size());
            std::optional<NodeId> requested;
            if (uniform(rng, 0, 2) > 0) requested = all[uniform(rng, 0, static_cast<int>(all.size()) - 1)];
            NodeId def = all[uniform(rng, 0, static_cast<int>(all.size()) - 1)];
            ByteCount size = uniform(rng, 0, 1000) * 1000;
            const FileRecord& rec = store.create(id, size, requested, def, now);
            NodeId expect = requested.value_or(def);
            if (rec.replicas.front() != expect) {
                return fmt::format("create({}, requested={}) placed on {}", id, requested.value_or("-"), rec.replicas.front());
            }
            items.push_back(id);
        } else if (op == 1 || op == 2) {
            const std::string& id = items[uniform(rng, 0, static_cast<int>(items.size()) - 1)];
            LocationRecord loc = store.lookup(id);
            NodeId src = loc.replicas[uniform(rng, 0, static_cast<int>(loc.replicas.size()) - 1)];
            NodeId dst = all[uniform(rng, 0, static_cast<int>(all.size()) - 1)];
            bool was_in_flight = store.in_flight(id, dst).has_value();
            TransferHandle h = store.enqueue_transfer(id, src, dst, op == 1 ? TransferClass::Demand : TransferClass::Pipeline, now);
            if (h.no_op) {
                if (h.bytes != 0 || h.state != TransferState::Done || !store.is_local(id, dst)) {
                    return fmt::format("no-op transfer of {} to {} is not a 0-byte Done handle", id, dst);
                }
            } else if (!was_in_flight) {
                if (h.bytes != store.find(id)->size) return fmt::format("transfer of {} has wrong byte count", id);
                queued.push_back(h.id);
            }
        } else if (op == 3 && !queued.empty()) {
            std::size_t k = uniform(rng, 0, static_cast<int>(queued.size()) - 1);
            store.start_transfer(queued[k], now);
            active.push_back(queued[k]);
            queued.erase(queued.begin() + k);
        } else if (op == 4 && !active.empty()) {
            std::size_t k = uniform(rng, 0, static_cast<int>(active.size()) - 1);
            store.complete_transfer(active[k], now);
            done_bytes += store.transfer(active[k]).bytes;
            active.erase(active.begin() + k);
        } else if (op == 5) {
            if (!queued.empty() && uniform(rng, 0, 1) == 0) {
                std::size_t k = uniform(rng, 0, static_cast<int>(queued.size()) - 1);
                store.cancel_transfer(queued[k], now);
                queued.erase(queued.begin() + k);
            } else {
                ByteCount b = uniform(rng, 0, 1000);
                store.record_local_read(b);
                local_reads += b;
            }
        }

        for (const auto& id : items) {
            LocationRecord loc = store.lookup(id);
            if (store.stat_location(id) != loc.primary) return fmt::format("xattr of {} diverges from primary", id);
            if (std::find(loc.replicas.begin(), loc.replicas.end(), loc.primary) == loc.replicas.end()) {
                return fmt::format("primary of {} is not a replica", id);
            }
            std::set<NodeId> now_replicas(loc.replicas.begin(), loc.replicas.end());
            if (now_replicas.size() != loc.replicas.size()) return fmt::format("duplicate replica of {}", id);
            auto& before = seen_replicas[id];
            if (!std::includes(now_replicas.begin(), now_replicas.end(), before.begin(), before.end())) {
                return fmt::format("replica set of {} shrank", id);
            }
            before = std::move(now_replicas);
        }
        ByteLedger ledger = store.bytes_ledger();
        if (ledger.pfs + ledger.inter_node != done_bytes || ledger.local != local_reads) {
            return fmt::format("ledger {}+{} != completed bytes {}", ledger.pfs, ledger.inter_node, done_bytes);
        }
    }
    return std::nullopt;
}

}  // namespace wflow::testing

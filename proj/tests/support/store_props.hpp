#pragma once

#include <optional>
#include <string>

#include "generators.hpp"

namespace wflow::testing {

// Drives a fresh store through a random sequence of create / enqueue /
// start / complete / cancel calls on an uncapacitated cluster, checking
// after each step that:
//   - a requested location is honored at creation
//   - the location xattr equals the location service's primary
//   - replica sets never shrink and the primary is always a replica
//   - the ledger equals the bytes of all completed non-no-op transfers
// Returns a description of the first violation, if any.
std::optional<std::string> check_store_sequence(Rng& rng, int steps);

}  // namespace wflow::testing

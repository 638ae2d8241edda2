#pragma once

// Rebuilds the control center's state from a record log.

#include <cstddef>
#include <istream>
#include <vector>

#include "hems/live_state.hpp"
#include "hems/records.hpp"

namespace hems::center {

struct ReplayResult {
    LogHeader header;
    LiveState state;
    std::vector<CommandLogEntry> commands;
    std::size_t lines = 0;
};

/// Re-ingests every reading and re-applies every command in log order. An
/// empty log yields an empty installation. Throws Error(InvalidRecord) naming
/// the 1-based line of the first bad entry.
ReplayResult replay_log(std::istream& in);

}  // namespace hems::center

#include "hems/replay.hpp"

#include <memory>
#include <string>

#include "hems/control_center.hpp"

namespace hems::center {

ReplayResult replay_log(std::istream& in) {
    ReplayResult out;
    NullSink sink;
    std::unique_ptr<ControlCenter> center;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            auto entry = parse_log_line(line);
            if (auto* h = std::get_if<LogHeader>(&entry)) {
                if (center) throw Error(Errc::InvalidRecord, "second header");
                out.header = *h;
                center = std::make_unique<ControlCenter>(h->appliances, h->nodes, sink, CenterOptions{h->tick_seconds, false});
                continue;
            }
            if (!center) throw Error(Errc::InvalidRecord, "entry before the header");
            if (auto* r = std::get_if<ReadingRecord>(&entry)) {
                center->ingest(*r);
                center->advance(r->time);
            } else {
                const auto& c = std::get<CommandLogEntry>(entry);
                center->apply_logged_command(c);
                center->advance(c.time);
            }
        } catch (const Error& e) {
            throw Error(Errc::InvalidRecord, "line " + std::to_string(n) + ": " + e.what());
        }
    }
    out.lines = n;
    if (center) {
        out.state = center->live_state();
        out.commands = center->command_log();
    }
    return out;
}

}  // namespace hems::center

#include "hems/coordinator.hpp"

#include <string>

namespace hems::coordinator {

Coordinator::Coordinator(NodeId id, unsigned downlink_retries) : id_(id), retries_(downlink_retries) {}

void Coordinator::register_node(NodeId node) {
    if (node == id_) throw Error(Errc::UnknownNode, "end node cannot reuse the coordinator id");
    registered_.insert(node);
}

void Coordinator::on_radio_receive(const radio::Frame& frame, double rssi_dbm, SimTime now) {
    if (frame.dst != id_) {
        throw Error(Errc::InvalidRecord, "frame addressed to node " + std::to_string(frame.dst.value));
    }
    registered_.insert(frame.src);

    auto& c = counters_[frame.src];
    ++c.received;

    auto last = last_seq_.find(frame.src);
    if (last != last_seq_.end()) {
        // Serial-number comparison so that the 16-bit counter may wrap.
        const auto diff = static_cast<std::int16_t>(static_cast<std::uint16_t>(frame.seq - last->second));
        if (diff <= 0) {
            ++c.duplicates;
            return;
        }
        c.dropped += static_cast<std::uint64_t>(diff - 1);
        last->second = frame.seq;
    } else {
        last_seq_.emplace(frame.src, frame.seq);
    }

    ++c.forwarded;
    queue_.push_back(Forwarded{frame, rssi_dbm, now});
    if (queue_.size() > peak_depth_) peak_depth_ = queue_.size();
}

std::vector<Forwarded> Coordinator::drain_to_center() {
    std::vector<Forwarded> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
}

radio::TransmitResult Coordinator::relay_command(const radio::Frame& command, radio::ChannelModel& channel,
                                                 const LinkTable& links, SimTime now) {
    if (command.kind != radio::FrameKind::Command) {
        throw Error(Errc::WrongKind, "only command frames are relayed downlink");
    }
    auto link = links.find(command.dst);
    if (!knows(command.dst) || link == links.end()) {
        throw Error(Errc::UnknownNode, "no registered node " + std::to_string(command.dst.value));
    }
    radio::TransmitResult r = channel.transmit(link->second, command, now);
    for (unsigned attempt = 0; attempt < retries_ && !radio::delivered(r); ++attempt) {
        r = channel.transmit(link->second, command, now);
    }
    return r;
}

UplinkCounters Coordinator::counters(NodeId node) const {
    auto it = counters_.find(node);
    return it == counters_.end() ? UplinkCounters{} : it->second;
}

}  // namespace hems::coordinator

#pragma once

// Collection point of the star network. Reading frames arrive over the radio,
// are de-duplicated by (src, seq) and queued in arrival order for the control
// center; command frames from the center are relayed to the addressed node.

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "hems/domain.hpp"
#include "hems/radio.hpp"

namespace hems::coordinator {

struct Forwarded {
    radio::Frame frame;
    double rssi_dbm = 0.0;
    SimTime received_at;
};

struct UplinkCounters {
    std::uint64_t received = 0;
    std::uint64_t forwarded = 0;
    std::uint64_t duplicates = 0;
    /// Sequence numbers skipped between consecutive fresh frames (lost on air).
    std::uint64_t dropped = 0;
};

using LinkTable = std::map<NodeId, radio::RadioLink>;

class Coordinator {
public:
    explicit Coordinator(NodeId id = kCoordinatorId, unsigned downlink_retries = 0);

    NodeId id() const { return id_; }

    void register_node(NodeId node);
    bool knows(NodeId node) const { return last_seq_.contains(node) || registered_.contains(node); }

    void on_radio_receive(const radio::Frame& frame, double rssi_dbm, SimTime now);

    /// Hands every queued frame to the center, oldest first, and empties the
    /// queue. The serial link behind it is lossless and never reorders.
    std::vector<Forwarded> drain_to_center();

    /// Sends a command toward its destination node. Retries a dropped
    /// transmission up to the configured count.
    radio::TransmitResult relay_command(const radio::Frame& command, radio::ChannelModel& channel,
                                        const LinkTable& links, SimTime now);

    UplinkCounters counters(NodeId node) const;
    std::size_t queue_depth() const { return queue_.size(); }
    std::size_t peak_queue_depth() const { return peak_depth_; }

private:
    NodeId id_;
    unsigned retries_;
    std::set<NodeId> registered_;
    std::map<NodeId, std::uint16_t> last_seq_;
    std::map<NodeId, UplinkCounters> counters_;
    std::deque<Forwarded> queue_;
    std::size_t peak_depth_ = 0;
};

}  // namespace hems::coordinator

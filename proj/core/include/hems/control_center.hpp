#pragma once

// Monitoring and control center: ingests readings, persists them through a
// RecordSink, keeps the live per-appliance cache, serves history and the
// ordered event stream, and dispatches ON/OFF commands.
//
// One writer (the simulation loop) and any number of readers. Every public
// member is safe to call from any thread.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "hems/domain.hpp"
#include "hems/live_state.hpp"
#include "hems/policy.hpp"
#include "hems/radio.hpp"
#include "hems/records.hpp"

namespace hems::center {

struct CenterOptions {
    double tick_seconds = kDefaultTickSeconds;
    /// Keep every event for cursor-based stream replay.
    bool journal = true;
};

struct HistoryPoint {
    double from_s = 0.0;
    double to_s = 0.0;
    double kwh = 0.0;
    double avg_w = 0.0;
    std::uint64_t samples = 0;
};

struct StreamEvent {
    std::uint64_t cursor = 0;
    std::string type;       // "reading", "command" or "advisory"
    std::string appliance;  // empty for environment readings
    std::string line;       // record-log formatted JSON
};

struct UserCommand {
    std::uint64_t ticket = 0;
    std::string appliance;
    SwitchState action = SwitchState::Off;
    std::string session;
};

/// Carries a command frame to the node and reports what happened there.
using CommandTransport = std::function<Outcome(const radio::Frame& command, const ApplianceSpec& appliance)>;

class ControlCenter {
public:
    ControlCenter(std::vector<ApplianceSpec> appliances, std::vector<NodeInfo> nodes, RecordSink& sink,
                  CenterOptions options = {});

    const std::vector<ApplianceSpec>& appliances() const { return appliances_; }
    const ApplianceSpec& appliance(std::string_view name) const;
    bool has_appliance(std::string_view name) const;
    double tick_seconds() const { return options_.tick_seconds; }

    /// Writes the installation header as the first log entry.
    void write_header();

    /// Validates, persists, updates the live cache and publishes one stream
    /// event. Returns the event cursor. Nothing changes if persisting fails.
    std::uint64_t ingest(const ReadingRecord& record);

    /// Moves the clock and closes the tick batch in the sink.
    void advance(SimTime now);

    LiveState live_state() const;

    template <typename F>
    decltype(auto) with_live_state(F&& f) const {
        std::shared_lock lock(mutex_);
        return std::forward<F>(f)(live_);
    }

    /// Window [from_s, to_s) split into ceil(width / resolution) buckets.
    std::vector<HistoryPoint> query_history(std::string_view appliance, double from_s, double to_s,
                                            double resolution_s) const;

    /// Queues a user command for the next tick and returns its ticket.
    std::uint64_t submit_user_command(const std::string& appliance, SwitchState action, const std::string& session);
    std::vector<UserCommand> drain_user_commands();

    CommandLogEntry dispatch(const std::string& appliance, SwitchState action, const Origin& origin, SimTime now,
                             const CommandTransport& transport, std::uint64_t ticket = 0);

    /// User commands first; rule actions on an appliance a user already
    /// commanded this tick are logged as Superseded and not sent.
    std::vector<CommandLogEntry> dispatch_tick(SimTime now, std::span<const UserCommand> user,
                                               std::span<const policy::IntendedAction> rules,
                                               const CommandTransport& transport);

    /// Logs a switch flipped by hand at the appliance.
    void record_manual_switch(const std::string& appliance, SwitchState state, SimTime now);
    void notify_advisory(const policy::IntendedAction& advice, SimTime now);

    /// Re-applies a command read back from a log.
    void apply_logged_command(const CommandLogEntry& entry);

    std::vector<CommandLogEntry> command_log() const;
    std::optional<CommandLogEntry> command_outcome(std::uint64_t ticket) const;
    std::optional<CommandLogEntry> wait_command_outcome(std::uint64_t ticket, std::chrono::milliseconds timeout) const;

    std::uint64_t event_count() const;
    std::vector<StreamEvent> events_since(std::uint64_t cursor, std::size_t max = SIZE_MAX) const;
    /// Blocks until an event with index >= cursor exists or the timeout passes.
    bool wait_events(std::uint64_t cursor, std::chrono::milliseconds timeout) const;

    using Subscriber = std::function<void(const StreamEvent&)>;
    int subscribe(Subscriber fn);
    void unsubscribe(int id);

    std::uint64_t persisted(NodeId node) const;
    std::uint64_t advisories() const;

private:
    struct HistoryEntry {
        std::uint64_t tick;
        double power_w;
        double energy_kwh;
    };

    std::size_t index_of(std::string_view appliance) const;
    void publish_locked(StreamEvent ev, std::vector<StreamEvent>& out);
    void deliver(const std::vector<StreamEvent>& events);
    CommandLogEntry log_command_locked(CommandLogEntry entry, std::vector<StreamEvent>& out);

    std::vector<ApplianceSpec> appliances_;
    std::map<NodeId, NodeKind> nodes_;
    std::map<NodeId, std::size_t> appliance_by_node_;
    RecordSink& sink_;
    CenterOptions options_;

    mutable std::shared_mutex mutex_;
    mutable std::condition_variable_any changed_;
    LiveState live_;
    std::vector<std::vector<HistoryEntry>> history_;
    std::map<NodeId, std::uint64_t> persisted_;
    std::vector<CommandLogEntry> commands_;
    std::map<std::uint64_t, std::size_t> command_by_ticket_;
    std::deque<StreamEvent> journal_;
    std::uint64_t events_ = 0;
    std::uint64_t advisories_ = 0;
    std::uint16_t downlink_seq_ = 0;

    std::mutex inbox_mutex_;
    std::vector<UserCommand> inbox_;
    std::atomic<std::uint64_t> next_ticket_{1};

    std::mutex subscribers_mutex_;
    std::map<int, Subscriber> subscribers_;
    int next_subscriber_ = 1;
};

}  // namespace hems::center

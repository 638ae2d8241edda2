#include "hems/control_center.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "hems/sensors.hpp"

namespace hems::center {

ControlCenter::ControlCenter(std::vector<ApplianceSpec> appliances, std::vector<NodeInfo> nodes, RecordSink& sink,
                             CenterOptions options)
    : appliances_(std::move(appliances)), sink_(sink), options_(options) {
    if (!(options_.tick_seconds > 0.0)) throw Error(Errc::Config, "tick length must be > 0");
    for (const auto& n : nodes) {
        if (n.id == kCoordinatorId) throw Error(Errc::Config, "node id 0 is reserved for the coordinator");
        if (!nodes_.emplace(n.id, n.kind).second) {
            throw Error(Errc::Config, "duplicate node id " + std::to_string(n.id.value));
        }
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < appliances_.size(); ++i) {
        const auto& a = appliances_[i];
        auto kind = nodes_.find(a.node);
        if (kind == nodes_.end()) throw Error(Errc::UnknownNode, "appliance '" + a.name + "' sits on an undeclared node");
        validate_appliance(a, kind->second);
        if (!names.insert(a.name).second) throw Error(Errc::Config, "duplicate appliance '" + a.name + "'");
        if (!appliance_by_node_.emplace(a.node, i).second) {
            throw Error(Errc::Config, "two appliances share node " + std::to_string(a.node.value));
        }
        live_.appliances.push_back(ApplianceLive{a.name, a.node, std::nullopt, 0.0, 0.0, std::nullopt, 0});
    }
    live_.tick_seconds = options_.tick_seconds;
    history_.resize(appliances_.size());
}

std::size_t ControlCenter::index_of(std::string_view appliance) const {
    for (std::size_t i = 0; i < appliances_.size(); ++i) {
        if (appliances_[i].name == appliance) return i;
    }
    throw Error(Errc::UnknownAppliance, "unknown appliance '" + std::string(appliance) + "'");
}

const ApplianceSpec& ControlCenter::appliance(std::string_view name) const { return appliances_[index_of(name)]; }

bool ControlCenter::has_appliance(std::string_view name) const {
    return std::any_of(appliances_.begin(), appliances_.end(), [&](const auto& a) { return a.name == name; });
}

void ControlCenter::write_header() {
    LogHeader h;
    h.tick_seconds = options_.tick_seconds;
    h.appliances = appliances_;
    for (const auto& [id, kind] : nodes_) h.nodes.push_back({id, kind});
    std::unique_lock lock(mutex_);
    try {
        sink_.append(h);
    } catch (const std::exception& e) {
        throw Error(Errc::StorageFailure, e.what());
    }
}

void ControlCenter::publish_locked(StreamEvent ev, std::vector<StreamEvent>& out) {
    ev.cursor = events_++;
    live_.cursor = events_;
    if (options_.journal) journal_.push_back(ev);
    out.push_back(std::move(ev));
}

void ControlCenter::deliver(const std::vector<StreamEvent>& events) {
    changed_.notify_all();
    if (events.empty()) return;
    std::lock_guard lock(subscribers_mutex_);
    for (const auto& ev : events) {
        for (auto& [_, fn] : subscribers_) fn(ev);
    }
}

std::uint64_t ControlCenter::ingest(const ReadingRecord& record) {
    validate(record);
    auto node = nodes_.find(record.node);
    if (node == nodes_.end()) throw Error(Errc::UnknownNode, "reading from undeclared node " + std::to_string(record.node.value));
    if (node->second != record.kind) throw Error(Errc::InvalidRecord, "reading kind does not match the node");

    std::vector<StreamEvent> out;
    std::uint64_t cursor = 0;
    {
        std::unique_lock lock(mutex_);
        std::string appliance_name;
        auto app = appliance_by_node_.find(record.node);
        if (const auto* e = std::get_if<ElectricalSample>(&record.payload); e && app != appliance_by_node_.end()) {
            const auto& prev = live_.appliances[app->second];
            if (prev.updated && e->energy_kwh + 1e-9 < prev.energy_kwh) {
                throw Error(Errc::InvalidRecord, "cumulative energy went backwards for node " +
                                                     std::to_string(record.node.value));
            }
        }

        try {
            sink_.append(record);
        } catch (const std::exception& e) {
            throw Error(Errc::StorageFailure, e.what());
        }

        if (const auto* e = std::get_if<ElectricalSample>(&record.payload)) {
            if (app != appliance_by_node_.end()) {
                auto& a = live_.appliances[app->second];
                a.power_w = e->power_w;
                a.energy_kwh = e->energy_kwh;
                a.state = e->power_w > 0.0 ? SwitchState::On : SwitchState::Off;
                a.updated = record.time;
                ++a.readings;
                history_[app->second].push_back({record.time.ticks, e->power_w, e->energy_kwh});
                appliance_name = a.name;
            }
        } else {
            const auto& s = std::get<EnvironmentSample>(record.payload);
            auto& env = live_.environment;
            switch (record.kind) {
            case NodeKind::TemperatureHumidity:
                env.temperature_c = s.temperature_c;
                env.humidity_pct = s.humidity_pct;
                break;
            case NodeKind::Luminosity: env.luminosity_lux = s.luminosity_lux; break;
            case NodeKind::Presence:
                if (!env.presence || *env.presence != s.presence) env.presence_since = record.time;
                env.presence = s.presence;
                break;
            case NodeKind::EnergyConsumption: break;
            }
            env.updated = record.time;
        }
        ++persisted_[record.node];
        if (record.time > live_.as_of) live_.as_of = record.time;

        cursor = events_;
        publish_locked(StreamEvent{0, "reading", appliance_name, to_log_line(record)}, out);
    }
    deliver(out);
    return cursor;
}

void ControlCenter::advance(SimTime now) {
    {
        std::unique_lock lock(mutex_);
        if (now > live_.as_of) live_.as_of = now;
        try {
            sink_.flush();
        } catch (const std::exception& e) {
            throw Error(Errc::StorageFailure, e.what());
        }
    }
    changed_.notify_all();
}

LiveState ControlCenter::live_state() const {
    std::shared_lock lock(mutex_);
    return live_;
}

std::vector<HistoryPoint> ControlCenter::query_history(std::string_view appliance, double from_s, double to_s,
                                                       double resolution_s) const {
    const std::size_t idx = index_of(appliance);
    if (!(resolution_s > 0.0) || !(to_s >= from_s) || from_s < 0.0) {
        throw Error(Errc::InvalidRecord, "history window must satisfy 0 <= from <= to and resolution > 0");
    }
    std::vector<HistoryPoint> out;
    if (to_s == from_s) return out;

    std::shared_lock lock(mutex_);
    const auto& h = history_[idx];
    const double tick = options_.tick_seconds;

    // Cumulative energy metered up to time x: the last reading whose tick
    // closed at or before x.
    auto energy_upto = [&](double x) {
        auto it = std::upper_bound(h.begin(), h.end(), x, [&](double t, const HistoryEntry& e) {
            return t < static_cast<double>(e.tick + 1) * tick;
        });
        return it == h.begin() ? 0.0 : std::prev(it)->energy_kwh;
    };
    auto count_between = [&](double a, double b) {
        auto lo = std::lower_bound(h.begin(), h.end(), a,
                                   [&](const HistoryEntry& e, double t) { return static_cast<double>(e.tick) * tick < t; });
        auto hi = std::lower_bound(h.begin(), h.end(), b,
                                   [&](const HistoryEntry& e, double t) { return static_cast<double>(e.tick) * tick < t; });
        return static_cast<std::uint64_t>(hi - lo);
    };

    const auto buckets = static_cast<std::size_t>(std::ceil((to_s - from_s) / resolution_s));
    out.reserve(buckets);
    for (std::size_t k = 0; k < buckets; ++k) {
        const double a = from_s + static_cast<double>(k) * resolution_s;
        const double b = std::min(to_s, a + resolution_s);
        HistoryPoint p;
        p.from_s = a;
        p.to_s = b;
        p.kwh = energy_upto(b) - energy_upto(a);
        p.avg_w = p.kwh * 3.6e6 / (b - a);
        p.samples = count_between(a, b);
        out.push_back(p);
    }
    return out;
}

std::uint64_t ControlCenter::submit_user_command(const std::string& appliance, SwitchState action,
                                                 const std::string& session) {
    if (!has_appliance(appliance)) throw Error(Errc::UnknownAppliance, "unknown appliance '" + appliance + "'");
    const std::uint64_t ticket = next_ticket_++;
    std::lock_guard lock(inbox_mutex_);
    inbox_.push_back(UserCommand{ticket, appliance, action, session});
    return ticket;
}

std::vector<UserCommand> ControlCenter::drain_user_commands() {
    std::lock_guard lock(inbox_mutex_);
    std::vector<UserCommand> out;
    out.swap(inbox_);
    return out;
}

CommandLogEntry ControlCenter::log_command_locked(CommandLogEntry entry, std::vector<StreamEvent>& out) {
    try {
        sink_.append(entry);
    } catch (const std::exception& e) {
        throw Error(Errc::StorageFailure, e.what());
    }
    if (entry.outcome == Outcome::Delivered && entry.origin.kind != OriginKind::Manual) {
        auto& a = live_.appliances[index_of(entry.appliance)];
        a.state = entry.action;
        if (entry.action == SwitchState::Off) a.power_w = 0.0;
    }
    command_by_ticket_[entry.ticket] = commands_.size();
    commands_.push_back(entry);
    publish_locked(StreamEvent{0, "command", entry.appliance, to_log_line(entry)}, out);
    return entry;
}

CommandLogEntry ControlCenter::dispatch(const std::string& appliance, SwitchState action, const Origin& origin,
                                        SimTime now, const CommandTransport& transport, std::uint64_t ticket) {
    const auto& spec = appliances_[index_of(appliance)];
    if (ticket == 0) ticket = next_ticket_++;

    radio::Frame frame;
    {
        std::unique_lock lock(mutex_);
        frame = radio::Frame{kCoordinatorId, spec.node, downlink_seq_++, radio::FrameKind::Command,
                             sensors::encode_command(action)};
    }
    const Outcome outcome = transport(frame, spec);

    std::vector<StreamEvent> out;
    CommandLogEntry entry{ticket, now, spec.name, spec.node, action, origin, outcome};
    {
        std::unique_lock lock(mutex_);
        entry = log_command_locked(std::move(entry), out);
    }
    deliver(out);
    return entry;
}

std::vector<CommandLogEntry> ControlCenter::dispatch_tick(SimTime now, std::span<const UserCommand> user,
                                                          std::span<const policy::IntendedAction> rules,
                                                          const CommandTransport& transport) {
    std::vector<CommandLogEntry> entries;
    std::set<std::string> commanded;
    for (const auto& u : user) {
        if (!has_appliance(u.appliance)) continue;
        entries.push_back(dispatch(u.appliance, u.action, Origin{OriginKind::User, u.session}, now, transport, u.ticket));
        commanded.insert(u.appliance);
    }
    for (const auto& r : rules) {
        const Origin origin{OriginKind::Rule, r.rule_id};
        if (commanded.contains(r.appliance)) {
            const auto& spec = appliances_[index_of(r.appliance)];
            std::vector<StreamEvent> out;
            {
                std::unique_lock lock(mutex_);
                entries.push_back(log_command_locked(
                    CommandLogEntry{next_ticket_++, now, spec.name, spec.node, r.action, origin, Outcome::Superseded}, out));
            }
            deliver(out);
            continue;
        }
        entries.push_back(dispatch(r.appliance, r.action, origin, now, transport));
    }
    return entries;
}

void ControlCenter::record_manual_switch(const std::string& appliance, SwitchState state, SimTime now) {
    const auto& spec = appliances_[index_of(appliance)];
    std::vector<StreamEvent> out;
    {
        std::unique_lock lock(mutex_);
        log_command_locked(CommandLogEntry{next_ticket_++, now, spec.name, spec.node, state,
                                           Origin{OriginKind::Manual, "local"}, Outcome::Delivered},
                           out);
    }
    deliver(out);
}

void ControlCenter::notify_advisory(const policy::IntendedAction& advice, SimTime now) {
    nlohmann::ordered_json j = {{"ts", now.ticks},
                                {"kind", "advisory"},
                                {"rule", advice.rule_id},
                                {"appliance", advice.appliance},
                                {"action", to_string(advice.action)}};
    std::vector<StreamEvent> out;
    {
        std::unique_lock lock(mutex_);
        ++advisories_;
        publish_locked(StreamEvent{0, "advisory", advice.appliance, j.dump()}, out);
    }
    deliver(out);
}

void ControlCenter::apply_logged_command(const CommandLogEntry& entry) {
    index_of(entry.appliance);
    std::vector<StreamEvent> out;
    {
        std::unique_lock lock(mutex_);
        log_command_locked(entry, out);
        if (entry.ticket >= next_ticket_) next_ticket_ = entry.ticket + 1;
    }
    deliver(out);
}

std::vector<CommandLogEntry> ControlCenter::command_log() const {
    std::shared_lock lock(mutex_);
    return commands_;
}

std::optional<CommandLogEntry> ControlCenter::command_outcome(std::uint64_t ticket) const {
    std::shared_lock lock(mutex_);
    auto it = command_by_ticket_.find(ticket);
    if (it == command_by_ticket_.end()) return std::nullopt;
    return commands_[it->second];
}

std::optional<CommandLogEntry> ControlCenter::wait_command_outcome(std::uint64_t ticket,
                                                                   std::chrono::milliseconds timeout) const {
    std::shared_lock lock(mutex_);
    const bool ok = changed_.wait_for(lock, timeout, [&] { return command_by_ticket_.contains(ticket); });
    if (!ok) return std::nullopt;
    return commands_[command_by_ticket_.at(ticket)];
}

std::uint64_t ControlCenter::event_count() const {
    std::shared_lock lock(mutex_);
    return events_;
}

std::vector<StreamEvent> ControlCenter::events_since(std::uint64_t cursor, std::size_t max) const {
    std::shared_lock lock(mutex_);
    std::vector<StreamEvent> out;
    for (auto i = cursor; i < journal_.size() && out.size() < max; ++i) out.push_back(journal_[i]);
    return out;
}

bool ControlCenter::wait_events(std::uint64_t cursor, std::chrono::milliseconds timeout) const {
    std::shared_lock lock(mutex_);
    return changed_.wait_for(lock, timeout, [&] { return events_ > cursor; });
}

int ControlCenter::subscribe(Subscriber fn) {
    std::lock_guard lock(subscribers_mutex_);
    const int id = next_subscriber_++;
    subscribers_.emplace(id, std::move(fn));
    return id;
}

void ControlCenter::unsubscribe(int id) {
    std::lock_guard lock(subscribers_mutex_);
    subscribers_.erase(id);
}

std::uint64_t ControlCenter::persisted(NodeId node) const {
    std::shared_lock lock(mutex_);
    auto it = persisted_.find(node);
    return it == persisted_.end() ? 0 : it->second;
}

std::uint64_t ControlCenter::advisories() const {
    std::shared_lock lock(mutex_);
    return advisories_;
}

}  // namespace hems::center

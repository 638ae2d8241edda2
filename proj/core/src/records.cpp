#include "hems/records.hpp"

#include <json.hpp>

namespace hems::center {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kLogFormat = "hems-record-log/1";

}  // namespace

void validate(const ReadingRecord& record) {
    const bool electrical = std::holds_alternative<ElectricalSample>(record.payload);
    if (electrical != (record.kind == NodeKind::EnergyConsumption)) {
        throw Error(Errc::InvalidRecord, "payload does not match node kind " + std::string(hems::to_string(record.kind)));
    }
    if (electrical) {
        validate(std::get<ElectricalSample>(record.payload));
    } else {
        validate(std::get<EnvironmentSample>(record.payload));
    }
}

std::string_view to_string(OriginKind k) {
    switch (k) {
    case OriginKind::Rule: return "rule";
    case OriginKind::User: return "user";
    case OriginKind::Manual: return "manual";
    }
    return "unknown";
}

std::string_view to_string(Outcome o) {
    switch (o) {
    case Outcome::Delivered: return "delivered";
    case Outcome::Dropped: return "dropped";
    case Outcome::OverCurrent: return "overcurrent";
    case Outcome::Superseded: return "superseded";
    }
    return "unknown";
}

namespace {

OriginKind origin_from(std::string_view s) {
    if (s == "rule") return OriginKind::Rule;
    if (s == "user") return OriginKind::User;
    if (s == "manual") return OriginKind::Manual;
    throw Error(Errc::InvalidRecord, "unknown command origin '" + std::string(s) + "'");
}

Outcome outcome_from(std::string_view s) {
    for (auto o : {Outcome::Delivered, Outcome::Dropped, Outcome::OverCurrent, Outcome::Superseded}) {
        if (to_string(o) == s) return o;
    }
    throw Error(Errc::InvalidRecord, "unknown command outcome '" + std::string(s) + "'");
}

ojson header_json(const LogHeader& h) {
    ojson apps = ojson::array();
    for (const auto& a : h.appliances) {
        apps.push_back({{"name", a.name},
                        {"manufacturer", a.manufacturer},
                        {"model", a.model},
                        {"rated_w", a.rated_power_w},
                        {"effective_w", a.effective_power_w},
                        {"power_factor", a.power_factor},
                        {"node", a.node.value}});
    }
    ojson nodes = ojson::array();
    for (const auto& n : h.nodes) nodes.push_back({{"id", n.id.value}, {"kind", hems::to_string(n.kind)}});
    return {{"format", kLogFormat}, {"tick_seconds", h.tick_seconds}, {"appliances", apps}, {"nodes", nodes}};
}

ojson payload_json(const ReadingRecord& r) {
    if (const auto* e = std::get_if<ElectricalSample>(&r.payload)) {
        return {{"current_a", e->current_a},
                {"voltage_v", e->voltage_v},
                {"power_factor", e->power_factor},
                {"power_w", e->power_w},
                {"energy_kwh", e->energy_kwh}};
    }
    const auto& s = std::get<EnvironmentSample>(r.payload);
    return {{"temperature_c", s.temperature_c},
            {"humidity_pct", s.humidity_pct},
            {"luminosity_lux", s.luminosity_lux},
            {"presence", s.presence}};
}

struct Visitor {
    ojson operator()(const LogHeader& h) const {
        return {{"ts", 0}, {"node", 0}, {"kind", "header"}, {"payload", header_json(h)}, {"rssi", nullptr}};
    }
    ojson operator()(const ReadingRecord& r) const {
        return {{"ts", r.time.ticks},
                {"node", r.node.value},
                {"kind", hems::to_string(r.kind)},
                {"payload", payload_json(r)},
                {"rssi", r.rssi_dbm}};
    }
    ojson operator()(const CommandLogEntry& c) const {
        return {{"ts", c.time.ticks},
                {"node", c.node.value},
                {"kind", "command"},
                {"payload",
                 {{"ticket", c.ticket},
                  {"appliance", c.appliance},
                  {"action", hems::to_string(c.action)},
                  {"origin", to_string(c.origin.kind)},
                  {"origin_id", c.origin.id},
                  {"outcome", to_string(c.outcome)}}},
                {"rssi", nullptr}};
    }
};

NodeId node_of(const ojson& j) {
    const auto v = j.get<unsigned>();
    if (v > 255) throw Error(Errc::InvalidRecord, "node id out of range");
    return NodeId{static_cast<std::uint8_t>(v)};
}

}  // namespace

std::string to_log_line(const LogEntry& entry) { return std::visit(Visitor{}, entry).dump(); }

LogEntry parse_log_line(std::string_view line) {
    try {
        const auto j = ojson::parse(line);
        if (!j.is_object()) throw Error(Errc::InvalidRecord, "log line is not an object");
        const auto kind = j.at("kind").get<std::string>();
        const auto& p = j.at("payload");

        if (kind == "header") {
            if (p.at("format").get<std::string>() != kLogFormat) throw Error(Errc::InvalidRecord, "unsupported log format");
            LogHeader h;
            h.tick_seconds = p.at("tick_seconds").get<double>();
            for (const auto& a : p.at("appliances")) {
                ApplianceSpec s;
                s.name = a.at("name").get<std::string>();
                s.manufacturer = a.at("manufacturer").get<std::string>();
                s.model = a.at("model").get<std::string>();
                s.rated_power_w = a.at("rated_w").get<double>();
                s.effective_power_w = a.at("effective_w").get<double>();
                s.power_factor = a.at("power_factor").get<double>();
                s.node = node_of(a.at("node"));
                h.appliances.push_back(std::move(s));
            }
            for (const auto& n : p.at("nodes")) {
                h.nodes.push_back({node_of(n.at("id")), node_kind_from_string(n.at("kind").get<std::string>())});
            }
            return h;
        }

        if (kind == "command") {
            CommandLogEntry c;
            c.time = SimTime{j.at("ts").get<std::uint64_t>()};
            c.node = node_of(j.at("node"));
            c.ticket = p.at("ticket").get<std::uint64_t>();
            c.appliance = p.at("appliance").get<std::string>();
            c.action = switch_state_from_string(p.at("action").get<std::string>());
            c.origin = {origin_from(p.at("origin").get<std::string>()), p.at("origin_id").get<std::string>()};
            c.outcome = outcome_from(p.at("outcome").get<std::string>());
            return c;
        }

        ReadingRecord r;
        r.kind = node_kind_from_string(kind);
        r.time = SimTime{j.at("ts").get<std::uint64_t>()};
        r.node = node_of(j.at("node"));
        r.rssi_dbm = j.at("rssi").get<double>();
        if (r.kind == NodeKind::EnergyConsumption) {
            ElectricalSample e;
            e.current_a = p.at("current_a").get<double>();
            e.voltage_v = p.at("voltage_v").get<double>();
            e.power_factor = p.at("power_factor").get<double>();
            e.power_w = p.at("power_w").get<double>();
            e.energy_kwh = p.at("energy_kwh").get<double>();
            r.payload = e;
        } else {
            EnvironmentSample s;
            s.temperature_c = p.at("temperature_c").get<double>();
            s.humidity_pct = p.at("humidity_pct").get<double>();
            s.luminosity_lux = p.at("luminosity_lux").get<double>();
            s.presence = p.at("presence").get<bool>();
            r.payload = s;
        }
        validate(r);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidRecord, std::string("malformed log line: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::InvalidRecord) throw;
        throw Error(Errc::InvalidRecord, e.what());
    }
}

void MemorySink::append(const LogEntry& entry) {
    if (fail_after_ == 0) throw Error(Errc::StorageFailure, "memory sink refused the write");
    if (fail_after_ != SIZE_MAX) --fail_after_;
    lines_.push_back(to_log_line(entry));
}

FileLog::FileLog(const std::string& path) : path_(path), out_(path, std::ios::out | std::ios::trunc) {
    if (!out_) throw Error(Errc::StorageFailure, "cannot open record log '" + path + "'");
}

void FileLog::append(const LogEntry& entry) {
    out_ << to_log_line(entry) << '\n';
    if (!out_) throw Error(Errc::StorageFailure, "write to '" + path_ + "' failed");
    dirty_ = true;
}

void FileLog::flush() {
    if (!dirty_) return;
    out_.flush();
    if (!out_) throw Error(Errc::StorageFailure, "flush of '" + path_ + "' failed");
    dirty_ = false;
}

}  // namespace hems::center

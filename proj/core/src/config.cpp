#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hems/experiment.hpp"

namespace hems::experiment {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw Error(Errc::Config, path + ": " + msg); }

std::string at(const std::string& path, std::string_view key) { return path.empty() ? std::string(key) : path + "." + std::string(key); }
std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& require(const json& obj, const std::string& path, std::string_view key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(at(path, key), "missing");
    return *it;
}

double number(const json& obj, const std::string& path, std::string_view key, std::optional<double> fallback = {}) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (fallback) return *fallback;
        fail(at(path, key), "missing");
    }
    if (!it->is_number()) fail(at(path, key), "must be a number");
    return it->get<double>();
}

std::uint64_t count(const json& obj, const std::string& path, std::string_view key, std::uint64_t fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number_unsigned()) fail(at(path, key), "must be a non-negative integer");
    return it->get<std::uint64_t>();
}

std::string text(const json& obj, const std::string& path, std::string_view key, std::optional<std::string> fallback = {}) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (fallback) return *fallback;
        fail(at(path, key), "missing");
    }
    if (!it->is_string()) fail(at(path, key), "must be a string");
    return it->get<std::string>();
}

bool flag(const json& obj, const std::string& path, std::string_view key, bool fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_boolean()) fail(at(path, key), "must be true or false");
    return it->get<bool>();
}

const json& array(const json& obj, const std::string& path, std::string_view key) {
    static const json empty = json::array();
    auto it = obj.find(key);
    if (it == obj.end()) return empty;
    if (!it->is_array()) fail(at(path, key), "must be an array");
    return *it;
}

int clock(const json& obj, const std::string& path, std::string_view key) {
    const auto s = text(obj, path, key);
    try {
        return profiles::parse_clock(s);
    } catch (const Error& e) {
        fail(at(path, key), e.what());
    }
}

NodeId node_id(const json& obj, const std::string& path, std::string_view key) {
    const auto v = count(obj, path, key, 256);
    if (v == 0 || v > 255) fail(at(path, key), "must be an end-node id in 1..255");
    return NodeId{static_cast<std::uint8_t>(v)};
}

std::vector<int> days(const json& obj, const std::string& path) {
    std::vector<int> out;
    if (auto it = obj.find("day"); it != obj.end()) {
        if (!it->is_number_integer()) fail(at(path, "day"), "must be an integer 0..6");
        out.push_back(it->get<int>());
    }
    for (std::size_t i = 0; const auto& d : array(obj, path, "days")) {
        if (!d.is_number_integer()) fail(idx(at(path, "days"), i), "must be an integer 0..6");
        out.push_back(d.get<int>());
        ++i;
    }
    if (out.empty()) fail(path, "needs 'day' or 'days'");
    for (int d : out) {
        if (d < 0 || d > 6) fail(at(path, "days"), "day must be 0..6");
    }
    return out;
}

std::array<double, 24> hourly(const json& obj, const std::string& path, std::string_view key, double fallback) {
    std::array<double, 24> out;
    out.fill(fallback);
    auto it = obj.find(key);
    if (it == obj.end()) return out;
    if (!it->is_array() || it->size() != 24) fail(at(path, key), "must be an array of 24 hourly values");
    for (std::size_t h = 0; h < 24; ++h) {
        if (!(*it)[h].is_number()) fail(idx(at(path, key), h), "must be a number");
        out[h] = (*it)[h].get<double>();
    }
    return out;
}

policy::Condition parse_condition(const json& c, const std::string& path) {
    if (!c.is_object()) fail(path, "must be an object");
    if (c.contains("presence")) {
        policy::PresenceFor p;
        p.present = flag(c, path, "presence", false);
        p.seconds = number(c, path, "for_s", 0.0);
        return p;
    }
    if (c.contains("time")) {
        const auto& w = require(c, path, "time");
        return policy::TimeWindow{clock(w, at(path, "time"), "from"), clock(w, at(path, "time"), "to")};
    }
    policy::Threshold t;
    const auto q = text(c, path, "quantity");
    if (q == "temperature") t.quantity = policy::Quantity::Temperature;
    else if (q == "humidity") t.quantity = policy::Quantity::Humidity;
    else if (q == "luminosity") t.quantity = policy::Quantity::Luminosity;
    else if (q == "power") t.quantity = policy::Quantity::Power;
    else fail(at(path, "quantity"), "unknown quantity '" + q + "'");
    if (t.quantity == policy::Quantity::Power) t.appliance = text(c, path, "appliance");
    const bool least = c.contains("at_least");
    const bool most = c.contains("at_most");
    if (least == most) fail(path, "needs exactly one of 'at_least' or 'at_most'");
    t.comparison = least ? policy::Comparison::AtLeast : policy::Comparison::AtMost;
    t.value = number(c, path, least ? "at_least" : "at_most");
    t.band = number(c, path, "band", 0.0);
    return t;
}

}  // namespace

std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::Offline: return "offline";
    case Mode::OnlineCalibrated: return "online-calibrated";
    case Mode::OnlineEmergent: return "online-emergent";
    }
    return "unknown";
}

Mode mode_from_string(std::string_view s) {
    for (auto m : {Mode::Offline, Mode::OnlineCalibrated, Mode::OnlineEmergent}) {
        if (to_string(m) == s) return m;
    }
    throw Error(Errc::Config, "mode: unknown mode '" + std::string(s) + "'");
}

const ApplianceConfig* ExperimentConfig::find_appliance(std::string_view name) const {
    for (const auto& a : appliances) {
        if (a.spec.name == name) return &a;
    }
    return nullptr;
}

const profiles::UsageProfile* ExperimentConfig::find_usage(std::string_view appliance) const {
    for (const auto& u : usage) {
        if (u.appliance == appliance) return &u;
    }
    return nullptr;
}

ExperimentConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail("config", std::string("not valid JSON: ") + e.what());
    }
    if (!root.is_object()) fail("config", "top level must be an object");

    ExperimentConfig cfg;
    const std::string top;
    cfg.tick_seconds = number(root, top, "tick_seconds", kDefaultTickSeconds);
    cfg.duration_ticks = count(root, top, "duration_ticks", kSecondsPerWeek);
    cfg.report_interval_ticks = count(root, top, "report_interval_ticks", 1);
    cfg.seed = count(root, top, "seed", 1);
    cfg.downlink_retries = static_cast<unsigned>(count(root, top, "downlink_retries", 0));
    try {
        cfg.mode = mode_from_string(text(root, top, "mode", std::string("offline")));
    } catch (const Error& e) {
        fail("mode", e.what());
    }

    for (std::size_t i = 0; const auto& n : array(root, top, "nodes")) {
        const auto path = idx("nodes", i++);
        NodeConfig nc;
        nc.id = node_id(n, path, "id");
        try {
            nc.kind = node_kind_from_string(text(n, path, "kind"));
        } catch (const Error& e) {
            fail(at(path, "kind"), e.what());
        }
        nc.distance_m = number(n, path, "distance_m");
        nc.elevation_bonus = flag(n, path, "elevation_bonus", false);
        cfg.nodes.push_back(nc);
    }

    for (std::size_t i = 0; const auto& a : array(root, top, "appliances")) {
        const auto path = idx("appliances", i++);
        ApplianceConfig ac;
        ac.spec.name = text(a, path, "name");
        ac.spec.manufacturer = text(a, path, "manufacturer", std::string());
        ac.spec.model = text(a, path, "model", std::string());
        ac.spec.rated_power_w = number(a, path, "watts");
        ac.spec.effective_power_w = number(a, path, "effective_watts", 0.0);
        ac.spec.power_factor = number(a, path, "power_factor", 1.0);
        ac.spec.node = node_id(a, path, "node");
        ac.supply_voltage_v = number(a, path, "supply_voltage", 127.0);
        ac.calibrated_trim = number(a, path, "calibrated_trim", 0.0);
        ac.relay.max_current_a = number(a, path, "relay_max_current_a", 10.0);
        ac.relay.max_voltage_v = number(a, path, "relay_max_voltage_v", 125.0);
        if (!(ac.spec.rated_power_w > 0.0)) fail(at(path, "watts"), "must be > 0");
        if (ac.spec.effective_power_w < 0.0) fail(at(path, "effective_watts"), "must be >= 0");
        if (!(ac.spec.power_factor > 0.0 && ac.spec.power_factor <= 1.0)) fail(at(path, "power_factor"), "must be in (0, 1]");
        if (!(ac.supply_voltage_v > 0.0)) fail(at(path, "supply_voltage"), "must be > 0");
        if (!(ac.calibrated_trim >= 0.0 && ac.calibrated_trim < 1.0)) fail(at(path, "calibrated_trim"), "must be in [0, 1)");
        if (!(ac.relay.max_current_a > 0.0)) fail(at(path, "relay_max_current_a"), "must be > 0");
        cfg.appliances.push_back(std::move(ac));
    }

    for (std::size_t i = 0; const auto& u : array(root, top, "usage")) {
        const auto path = idx("usage", i++);
        profiles::UsageProfile p;
        p.appliance = text(u, path, "appliance");
        for (std::size_t k = 0; const auto& iv : array(u, path, "intervals")) {
            const auto ipath = idx(at(path, "intervals"), k++);
            const int on = clock(iv, ipath, "on");
            const int off = clock(iv, ipath, "off");
            const double lf = number(iv, ipath, "load_fraction", 1.0);
            for (int d : days(iv, ipath)) p.week.push_back({d, on, off, lf});
        }
        try {
            profiles::validate(p);
        } catch (const Error& e) {
            fail(path, e.what());
        }
        cfg.usage.push_back(std::move(p));
    }

    if (auto env = root.find("environment"); env != root.end()) {
        const std::string path = "environment";
        cfg.environment.temperature_c = hourly(*env, path, "temperature_c", 25.0);
        cfg.environment.humidity_pct = hourly(*env, path, "humidity_pct", 50.0);
        cfg.environment.luminosity_lux = hourly(*env, path, "luminosity_lux", 0.0);
        for (std::size_t i = 0; const auto& o : array(*env, path, "occupancy")) {
            const auto opath = idx(at(path, "occupancy"), i++);
            const int from = clock(o, opath, "from");
            const int to = clock(o, opath, "to");
            if (to <= from) fail(opath, "'to' must be after 'from'");
            sensors::Position pos{number(o, opath, "distance_m"), number(o, opath, "bearing_deg", 0.0)};
            for (int d : days(o, opath)) cfg.environment.occupancy.push_back({d, from, to, pos});
        }
    } else {
        cfg.environment.temperature_c.fill(25.0);
        cfg.environment.humidity_pct.fill(50.0);
        cfg.environment.luminosity_lux.fill(0.0);
    }

    if (auto n = root.find("noise"); n != root.end()) {
        const sensors::NoiseSigmas d;
        cfg.noise.current_a = number(*n, "noise", "current_a", d.current_a);
        cfg.noise.voltage_v = number(*n, "noise", "voltage_v", d.voltage_v);
        cfg.noise.temperature_c = number(*n, "noise", "temperature_c", d.temperature_c);
        cfg.noise.humidity_pct = number(*n, "noise", "humidity_pct", d.humidity_pct);
        cfg.noise.luminosity_lux = number(*n, "noise", "luminosity_lux", d.luminosity_lux);
    }

    if (auto p = root.find("presence"); p != root.end()) {
        cfg.presence.max_distance_m = number(*p, "presence", "max_distance_m", 6.0);
        cfg.presence.max_angle_deg = number(*p, "presence", "max_angle_deg", 50.0);
    }

    if (auto c = root.find("channel"); c != root.end()) {
        const std::string path = "channel";
        if (c->contains("calibration")) {
            cfg.channel.calibration.clear();
            for (std::size_t i = 0; const auto& pt : array(*c, path, "calibration")) {
                const auto ppath = idx(at(path, "calibration"), i++);
                if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
                    fail(ppath, "must be [distance_m, rssi_dbm]");
                }
                cfg.channel.calibration.push_back({pt[0].get<double>(), pt[1].get<double>()});
            }
        }
        cfg.channel.loss_onset_m = number(*c, path, "loss_onset_m", 16.0);
        cfg.channel.loss_full_m = number(*c, path, "loss_full_m", 20.0);
        cfg.channel.elevation_bonus_m = number(*c, path, "elevation_bonus_m", 2.0);
    }

    for (std::size_t i = 0; const auto& r : array(root, top, "rules")) {
        const auto path = idx("rules", i++);
        policy::PolicyRule rule;
        rule.id = text(r, path, "id");
        rule.target = text(r, path, "target");
        try {
            rule.action = switch_state_from_string(text(r, path, "action"));
        } catch (const Error&) {
            fail(at(path, "action"), "must be 'on' or 'off'");
        }
        const auto mode = text(r, path, "mode", std::string("automatic"));
        if (mode == "automatic") rule.mode = policy::RuleMode::Automatic;
        else if (mode == "advisory") rule.mode = policy::RuleMode::Advisory;
        else fail(at(path, "mode"), "must be 'automatic' or 'advisory'");
        for (std::size_t k = 0; const auto& c : array(r, path, "when")) {
            rule.when.push_back(parse_condition(c, idx(at(path, "when"), k++)));
        }
        cfg.rules.push_back(std::move(rule));
    }

    for (std::size_t i = 0; const auto& t : array(root, top, "tokens")) {
        const auto path = idx("tokens", i++);
        AccessToken tok;
        tok.token = text(t, path, "token");
        const auto scope = text(t, path, "scope");
        if (scope == "control") tok.scope = Scope::Control;
        else if (scope == "read") tok.scope = Scope::ReadOnly;
        else fail(at(path, "scope"), "must be 'read' or 'control'");
        if (tok.token.empty()) fail(at(path, "token"), "must not be empty");
        cfg.tokens.push_back(std::move(tok));
    }

    validate(cfg);
    return cfg;
}

void validate(const ExperimentConfig& cfg) {
    if (!(cfg.tick_seconds > 0.0)) fail("tick_seconds", "must be > 0");
    if (cfg.duration_ticks == 0) fail("duration_ticks", "must be > 0");
    if (cfg.report_interval_ticks == 0) fail("report_interval_ticks", "must be > 0");

    std::map<NodeId, NodeKind> kinds;
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
        const auto& n = cfg.nodes[i];
        if (n.id == kCoordinatorId) fail(idx("nodes", i) + ".id", "0 is reserved for the coordinator");
        if (!kinds.emplace(n.id, n.kind).second) fail(idx("nodes", i) + ".id", "duplicate node id");
        if (!(n.distance_m >= 0.0)) fail(idx("nodes", i) + ".distance_m", "must be >= 0");
    }

    std::set<std::string> names;
    std::set<NodeId> used;
    for (std::size_t i = 0; i < cfg.appliances.size(); ++i) {
        const auto& a = cfg.appliances[i];
        const auto path = idx("appliances", i);
        if (!names.insert(a.spec.name).second) fail(path + ".name", "duplicate appliance name");
        auto k = kinds.find(a.spec.node);
        if (k == kinds.end()) fail(path + ".node", "refers to an undeclared node");
        try {
            validate_appliance(a.spec, k->second);
        } catch (const Error& e) {
            fail(path + ".node", e.what());
        }
        if (!used.insert(a.spec.node).second) fail(path + ".node", "node already carries another appliance");
    }

    std::set<std::string> profiled;
    for (std::size_t i = 0; i < cfg.usage.size(); ++i) {
        if (!names.contains(cfg.usage[i].appliance)) fail(idx("usage", i) + ".appliance", "unknown appliance");
        if (!profiled.insert(cfg.usage[i].appliance).second) fail(idx("usage", i) + ".appliance", "profile declared twice");
    }

    const std::vector<std::string> appliance_names(names.begin(), names.end());
    for (std::size_t i = 0; i < cfg.rules.size(); ++i) {
        try {
            policy::validate(cfg.rules[i], appliance_names);
        } catch (const Error& e) {
            fail(idx("rules", i), e.what());
        }
    }

    try {
        sensors::validate(cfg.noise);
    } catch (const Error& e) {
        fail("noise", e.what());
    }
    try {
        sensors::validate(cfg.presence);
    } catch (const Error& e) {
        fail("presence", e.what());
    }
    try {
        radio::validate(cfg.channel);
    } catch (const Error& e) {
        fail("channel", e.what());
    }
    for (std::size_t h = 0; h < 24; ++h) {
        const double hum = cfg.environment.humidity_pct[h];
        if (!(hum >= 0.0 && hum <= 100.0)) fail(idx("environment.humidity_pct", h), "must be in [0, 100]");
        if (!(cfg.environment.luminosity_lux[h] >= 0.0)) fail(idx("environment.luminosity_lux", h), "must be >= 0");
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Config, "config: cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

ExperimentConfig default_fixture() { return parse_config(default_fixture_json()); }

}  // namespace hems::experiment

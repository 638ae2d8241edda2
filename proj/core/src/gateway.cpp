#include "hems/gateway.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace hems::gateway {

using ojson = nlohmann::ordered_json;

struct Gateway::Server {
    httplib::Server http;
};

namespace {

Response json_response(int status, const ojson& body) { return {status, "application/json", body.dump()}; }

Response error_response(int status, const std::string& message) {
    return json_response(status, {{"error", message}});
}

std::optional<double> number_param(const Request& req, const std::string& key) {
    auto it = req.query.find(key);
    if (it == req.query.end()) return std::nullopt;
    double v = 0.0;
    const auto* b = it->second.data();
    const auto* e = b + it->second.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || ptr != e || !std::isfinite(v)) throw Error(Errc::Config, key + " must be a number");
    return v;
}

std::optional<std::uint64_t> count_param(const std::string& text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson command_json(const center::CommandLogEntry& c) {
    return {{"ticket", c.ticket},
            {"ts", c.time.ticks},
            {"appliance", c.appliance},
            {"node", c.node.value},
            {"action", to_string(c.action)},
            {"origin", center::to_string(c.origin.kind)},
            {"origin_id", c.origin.id},
            {"outcome", center::to_string(c.outcome)}};
}

}  // namespace

std::string format_sse(const center::StreamEvent& ev) {
    std::string out = "id: " + std::to_string(ev.cursor + 1) + "\n";
    out += "event: " + ev.type + "\n";
    out += "data: " + ev.line + "\n\n";
    return out;
}

Gateway::Gateway(center::ControlCenter& center, std::vector<experiment::AccessToken> tokens, ReportProvider reports,
                 GatewayOptions options)
    : center_(center), tokens_(std::move(tokens)), reports_(std::move(reports)), options_(options) {}

Gateway::~Gateway() { stop(); }

void Gateway::audit(const Request& req, int status, const std::string& reason) {
    const auto now = center_.with_live_state([](const center::LiveState& l) { return l.as_of.ticks; });
    std::lock_guard lock(audit_mutex_);
    audit_.push_back("tick=" + std::to_string(now) + " " + req.method + " " + req.path + " " + std::to_string(status) +
                     " " + reason);
}

std::vector<std::string> Gateway::audit_log() const {
    std::lock_guard lock(audit_mutex_);
    return audit_;
}

Response Gateway::unauthorized(const Request& req, const std::string& reason) {
    audit(req, 401, reason);
    return error_response(401, reason);
}

std::optional<experiment::Scope> Gateway::authorize(const Request& req) {
    std::string presented;
    if (auto h = req.headers.find("authorization"); h != req.headers.end()) {
        constexpr std::string_view bearer = "Bearer ";
        if (h->second.starts_with(bearer)) presented = h->second.substr(bearer.size());
    }
    if (presented.empty()) {
        if (auto q = req.query.find("token"); q != req.query.end()) presented = q->second;
    }
    if (presented.empty()) {
        audit(req, 401, "missing token");
        return std::nullopt;
    }
    for (const auto& t : tokens_) {
        if (t.token == presented) return t.scope;
    }
    audit(req, 401, "unknown token");
    return std::nullopt;
}

Response Gateway::handle(const Request& req) {
    const auto scope = authorize(req);
    if (!scope) return error_response(401, "unauthorized");

    if (req.method == "GET" && req.path == "/v1/state") return state(req);
    if (req.method == "GET" && req.path == "/v1/history") return history(req);
    if (req.method == "GET" && req.path == "/v1/report") return report(req);
    if (req.method == "POST" && req.path == "/v1/command") {
        if (*scope != experiment::Scope::Control) {
            audit(req, 403, "read-only token");
            return error_response(403, "token may not send commands");
        }
        return command(req);
    }
    constexpr std::string_view prefix = "/v1/command/";
    if (req.method == "GET" && req.path.starts_with(prefix)) {
        auto ticket = count_param(req.path.substr(prefix.size()));
        if (!ticket) return error_response(400, "ticket must be a number");
        return command_status(req, *ticket);
    }
    return error_response(404, "no route for " + req.method + " " + req.path);
}

Response Gateway::state(const Request&) {
    const auto body = center_.with_live_state([](const center::LiveState& live) {
        ojson apps = ojson::array();
        for (const auto& a : live.appliances) {
            apps.push_back({{"name", a.name},
                            {"node", a.node.value},
                            {"state", a.state ? ojson(to_string(*a.state)) : ojson(nullptr)},
                            {"power_w", a.power_w},
                            {"energy_kwh", a.energy_kwh},
                            {"updated", a.updated ? ojson(a.updated->ticks) : ojson(nullptr)},
                            {"readings", a.readings}});
        }
        const auto& e = live.environment;
        ojson env = {{"temperature_c", optional_json(e.temperature_c)},
                     {"humidity_pct", optional_json(e.humidity_pct)},
                     {"luminosity_lux", optional_json(e.luminosity_lux)},
                     {"presence", e.presence ? ojson(*e.presence) : ojson(nullptr)},
                     {"presence_since", e.presence_since.ticks},
                     {"updated", e.updated ? ojson(e.updated->ticks) : ojson(nullptr)}};
        return ojson{{"as_of", live.as_of.ticks},
                     {"time_s", live.as_of.seconds(live.tick_seconds)},
                     {"cursor", live.cursor},
                     {"appliances", apps},
                     {"environment", env}};
    });
    return json_response(200, body);
}

Response Gateway::history(const Request& req) {
    auto name = req.query.find("appliance");
    if (name == req.query.end()) return error_response(400, "appliance is required");
    if (!center_.has_appliance(name->second)) return error_response(404, "unknown appliance '" + name->second + "'");
    try {
        const double now_s = center_.with_live_state(
            [](const center::LiveState& l) { return static_cast<double>(l.as_of.ticks + 1) * l.tick_seconds; });
        const double from = number_param(req, "from").value_or(0.0);
        const double to = number_param(req, "to").value_or(now_s);
        const double res = number_param(req, "res").value_or(3600.0);
        if (to > from && (to - from) / res > 100000.0) return error_response(400, "too many buckets");
        const auto points = center_.query_history(name->second, from, to, res);
        ojson arr = ojson::array();
        for (const auto& p : points) {
            arr.push_back({{"from_s", p.from_s}, {"to_s", p.to_s}, {"kwh", p.kwh}, {"avg_w", p.avg_w}, {"samples", p.samples}});
        }
        return json_response(200, {{"appliance", name->second}, {"from", from}, {"to", to}, {"res", res}, {"points", arr}});
    } catch (const Error& e) {
        return error_response(400, e.what());
    }
}

Response Gateway::report(const Request& req) {
    experiment::Mode mode = experiment::Mode::OnlineCalibrated;
    if (auto m = req.query.find("mode"); m != req.query.end()) {
        try {
            mode = experiment::mode_from_string(m->second);
        } catch (const Error& e) {
            return error_response(400, e.what());
        }
    }
    if (!reports_) return error_response(503, "reports are not available");
    std::lock_guard lock(report_mutex_);
    auto it = report_cache_.find(mode);
    if (it == report_cache_.end()) it = report_cache_.emplace(mode, experiment::report_json(reports_(mode))).first;
    return {200, "application/json", it->second};
}

Response Gateway::command(const Request& req) {
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
        return error_response(400, "body must be JSON");
    }
    if (!body.is_object() || !body.contains("appliance") || !body.contains("action") || !body["appliance"].is_string() ||
        !body["action"].is_string()) {
        return error_response(400, "body needs string fields 'appliance' and 'action'");
    }
    SwitchState action;
    try {
        action = switch_state_from_string(body["action"].get<std::string>());
    } catch (const Error&) {
        return error_response(400, "action must be 'on' or 'off'");
    }
    const auto appliance = body["appliance"].get<std::string>();
    std::uint64_t ticket = 0;
    try {
        ticket = center_.submit_user_command(appliance, action, "api");
    } catch (const Error& e) {
        if (e.code() == Errc::UnknownAppliance) return error_response(404, e.what());
        throw;
    }
    if (auto done = center_.wait_command_outcome(ticket, options_.command_wait)) {
        auto j = command_json(*done);
        j["status"] = "done";
        return json_response(200, j);
    }
    return json_response(202, {{"ticket", ticket}, {"status", "pending"}});
}

Response Gateway::command_status(const Request&, std::uint64_t ticket) {
    if (auto done = center_.command_outcome(ticket)) {
        auto j = command_json(*done);
        j["status"] = "done";
        return json_response(200, j);
    }
    return json_response(202, {{"ticket", ticket}, {"status", "pending"}});
}

StreamSelection Gateway::stream_selection(const Request& req) const {
    StreamSelection sel;
    // SSE ids are cursor + 1, so Last-Event-ID is already the next cursor.
    if (auto h = req.headers.find("last-event-id"); h != req.headers.end()) {
        if (auto v = count_param(h->second)) sel.cursor = *v;
    }
    if (auto q = req.query.find("cursor"); q != req.query.end()) {
        if (auto v = count_param(q->second)) sel.cursor = *v;
    }
    if (auto q = req.query.find("appliances"); q != req.query.end()) {
        std::stringstream ss(q->second);
        for (std::string name; std::getline(ss, name, ',');) {
            if (!name.empty()) sel.appliances.insert(name);
        }
    }
    if (auto q = req.query.find("limit"); q != req.query.end()) {
        if (auto v = count_param(q->second)) sel.limit = static_cast<std::size_t>(*v);
    }
    return sel;
}

std::vector<center::StreamEvent> Gateway::next_stream_batch(StreamSelection& sel) const {
    std::vector<center::StreamEvent> out;
    const auto events = center_.events_since(sel.cursor, options_.stream_batch);
    for (const auto& ev : events) {
        sel.cursor = ev.cursor + 1;
        if (!sel.appliances.empty() && !sel.appliances.contains(ev.appliance)) continue;
        out.push_back(ev);
        if (sel.limit && out.size() >= *sel.limit) break;
    }
    if (sel.limit) *sel.limit -= std::min(*sel.limit, out.size());
    return out;
}

namespace {

Request to_request(const httplib::Request& r) {
    Request req;
    req.method = r.method;
    req.path = r.path;
    for (const auto& [k, v] : r.params) req.query[k] = v;
    for (const auto& [k, v] : r.headers) {
        std::string name = k;
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        req.headers[name] = v;
    }
    req.body = r.body;
    return req;
}

void cors(httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type, Last-Event-ID");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
}

}  // namespace

int Gateway::bind(const std::string& host, int port) {
    server_ = std::make_unique<Server>();
    auto& http = server_->http;
    stopping_ = false;

    auto plain = [this](const httplib::Request& r, httplib::Response& res) {
        const auto out = handle(to_request(r));
        cors(res);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    http.Get(R"(/v1/(state|history|report|command/\d+))", plain);
    http.Post("/v1/command", plain);
    http.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
        cors(res);
        res.status = 204;
    });

    http.Get("/v1/stream", [this](const httplib::Request& r, httplib::Response& res) {
        const auto req = to_request(r);
        cors(res);
        if (!authorize(req)) {
            res.status = 401;
            res.set_content(R"({"error":"unauthorized"})", "application/json");
            return;
        }
        auto sel = std::make_shared<StreamSelection>(stream_selection(req));
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, sel](std::size_t, httplib::DataSink& sink) {
            while (!stopping_) {
                if (sel->limit && *sel->limit == 0) {
                    sink.done();
                    return true;
                }
                auto batch = next_stream_batch(*sel);
                if (!batch.empty()) {
                    std::string chunk;
                    for (const auto& ev : batch) chunk += format_sse(ev);
                    return sink.write(chunk.data(), chunk.size());
                }
                if (!sink.is_writable()) return false;
                if (!center_.wait_events(sel->cursor, std::chrono::milliseconds(500))) {
                    static constexpr std::string_view keepalive = ": keepalive\n\n";
                    if (!sink.write(keepalive.data(), keepalive.size())) return false;
                }
            }
            sink.done();
            return true;
        });
    });

    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) res.set_content(R"({"error":"not found"})", "application/json");
    });

    if (port == 0) return http.bind_to_any_port(host);
    if (!http.bind_to_port(host, port)) throw Error(Errc::Config, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void Gateway::listen_after_bind() {
    if (!server_) throw Error(Errc::Config, "gateway is not bound");
    server_->http.listen_after_bind();
}

void Gateway::serve(const std::string& host, int port) {
    bind(host, port);
    listen_after_bind();
}

void Gateway::stop() {
    stopping_ = true;
    if (server_) server_->http.stop();
}

bool Gateway::running() const { return server_ && server_->http.is_running(); }

}  // namespace hems::gateway

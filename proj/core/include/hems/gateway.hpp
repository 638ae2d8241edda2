#pragma once

// HTTP/JSON + server-sent-events gateway in front of the control center.
//
//   GET  /v1/state
//   GET  /v1/history?appliance=&from=&to=&res=
//   GET  /v1/report?mode=
//   POST /v1/command            {"appliance": "...", "action": "on"|"off"}
//   GET  /v1/command/{ticket}
//   GET  /v1/stream             SSE; resume with Last-Event-ID or ?cursor=
//
// Every route wants a token, either "Authorization: Bearer <t>" or ?token=<t>
// (EventSource cannot set headers). Read tokens may not send commands.
//
// The handlers are plain functions over Request/Response so they can be
// exercised without sockets; serve() wires them into cpp-httplib.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hems/control_center.hpp"
#include "hems/experiment.hpp"

namespace hems::gateway {

struct Request {
    std::string method = "GET";
    std::string path;
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers;  // names lower-case
    std::string body;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct GatewayOptions {
    std::chrono::milliseconds command_wait{2000};
    /// Events sent per stream write.
    std::size_t stream_batch = 256;
};

/// Produces the experiment report for a mode. The gateway caches results.
using ReportProvider = std::function<experiment::ExperimentResult(experiment::Mode)>;

struct StreamSelection {
    std::uint64_t cursor = 0;
    std::set<std::string> appliances;  // empty = everything
    std::optional<std::size_t> limit;
};

std::string format_sse(const center::StreamEvent& ev);

class Gateway {
public:
    Gateway(center::ControlCenter& center, std::vector<experiment::AccessToken> tokens, ReportProvider reports,
            GatewayOptions options = {});
    ~Gateway();

    Response handle(const Request& req);

    Response state(const Request& req);
    Response history(const Request& req);
    Response report(const Request& req);
    Response command(const Request& req);
    Response command_status(const Request& req, std::uint64_t ticket);

    /// Scope of the presented token, or nullopt (and an audit line) when the
    /// request is not authorized.
    std::optional<experiment::Scope> authorize(const Request& req);
    std::vector<std::string> audit_log() const;

    /// Parses cursor, appliance filter and limit of a stream request.
    StreamSelection stream_selection(const Request& req) const;
    /// Events at or after sel.cursor that pass the filter; advances sel.cursor
    /// past everything examined. Does not block.
    std::vector<center::StreamEvent> next_stream_batch(StreamSelection& sel) const;

    /// Binds and serves until stop(). Port 0 picks a free port.
    void serve(const std::string& host, int port);
    /// Binds without serving; returns the bound port.
    int bind(const std::string& host, int port);
    void listen_after_bind();
    void stop();
    bool running() const;

private:
    void audit(const Request& req, int status, const std::string& reason);
    Response unauthorized(const Request& req, const std::string& reason);

    center::ControlCenter& center_;
    std::vector<experiment::AccessToken> tokens_;
    ReportProvider reports_;
    GatewayOptions options_;

    mutable std::mutex audit_mutex_;
    std::vector<std::string> audit_;

    std::mutex report_mutex_;
    std::map<experiment::Mode, std::string> report_cache_;

    struct Server;
    std::unique_ptr<Server> server_;
    std::atomic<bool> stopping_{false};
};

}  // namespace hems::gateway

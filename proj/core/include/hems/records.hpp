#pragma once

// Records kept by the control center and the line-delimited log that
// persists them. One JSON object per line with the fields
//   ts, node, kind, payload, rssi
// in that order. `kind` is a node kind for readings, "command" for command
// log entries and "header" for the first line describing the installation.

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hems/domain.hpp"

namespace hems::center {

struct ReadingRecord {
    NodeId node;
    NodeKind kind = NodeKind::EnergyConsumption;
    SimTime time;
    std::variant<ElectricalSample, EnvironmentSample> payload;
    double rssi_dbm = 0.0;
};

void validate(const ReadingRecord& record);

enum class OriginKind { Rule, User, Manual };

struct Origin {
    OriginKind kind = OriginKind::User;
    std::string id;  // rule id or session name

    bool operator==(const Origin&) const = default;
};

enum class Outcome { Delivered, Dropped, OverCurrent, Superseded };

std::string_view to_string(OriginKind k);
std::string_view to_string(Outcome o);

struct CommandLogEntry {
    std::uint64_t ticket = 0;
    SimTime time;
    std::string appliance;
    NodeId node;
    SwitchState action = SwitchState::Off;
    Origin origin;
    Outcome outcome = Outcome::Delivered;

    bool operator==(const CommandLogEntry&) const = default;
};

struct NodeInfo {
    NodeId id;
    NodeKind kind = NodeKind::EnergyConsumption;
};

struct LogHeader {
    double tick_seconds = kDefaultTickSeconds;
    std::vector<ApplianceSpec> appliances;
    std::vector<NodeInfo> nodes;
};

using LogEntry = std::variant<LogHeader, ReadingRecord, CommandLogEntry>;

std::string to_log_line(const LogEntry& entry);

/// Throws Error(InvalidRecord) on anything that is not a complete entry.
LogEntry parse_log_line(std::string_view line);

/// Storage seam behind the control center. Implementations throw on failure.
class RecordSink {
public:
    virtual ~RecordSink() = default;
    virtual void append(const LogEntry& entry) = 0;
    /// End of a tick batch.
    virtual void flush() {}
};

class NullSink final : public RecordSink {
public:
    void append(const LogEntry&) override {}
};

class MemorySink final : public RecordSink {
public:
    void append(const LogEntry& entry) override;
    const std::vector<std::string>& lines() const { return lines_; }
    /// Makes every append after the next `n` throw.
    void fail_after(std::size_t n) { fail_after_ = n; }

private:
    std::vector<std::string> lines_;
    std::size_t fail_after_ = SIZE_MAX;
};

class FileLog final : public RecordSink {
public:
    explicit FileLog(const std::string& path);
    void append(const LogEntry& entry) override;
    void flush() override;

private:
    std::string path_;
    std::ofstream out_;
    bool dirty_ = false;
};

}  // namespace hems::center

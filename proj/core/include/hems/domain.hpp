#pragma once

// Vocabulary shared by every part of the HEMS simulator.

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hems {

enum class Errc {
    NonPositivePower,
    NodeKindMismatch,
    PayloadTooLarge,
    ChecksumMismatch,
    Truncated,
    UnknownKind,
    WrongKind,
    OverCurrent,
    LengthMismatch,
    Empty,
    UnknownNode,
    UnknownAppliance,
    StorageFailure,
    InvalidRecord,
    NonMonotoneTime,
    ApplianceSetMismatch,
    InvalidProfile,
    InvalidRule,
    Config,
    Unauthorized,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the Errc codes so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

struct NodeId {
    std::uint8_t value = 0;

    constexpr NodeId() = default;
    constexpr explicit NodeId(std::uint8_t v) : value(v) {}
    friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

inline constexpr NodeId kCoordinatorId{0};

enum class NodeKind : std::uint8_t {
    EnergyConsumption = 0,
    TemperatureHumidity = 1,
    Luminosity = 2,
    Presence = 3,
};

inline constexpr NodeKind kAllNodeKinds[] = {
    NodeKind::EnergyConsumption,
    NodeKind::TemperatureHumidity,
    NodeKind::Luminosity,
    NodeKind::Presence,
};

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view name);

enum class SwitchState : std::uint8_t { Off = 0, On = 1 };

std::string_view to_string(SwitchState s);
SwitchState switch_state_from_string(std::string_view name);

struct ApplianceSpec {
    std::string name;
    std::string manufacturer;
    std::string model;
    double rated_power_w = 0.0;
    NodeId node;
    /// Draw when switched on at full load. Zero means "same as rated".
    double effective_power_w = 0.0;
    double power_factor = 1.0;

    double on_power_w() const { return effective_power_w > 0.0 ? effective_power_w : rated_power_w; }
};

/// Returns the spec unchanged when it is well formed. `attached_kind` is the
/// kind of the node the appliance is wired to.
const ApplianceSpec& validate_appliance(const ApplianceSpec& spec, NodeKind attached_kind);

struct ElectricalSample {
    double current_a = 0.0;
    double voltage_v = 0.0;
    double power_factor = 1.0;
    double power_w = 0.0;
    double energy_kwh = 0.0;

    /// Builds a sample whose power is V * I * PF.
    static ElectricalSample measured(double current_a, double voltage_v, double power_factor,
                                     double energy_kwh);

    bool operator==(const ElectricalSample&) const = default;
};

void validate(const ElectricalSample& s);

struct EnvironmentSample {
    double temperature_c = 0.0;
    double humidity_pct = 0.0;
    double luminosity_lux = 0.0;
    bool presence = false;

    bool operator==(const EnvironmentSample&) const = default;
};

void validate(const EnvironmentSample& s);

struct SimTime {
    std::uint64_t ticks = 0;

    friend constexpr auto operator<=>(SimTime, SimTime) = default;
    double seconds(double tick_seconds) const { return static_cast<double>(ticks) * tick_seconds; }
};

inline constexpr double kDefaultTickSeconds = 1.0;
inline constexpr std::uint64_t kSecondsPerDay = 86'400;
inline constexpr std::uint64_t kSecondsPerWeek = 7 * kSecondsPerDay;

}  // namespace hems

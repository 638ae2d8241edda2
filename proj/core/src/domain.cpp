#include "hems/domain.hpp"

#include <algorithm>
#include <cmath>

namespace hems {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::NonPositivePower: return "NonPositivePower";
    case Errc::NodeKindMismatch: return "NodeKindMismatch";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::Truncated: return "Truncated";
    case Errc::UnknownKind: return "UnknownKind";
    case Errc::WrongKind: return "WrongKind";
    case Errc::OverCurrent: return "OverCurrent";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::UnknownAppliance: return "UnknownAppliance";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::InvalidRecord: return "InvalidRecord";
    case Errc::NonMonotoneTime: return "NonMonotoneTime";
    case Errc::ApplianceSetMismatch: return "ApplianceSetMismatch";
    case Errc::InvalidProfile: return "InvalidProfile";
    case Errc::InvalidRule: return "InvalidRule";
    case Errc::Config: return "Config";
    case Errc::Unauthorized: return "Unauthorized";
    }
    return "Unknown";
}

std::string_view to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::EnergyConsumption: return "energy";
    case NodeKind::TemperatureHumidity: return "temperature_humidity";
    case NodeKind::Luminosity: return "luminosity";
    case NodeKind::Presence: return "presence";
    }
    return "unknown";
}

NodeKind node_kind_from_string(std::string_view name) {
    for (auto k : kAllNodeKinds) {
        if (to_string(k) == name) return k;
    }
    throw Error(Errc::UnknownKind, "unknown node kind '" + std::string(name) + "'");
}

std::string_view to_string(SwitchState s) { return s == SwitchState::On ? "on" : "off"; }

SwitchState switch_state_from_string(std::string_view name) {
    if (name == "on" || name == "On" || name == "ON") return SwitchState::On;
    if (name == "off" || name == "Off" || name == "OFF") return SwitchState::Off;
    throw Error(Errc::InvalidRecord, "expected on/off, got '" + std::string(name) + "'");
}

const ApplianceSpec& validate_appliance(const ApplianceSpec& spec, NodeKind attached_kind) {
    if (!(spec.rated_power_w > 0.0)) {
        throw Error(Errc::NonPositivePower, "appliance '" + spec.name + "' must have rated power > 0");
    }
    if (attached_kind != NodeKind::EnergyConsumption) {
        throw Error(Errc::NodeKindMismatch, "appliance '" + spec.name + "' is attached to a " +
                                                std::string(to_string(attached_kind)) + " node");
    }
    if (spec.effective_power_w < 0.0) {
        throw Error(Errc::NonPositivePower, "appliance '" + spec.name + "' has negative effective power");
    }
    if (!(spec.power_factor > 0.0 && spec.power_factor <= 1.0)) {
        throw Error(Errc::InvalidRecord, "appliance '" + spec.name + "' power factor must be in (0, 1]");
    }
    return spec;
}

ElectricalSample ElectricalSample::measured(double current_a, double voltage_v, double power_factor,
                                            double energy_kwh) {
    ElectricalSample s;
    s.current_a = current_a;
    s.voltage_v = voltage_v;
    s.power_factor = power_factor;
    s.power_w = voltage_v * current_a * power_factor;
    s.energy_kwh = energy_kwh;
    return s;
}

void validate(const ElectricalSample& s) {
    if (s.current_a < 0.0 || s.voltage_v < 0.0 || s.energy_kwh < 0.0 || s.power_w < 0.0) {
        throw Error(Errc::InvalidRecord, "electrical sample has a negative quantity");
    }
    if (s.power_factor < 0.0 || s.power_factor > 1.0) {
        throw Error(Errc::InvalidRecord, "power factor outside [0, 1]");
    }
    const double expected = s.voltage_v * s.current_a * s.power_factor;
    if (std::abs(s.power_w - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
        throw Error(Errc::InvalidRecord, "power does not equal V * I * PF");
    }
}

void validate(const EnvironmentSample& s) {
    if (!(s.humidity_pct >= 0.0 && s.humidity_pct <= 100.0)) {
        throw Error(Errc::InvalidRecord, "humidity outside [0, 100] %");
    }
    if (!(s.luminosity_lux >= 0.0)) {
        throw Error(Errc::InvalidRecord, "negative luminosity");
    }
    if (!std::isfinite(s.temperature_c)) {
        throw Error(Errc::InvalidRecord, "temperature is not finite");
    }
}

}  // namespace hems

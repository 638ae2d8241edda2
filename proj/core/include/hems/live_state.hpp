#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hems/domain.hpp"

namespace hems::center {

struct ApplianceLive {
    std::string name;
    NodeId node;
    std::optional<SwitchState> state;  // nullopt until first reading or command
    double power_w = 0.0;
    double energy_kwh = 0.0;
    std::optional<SimTime> updated;
    std::uint64_t readings = 0;
};

struct EnvironmentLive {
    std::optional<double> temperature_c;
    std::optional<double> humidity_pct;
    std::optional<double> luminosity_lux;
    std::optional<bool> presence;
    SimTime presence_since;
    std::optional<SimTime> updated;
};

/// Consistent snapshot of what the control center currently believes.
struct LiveState {
    SimTime as_of;
    double tick_seconds = kDefaultTickSeconds;
    std::uint64_t cursor = 0;  // number of stream events so far
    std::vector<ApplianceLive> appliances;
    EnvironmentLive environment;

    const ApplianceLive* find(std::string_view name) const {
        for (const auto& a : appliances) {
            if (a.name == name) return &a;
        }
        return nullptr;
    }
};

}  // namespace hems::center

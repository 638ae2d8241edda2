#pragma once

// Built-in fixture checks shared by `hems verify` and the acceptance suite.

#include <string>
#include <vector>

#include "hems/experiment.hpp"
#include "hems/radio.hpp"
#include "hems/sensors.hpp"

namespace hems::verify {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string format(const Check& c);

/// Every reference presence row under `geom`.
Check presence_table(const sensors::PresenceGeometry& geom);

/// Exact RSSI at the calibration distances and zero loss inside the
/// loss-free range.
Check rssi_points(const radio::ChannelParams& params);

/// Per-appliance and total kWh of both runs against the reference week.
std::vector<Check> weekly(const experiment::ExperimentResult& result);

/// Remote On for the washing machine must trip OverCurrent and leave
/// the relay and the home untouched.
Check relay_safety(const experiment::ExperimentConfig& config);

}  // namespace hems::verify

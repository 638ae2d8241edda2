#pragma once

// Energy accounting: kWh integration, weekly usage profiles and the
// offline-versus-online consumption report.

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hems/domain.hpp"

namespace hems::profiles {

struct PowerSample {
    double t_s = 0.0;
    double watts = 0.0;
};

/// Left-rectangle (sample-and-hold) integral in watt-seconds. Each sample's
/// power holds until the next sample; the last sample only closes the series.
double integrate_energy_ws(std::span<const PowerSample> samples);

/// Same integral in kWh.
double integrate_energy(std::span<const PowerSample> samples);

/// Incremental form of the same rule, used by metering nodes.
class EnergyAccumulator {
public:
    void add(double watts, double dt_s) { ws_ += watts * dt_s; }
    double watt_seconds() const { return ws_; }
    double kwh() const { return ws_ / 3.6e6; }

private:
    double ws_ = 0.0;
};

/// Seconds since midnight from "hh:mm" or "hh:mm:ss"; "24:00" is accepted as
/// the end of the day.
int parse_clock(std::string_view text);
std::string format_clock(int seconds_of_day);

struct UsageInterval {
    int day = 0;  // 0..6
    int on_s = 0;
    int off_s = 0;
    double load_fraction = 1.0;

    int duration_s() const { return off_s - on_s; }
    bool operator==(const UsageInterval&) const = default;
};

struct UsageProfile {
    std::string appliance;
    std::vector<UsageInterval> week;
};

void validate(const UsageProfile& profile);

/// Hours per week weighted by load fraction.
double weekly_on_hours(const UsageProfile& profile);

double weekly_profile(const ApplianceSpec& appliance, const UsageProfile& usage);

/// Shortens every interval from its end by round(fraction * duration)
/// seconds. Intervals trimmed to nothing are removed.
UsageProfile trim_profile(const UsageProfile& usage, double fraction);

struct ReportRow {
    std::string appliance;
    double offline_kwh = 0.0;
    double online_kwh = 0.0;
    double reduction_kwh = 0.0;
    double reduction_percent = 0.0;

    int display_percent() const;
};

struct ConsumptionReport {
    std::vector<ReportRow> rows;
    ReportRow total;

    const ReportRow& row(std::string_view appliance) const;
};

using KwhByAppliance = std::vector<std::pair<std::string, double>>;

/// Half-up rounding to a whole percent.
int round_percent(double percent);

ConsumptionReport build_report(const KwhByAppliance& offline, const KwhByAppliance& online);

/// Fixed-width table with one column per appliance plus the weekly total.
std::string render_table(const ConsumptionReport& report);

}  // namespace hems::profiles

#include "hems/verify.hpp"

#include <cmath>
#include <cstdio>

#include "hems/reference.hpp"

namespace hems::verify {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

}  // namespace

std::string format(const Check& c) { return std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail; }

Check presence_table(const sensors::PresenceGeometry& geom) {
    int ok = 0;
    std::string wrong;
    for (const auto& row : reference::kPresenceRows) {
        const bool got = sensors::detect_presence(geom, sensors::Position{row.distance_m, row.bearing_deg});
        if (got == row.detected) {
            ++ok;
        } else {
            wrong += " (" + fixed(row.distance_m, 0) + " m, " + fixed(row.bearing_deg, 0) + " deg)";
        }
    }
    const int n = static_cast<int>(reference::kPresenceRows.size());
    return {"presence table", ok == n, std::to_string(ok) + "/" + std::to_string(n) + " rows" + (wrong.empty() ? "" : ", wrong:" + wrong)};
}

Check rssi_points(const radio::ChannelParams& params) {
    const radio::ChannelModel model(params);
    bool pass = true;
    std::string detail;
    for (const auto& p : reference::kRssiPoints) {
        const double got = model.rssi_at(p.distance_m);
        pass = pass && got == p.rssi_dbm;
        detail += fixed(p.distance_m, 0) + " m " + fixed(got, 2) + " dBm; ";
    }
    double worst = 0.0;
    for (int cm = 0; cm <= static_cast<int>(reference::kLossFreeRange_m * 100); ++cm) {
        worst = std::max(worst, model.loss_probability(cm / 100.0));
    }
    pass = pass && worst == 0.0;
    detail += "max loss within " + fixed(reference::kLossFreeRange_m, 0) + " m = " + fixed(worst, 4);
    return {"rssi calibration", pass, detail};
}

std::vector<Check> weekly(const experiment::ExperimentResult& result) {
    std::vector<Check> out;
    const auto& rep = result.report;
    for (const auto& ref : reference::kWeekly) {
        const auto& row = rep.row(ref.appliance);
        out.push_back({"offline " + std::string(ref.appliance), within(row.offline_kwh, ref.offline_kwh, reference::kWeeklyTolerance),
                       fixed(row.offline_kwh, 4) + " kWh vs " + fixed(ref.offline_kwh, 4)});
    }
    out.push_back({"offline total", within(rep.total.offline_kwh, reference::kWeeklyOfflineTotal, reference::kWeeklyTolerance),
                   fixed(rep.total.offline_kwh, 4) + " kWh vs " + fixed(reference::kWeeklyOfflineTotal, 2)});
    if (!result.online) return out;
    out.push_back({"online total", within(rep.total.online_kwh, reference::kWeeklyOnlineTotal, reference::kWeeklyTolerance),
                   fixed(rep.total.online_kwh, 4) + " kWh vs " + fixed(reference::kWeeklyOnlineTotal, 2)});
    out.push_back({"total reduction", rep.total.display_percent() == reference::kWeeklyDisplayPercent,
                   std::to_string(rep.total.display_percent()) + "% (" + fixed(rep.total.reduction_percent, 2) + ")"});
    for (const auto& ref : reference::kWeekly) {
        const auto& row = rep.row(ref.appliance);
        out.push_back({"reduction " + std::string(ref.appliance), row.display_percent() == ref.display_percent,
                       std::to_string(row.display_percent()) + "% vs " + std::to_string(ref.display_percent) + "%"});
    }
    return out;
}

Check relay_safety(const experiment::ExperimentConfig& config) {
    ApplianceSpec washer{"Washing machine", "", "", reference::kWasherCurrent_a * reference::kWasherVoltage_v, NodeId{1}};
    double volts = reference::kWasherVoltage_v;
    sensors::RelayRating rating;
    if (const auto* a = config.find_appliance("Washing machine")) {
        washer = a->spec;
        volts = a->supply_voltage_v;
        rating = a->relay;
    }
    sensors::HomeState home;
    sensors::set_switch(home, washer, SwitchState::Off);
    sensors::RelayState relay{washer.node, false, rating};
    const auto before = home.appliance(washer.name);
    bool tripped = false;
    try {
        sensors::actuate(relay, SwitchState::On, home, washer, volts);
    } catch (const Error& e) {
        tripped = e.code() == Errc::OverCurrent;
    }
    const bool unchanged = !relay.closed && home.appliance(washer.name) == before;
    const double amps = washer.on_power_w() / (volts * washer.power_factor);
    return {"relay safety", tripped && unchanged,
            fixed(amps, 2) + " A against " + fixed(rating.max_current_a, 1) + " A: " + (tripped ? "OverCurrent" : "no trip") +
                (unchanged ? ", state unchanged" : ", state changed")};
}

}  // namespace hems::verify

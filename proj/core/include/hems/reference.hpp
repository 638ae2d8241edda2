#pragma once

// Bench measurements the simulator is checked against.

#include <array>
#include <string_view>

namespace hems::reference {

struct PresenceRow {
    double distance_m;
    double bearing_deg;
    bool detected;
};

inline constexpr std::array<PresenceRow, 18> kPresenceRows{{
    {1, 0, true}, {1, 25, true}, {1, 50, false},
    {2, 0, true}, {2, 25, true}, {2, 50, false},
    {3, 0, true}, {3, 25, true}, {3, 50, false},
    {4, 0, true}, {4, 25, true}, {4, 50, false},
    {5, 0, true}, {5, 25, true}, {5, 50, false},
    {6, 0, false}, {6, 25, false}, {6, 50, false},
}};

struct RssiPoint {
    double distance_m;
    double rssi_dbm;
};

inline constexpr std::array<RssiPoint, 4> kRssiPoints{{{5, -39}, {10, -53}, {15, -69}, {20, -80}}};
// Farthest distance with no packet loss observed.
inline constexpr double kLossFreeRange_m = 15.0;

// Hourly temperature, 9 h to 17 h: node reading and reference thermometer.
inline constexpr std::array<double, 9> kNodeTemperature{30.57, 31.54, 32.52, 33.50, 34.47, 34.90, 33.01, 31.46, 30.50};
inline constexpr std::array<double, 9> kReferenceTemperature{30.8, 31.9, 33.0, 33.4, 34.2, 34.8, 33.1, 31.6, 30.4};
inline constexpr double kNodeTemperatureStddev = 1.60582533;
inline constexpr double kReferenceTemperatureStddev = 1.591383046;

struct WeeklyRow {
    std::string_view appliance;
    double offline_kwh;
    double online_kwh;
    int display_percent;
};

inline constexpr std::array<WeeklyRow, 5> kWeekly{{
    {"Light bulb", 1.5, 1.17, 22},
    {"Fan", 2.9, 2.7, 7},
    {"Computer", 1.07, 1.0165, 5},
    {"TV", 28.05, 25.245, 10},
    {"Air conditioner", 273.22, 193.98, 29},
}};
inline constexpr double kWeeklyOfflineTotal = 306.74;
inline constexpr double kWeeklyOnlineTotal = 224.12;
inline constexpr int kWeeklyDisplayPercent = 27;
inline constexpr double kWeeklyTolerance = 0.005;

// Measured draw of the washing machine on its own circuit.
inline constexpr double kWasherCurrent_a = 15.28;
inline constexpr double kWasherVoltage_v = 110.0;

}  // namespace hems::reference

#pragma once

// Sensor-actuator node models: ground truth sampling from the simulated
// home, additive Gaussian measurement noise, presence geometry, the relay,
// and the reading payload carried inside radio frames.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hems/domain.hpp"

namespace hems::sensors {

struct Position {
    double distance_m = 0.0;
    double bearing_deg = 0.0;
};

struct ApplianceState {
    SwitchState sw = SwitchState::Off;
    double load_fraction = 1.0;
    double draw_w = 0.0;

    bool operator==(const ApplianceState&) const = default;
};

struct HomeState {
    std::map<std::string, ApplianceState, std::less<>> appliances;
    double temperature_c = 25.0;
    double humidity_pct = 50.0;
    double illuminance_lux = 0.0;
    std::optional<Position> occupant;

    const ApplianceState& appliance(std::string_view name) const;
    ApplianceState& appliance(std::string_view name);
};

/// Sets the switch and keeps draw == on_power * load_fraction (or 0 when off).
void set_switch(HomeState& home, const ApplianceSpec& appliance, SwitchState sw,
                std::optional<double> load_fraction = std::nullopt);

struct NoiseSigmas {
    double current_a = 0.05;
    double voltage_v = 0.5;
    double temperature_c = 0.2;
    double humidity_pct = 0.5;
    double luminosity_lux = 4.0;

    static NoiseSigmas none() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
};

void validate(const NoiseSigmas& sigmas);

/// Seeded noise source. perturb() always consumes one normal draw, even when
/// sigma is zero, so the draw sequence does not depend on the signal.
class NoiseModel {
public:
    explicit NoiseModel(NoiseSigmas sigmas = {}, std::uint64_t seed = 0);

    const NoiseSigmas& sigmas() const { return sigmas_; }
    double perturb(double truth, double sigma);

private:
    NoiseSigmas sigmas_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

struct PresenceGeometry {
    double max_distance_m = 6.0;
    double max_angle_deg = 50.0;
};

void validate(const PresenceGeometry& geom);

bool detect_presence(const PresenceGeometry& geom, const std::optional<Position>& position);

/// Current drawn by `appliance` at `supply_voltage_v` in its present state.
double load_current(const HomeState& home, const ApplianceSpec& appliance, double supply_voltage_v);

ElectricalSample sample_energy(const HomeState& home, const ApplianceSpec& appliance, double supply_voltage_v,
                               NoiseModel& noise, double cumulative_kwh = 0.0);

EnvironmentSample sample_environment(const HomeState& home, NodeKind kind, NoiseModel& noise,
                                     const PresenceGeometry& geom = {});

struct RelayRating {
    double max_current_a = 10.0;
    double max_voltage_v = 125.0;
};

struct RelayState {
    NodeId node;
    bool closed = false;
    RelayRating rating;
};

/// Drives the relay. Throws OverCurrent, leaving both the relay and the home
/// untouched, when switching on would exceed the relay's current rating.
void actuate(RelayState& relay, SwitchState command, HomeState& home, const ApplianceSpec& appliance,
             double supply_voltage_v);

struct CalibrationStats {
    double stddev_readings = 0.0;
    double stddev_reference = 0.0;
    double max_abs_error = 0.0;
};

/// Sample (n - 1) standard deviations; a single-element series has stddev 0.
CalibrationStats calibration_stats(std::span<const double> readings, std::span<const double> reference);

// Reading payload, big-endian:
//   energy:      kind | current mA u32 | voltage mV u32 | PF*1000 u16 | power mW u32 | energy Wh*10 u32
//   environment: kind | temperature m°C i32 | humidity*100 u16 | lux*10 u32 | presence u8
struct ReadingPayload {
    NodeKind kind = NodeKind::EnergyConsumption;
    std::variant<ElectricalSample, EnvironmentSample> value;
};

inline constexpr std::size_t kEnergyPayloadSize = 19;
inline constexpr std::size_t kEnvironmentPayloadSize = 12;

std::vector<std::uint8_t> encode_reading(const ReadingPayload& reading);
ReadingPayload decode_reading(std::span<const std::uint8_t> bytes);

// Command payload: a single action byte (0 = off, 1 = on).
std::vector<std::uint8_t> encode_command(SwitchState action);
SwitchState decode_command(std::span<const std::uint8_t> bytes);

}  // namespace hems::sensors

#include "hems/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hems::sensors {

const ApplianceState& HomeState::appliance(std::string_view name) const {
    auto it = appliances.find(name);
    if (it == appliances.end()) throw Error(Errc::UnknownAppliance, "no appliance '" + std::string(name) + "'");
    return it->second;
}

ApplianceState& HomeState::appliance(std::string_view name) {
    auto it = appliances.find(name);
    if (it == appliances.end()) throw Error(Errc::UnknownAppliance, "no appliance '" + std::string(name) + "'");
    return it->second;
}

void set_switch(HomeState& home, const ApplianceSpec& appliance, SwitchState sw, std::optional<double> load_fraction) {
    auto& st = home.appliances[appliance.name];
    if (load_fraction) {
        if (!(*load_fraction > 0.0 && *load_fraction <= 1.0)) {
            throw Error(Errc::InvalidProfile, "load fraction must be in (0, 1]");
        }
        st.load_fraction = *load_fraction;
    }
    st.sw = sw;
    st.draw_w = sw == SwitchState::On ? appliance.on_power_w() * st.load_fraction : 0.0;
}

void validate(const NoiseSigmas& s) {
    for (double v : {s.current_a, s.voltage_v, s.temperature_c, s.humidity_pct, s.luminosity_lux}) {
        if (!(v >= 0.0)) throw Error(Errc::Config, "noise sigma must be >= 0");
    }
}

NoiseModel::NoiseModel(NoiseSigmas sigmas, std::uint64_t seed) : sigmas_(sigmas), rng_(seed) { validate(sigmas_); }

double NoiseModel::perturb(double truth, double sigma) { return truth + sigma * normal_(rng_); }

void validate(const PresenceGeometry& geom) {
    if (!(geom.max_distance_m > 0.0 && geom.max_angle_deg > 0.0)) {
        throw Error(Errc::Config, "presence geometry limits must be > 0");
    }
}

bool detect_presence(const PresenceGeometry& geom, const std::optional<Position>& position) {
    if (!position) return false;
    return position->distance_m < geom.max_distance_m && std::abs(position->bearing_deg) < geom.max_angle_deg;
}

double load_current(const HomeState& home, const ApplianceSpec& appliance, double supply_voltage_v) {
    const auto& st = home.appliance(appliance.name);
    return st.draw_w / (supply_voltage_v * appliance.power_factor);
}

ElectricalSample sample_energy(const HomeState& home, const ApplianceSpec& appliance, double supply_voltage_v,
                               NoiseModel& noise, double cumulative_kwh) {
    if (!(supply_voltage_v > 0.0)) throw Error(Errc::Config, "supply voltage must be > 0");
    const double truth_i = load_current(home, appliance, supply_voltage_v);
    const double noisy_i = noise.perturb(truth_i, noise.sigmas().current_a);
    const double noisy_v = noise.perturb(supply_voltage_v, noise.sigmas().voltage_v);
    // An open circuit carries no current, so the sensor reads exactly zero.
    const double current = truth_i > 0.0 ? std::max(0.0, noisy_i) : 0.0;
    const double voltage = std::max(0.0, noisy_v);
    return ElectricalSample::measured(current, voltage, appliance.power_factor, cumulative_kwh);
}

EnvironmentSample sample_environment(const HomeState& home, NodeKind kind, NoiseModel& noise,
                                     const PresenceGeometry& geom) {
    EnvironmentSample s;
    const auto& sig = noise.sigmas();
    switch (kind) {
    case NodeKind::TemperatureHumidity:
        s.temperature_c = noise.perturb(home.temperature_c, sig.temperature_c);
        s.humidity_pct = std::clamp(noise.perturb(home.humidity_pct, sig.humidity_pct), 0.0, 100.0);
        break;
    case NodeKind::Luminosity:
        s.luminosity_lux = std::max(0.0, noise.perturb(home.illuminance_lux, sig.luminosity_lux));
        break;
    case NodeKind::Presence:
        s.presence = detect_presence(geom, home.occupant);
        break;
    case NodeKind::EnergyConsumption:
        throw Error(Errc::WrongKind, "energy nodes do not produce environment samples");
    }
    return s;
}

void actuate(RelayState& relay, SwitchState command, HomeState& home, const ApplianceSpec& appliance,
             double supply_voltage_v) {
    const auto& st = home.appliance(appliance.name);
    if (command == SwitchState::On) {
        const double amps = appliance.on_power_w() * st.load_fraction / (supply_voltage_v * appliance.power_factor);
        if (amps > relay.rating.max_current_a) {
            throw Error(Errc::OverCurrent, "switching on '" + appliance.name + "' would draw " + std::to_string(amps) +
                                               " A through a " + std::to_string(relay.rating.max_current_a) + " A relay");
        }
    }
    set_switch(home, appliance, command);
    relay.closed = command == SwitchState::On;
}

namespace {

double sample_stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

CalibrationStats calibration_stats(std::span<const double> readings, std::span<const double> reference) {
    if (readings.size() != reference.size()) throw Error(Errc::LengthMismatch, "series lengths differ");
    if (readings.empty()) throw Error(Errc::Empty, "series are empty");
    CalibrationStats out;
    out.stddev_readings = sample_stddev(readings);
    out.stddev_reference = sample_stddev(reference);
    for (std::size_t i = 0; i < readings.size(); ++i) {
        out.max_abs_error = std::max(out.max_abs_error, std::abs(readings[i] - reference[i]));
    }
    return out;
}

namespace {

template <typename T>
T scaled(double value, double scale) {
    const double r = std::round(value * scale);
    const double lo = static_cast<double>(std::numeric_limits<T>::min());
    const double hi = static_cast<double>(std::numeric_limits<T>::max());
    return static_cast<T>(std::clamp(r, lo, hi));
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    using U = std::make_unsigned_t<T>;
    const U u = static_cast<U>(v);
    for (int shift = static_cast<int>(sizeof(U) * 8) - 8; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>((u >> shift) & 0xFF));
    }
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) u = static_cast<U>((u << 8) | bytes[pos + i]);
    pos += sizeof(U);
    return static_cast<T>(u);
}

}  // namespace

std::vector<std::uint8_t> encode_reading(const ReadingPayload& reading) {
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(reading.kind));
    if (reading.kind == NodeKind::EnergyConsumption) {
        const auto* e = std::get_if<ElectricalSample>(&reading.value);
        if (!e) throw Error(Errc::WrongKind, "energy reading without an electrical sample");
        put(out, scaled<std::uint32_t>(e->current_a, 1e3));
        put(out, scaled<std::uint32_t>(e->voltage_v, 1e3));
        put(out, scaled<std::uint16_t>(e->power_factor, 1e3));
        put(out, scaled<std::uint32_t>(e->power_w, 1e3));
        put(out, scaled<std::uint32_t>(e->energy_kwh, 1e4));
    } else {
        const auto* s = std::get_if<EnvironmentSample>(&reading.value);
        if (!s) throw Error(Errc::WrongKind, "environment reading without an environment sample");
        put(out, scaled<std::int32_t>(s->temperature_c, 1e3));
        put(out, scaled<std::uint16_t>(s->humidity_pct, 1e2));
        put(out, scaled<std::uint32_t>(s->luminosity_lux, 1e1));
        out.push_back(s->presence ? 1 : 0);
    }
    return out;
}

ReadingPayload decode_reading(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw Error(Errc::Truncated, "empty reading payload");
    if (bytes[0] > static_cast<std::uint8_t>(NodeKind::Presence)) {
        throw Error(Errc::UnknownKind, "unknown reading kind " + std::to_string(bytes[0]));
    }
    ReadingPayload r;
    r.kind = static_cast<NodeKind>(bytes[0]);
    std::size_t pos = 1;
    if (r.kind == NodeKind::EnergyConsumption) {
        if (bytes.size() != kEnergyPayloadSize) throw Error(Errc::Truncated, "energy payload has wrong length");
        const double current = get<std::uint32_t>(bytes, pos) / 1e3;
        const double voltage = get<std::uint32_t>(bytes, pos) / 1e3;
        const double pf = get<std::uint16_t>(bytes, pos) / 1e3;
        const double wire_power = get<std::uint32_t>(bytes, pos) / 1e3;
        const double energy = get<std::uint32_t>(bytes, pos) / 1e4;
        if (pf > 1.0) throw Error(Errc::InvalidRecord, "power factor above 1");
        auto sample = ElectricalSample::measured(current, voltage, pf, energy);
        // Power is recomputed from the quantized V, I and PF; the transmitted
        // value only has to agree within the quantization error.
        const double slack = 1e-3 * (voltage + current + 1.0) + 1e-3 * sample.power_w;
        if (std::abs(wire_power - sample.power_w) > slack) {
            throw Error(Errc::InvalidRecord, "transmitted power disagrees with V * I * PF");
        }
        r.value = sample;
    } else {
        if (bytes.size() != kEnvironmentPayloadSize) {
            throw Error(Errc::Truncated, "environment payload has wrong length");
        }
        EnvironmentSample s;
        s.temperature_c = get<std::int32_t>(bytes, pos) / 1e3;
        s.humidity_pct = get<std::uint16_t>(bytes, pos) / 1e2;
        s.luminosity_lux = get<std::uint32_t>(bytes, pos) / 1e1;
        s.presence = bytes[pos] != 0;
        r.value = s;
    }
    return r;
}

std::vector<std::uint8_t> encode_command(SwitchState action) { return {static_cast<std::uint8_t>(action)}; }

SwitchState decode_command(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 1) throw Error(Errc::Truncated, "command payload must be one byte");
    if (bytes[0] > 1) throw Error(Errc::UnknownKind, "unknown command action");
    return static_cast<SwitchState>(bytes[0]);
}

}  // namespace hems::sensors

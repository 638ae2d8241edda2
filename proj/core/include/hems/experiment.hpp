#pragma once

// Whole-home simulation and the weekly offline/online experiment.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hems/control_center.hpp"
#include "hems/coordinator.hpp"
#include "hems/policy.hpp"
#include "hems/profiles.hpp"
#include "hems/radio.hpp"
#include "hems/sensors.hpp"

namespace hems::experiment {

enum class Mode { Offline, OnlineCalibrated, OnlineEmergent };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct NodeConfig {
    NodeId id;
    NodeKind kind = NodeKind::EnergyConsumption;
    double distance_m = 0.0;
    bool elevation_bonus = false;
};

struct ApplianceConfig {
    ApplianceSpec spec;
    double supply_voltage_v = 127.0;
    /// Fraction of every usage interval removed in OnlineCalibrated mode.
    double calibrated_trim = 0.0;
    sensors::RelayRating relay;
};

struct OccupancySlot {
    int day = 0;
    int from_s = 0;
    int to_s = 0;
    sensors::Position position;
};

/// Hourly values (index = hour of day), linearly interpolated and repeated daily.
struct EnvironmentTrace {
    std::array<double, 24> temperature_c{};
    std::array<double, 24> humidity_pct{};
    std::array<double, 24> luminosity_lux{};
    std::vector<OccupancySlot> occupancy;
};

enum class Scope { ReadOnly, Control };

struct AccessToken {
    std::string token;
    Scope scope = Scope::ReadOnly;
};

struct ExperimentConfig {
    double tick_seconds = kDefaultTickSeconds;
    std::uint64_t duration_ticks = kSecondsPerWeek;
    std::uint64_t report_interval_ticks = 1;
    std::uint64_t seed = 1;
    Mode mode = Mode::Offline;
    unsigned downlink_retries = 0;

    std::vector<NodeConfig> nodes;
    std::vector<ApplianceConfig> appliances;
    std::vector<profiles::UsageProfile> usage;
    EnvironmentTrace environment;
    sensors::NoiseSigmas noise;
    sensors::PresenceGeometry presence;
    radio::ChannelParams channel;
    std::vector<policy::PolicyRule> rules;
    std::vector<AccessToken> tokens;

    const ApplianceConfig* find_appliance(std::string_view name) const;
    const profiles::UsageProfile* find_usage(std::string_view appliance) const;
};

/// Throws Error(Config) with the offending field path in the message,
/// e.g. "appliances[2].watts: must be > 0".
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);

/// The shipped weekly test-bench fixture (data/weekly_fixture.json).
std::string_view default_fixture_json();
ExperimentConfig default_fixture();

struct NodeStats {
    NodeId node;
    std::uint64_t emitted = 0;
    std::uint64_t delivered = 0;
    std::uint64_t persisted = 0;
};

struct RunSummary {
    Mode mode = Mode::Offline;
    std::uint64_t ticks = 0;
    profiles::KwhByAppliance kwh;  // metered by the center, profile order
    std::vector<NodeStats> nodes;
    std::uint64_t commands = 0;
    std::uint64_t rule_commands = 0;
    std::uint64_t advisories = 0;
};

struct SimulationOptions {
    Mode mode = Mode::Offline;
    std::uint64_t seed = 1;
    bool journal = false;
};

/// Tick-by-tick simulation of the home, the nodes, the radio, the
/// coordinator and the control center. Single-threaded; the control center
/// it owns may be read from other threads.
class Simulation {
public:
    Simulation(const ExperimentConfig& config, SimulationOptions options, center::RecordSink& sink);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    void step();
    void run(std::uint64_t ticks);

    SimTime now() const { return now_; }
    center::ControlCenter& center() { return *center_; }
    const center::ControlCenter& center() const { return *center_; }
    const sensors::HomeState& home() const { return home_; }
    const coordinator::Coordinator& coordinator() const { return coordinator_; }
    radio::ChannelModel& channel() { return channel_; }

    RunSummary summary() const;

private:
    struct Node;
    struct ScheduleEvent {
        std::uint64_t at_s;
        SwitchState state;
        double load_fraction;
    };

    void apply_schedule(std::uint64_t week_s);
    void update_environment(std::uint64_t t_s);
    void sample_and_report();
    void deliver_to_center();
    void control();
    center::Outcome carry_command(const radio::Frame& command, const ApplianceSpec& appliance);

    const ExperimentConfig& config_;
    SimulationOptions options_;
    radio::ChannelModel channel_;
    coordinator::Coordinator coordinator_;
    coordinator::LinkTable links_;
    std::unique_ptr<center::ControlCenter> center_;
    sensors::HomeState home_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<std::vector<ScheduleEvent>> schedule_;  // per appliance, sorted
    std::vector<std::size_t> schedule_pos_;
    std::uint64_t last_week_ = 0;
    policy::Latches latches_;
    SimTime now_;
    std::uint64_t commands_ = 0;
    std::uint64_t rule_commands_ = 0;
};

struct ExperimentResult {
    profiles::ConsumptionReport report;
    RunSummary baseline;
    std::optional<RunSummary> online;
};

/// Runs one full offline week and, for the online modes, the same week with
/// the HEMS active. The report compares the two (offline mode compares the
/// baseline with itself).
ExperimentResult run_experiment(const ExperimentConfig& config, Mode mode, std::uint64_t seed,
                                center::RecordSink* run_log = nullptr, center::RecordSink* baseline_log = nullptr);

/// Machine-readable report (stable field order, no wall-clock content).
std::string report_json(const ExperimentResult& result);

}  // namespace hems::experiment

// One line per acceptance criterion. Exit status is non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hems/experiment.hpp"
#include "hems/profiles.hpp"
#include "hems/radio.hpp"
#include "hems/reference.hpp"
#include "hems/replay.hpp"
#include "hems/sensors.hpp"
#include "hems/verify.hpp"

namespace fs = std::filesystem;
using namespace hems;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    if (!pass) ++failures;
}

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void weekly(const experiment::ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = experiment::run_experiment(cfg, experiment::Mode::OnlineCalibrated, cfg.seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    bool kwh_ok = true;
    std::string failed;
    for (const auto& c : verify::weekly(result)) {
        if (c.name.starts_with("reduction ") ) continue;
        if (!c.pass) {
            kwh_ok = false;
            failed += " [" + c.name + " " + c.detail + "]";
        }
    }
    const auto& t = result.report.total;
    report("weekly reproduction", kwh_ok && secs < 60.0,
           "offline " + num(t.offline_kwh) + " kWh, online " + num(t.online_kwh) + " kWh, reduction " +
               std::to_string(t.display_percent()) + "% (" + num(t.reduction_percent, 2) + "), two simulated weeks in " +
               num(secs, 2) + " s" + failed);

    bool pct_ok = true;
    std::string pcts;
    for (const auto& ref : reference::kWeekly) {
        const int got = result.report.row(ref.appliance).display_percent();
        pct_ok = pct_ok && got == ref.display_percent;
        pcts += std::string(pcts.empty() ? "" : ", ") + std::string(ref.appliance) + " " + std::to_string(got) + "%";
    }
    report("per-appliance reduction", pct_ok, pcts);
}

void presence() {
    const auto c = verify::presence_table(sensors::PresenceGeometry{});
    report("presence truth table", c.pass, c.detail);
}

void rssi() {
    const auto c = verify::rssi_points(radio::ChannelParams{});
    report("rssi calibration", c.pass, c.detail);
}

void calibration() {
    const auto s = sensors::calibration_stats(reference::kNodeTemperature, reference::kReferenceTemperature);
    const bool node_ok = std::abs(s.stddev_readings - reference::kNodeTemperatureStddev) <= 1e-3;
    const bool ref_ok = std::abs(s.stddev_reference - reference::kReferenceTemperatureStddev) <= 1e-3;
    report("calibration statistics", node_ok && ref_ok,
           "node " + num(s.stddev_readings, 6) + " (want " + num(reference::kNodeTemperatureStddev, 4) + "), reference " +
               num(s.stddev_reference, 6) + " (want " + num(reference::kReferenceTemperatureStddev, 4) + ")");
}

void integration() {
    double worst = 0.0;
    for (double p : {1.0, 72.0, 190.0, 3520.0}) {
        for (double hours : {1.0, 24.0, 168.0}) {
            std::vector<profiles::PowerSample> s;
            const auto n = static_cast<long>(hours * 3600.0);
            s.reserve(static_cast<std::size_t>(n) + 1);
            for (long i = 0; i <= n; ++i) s.push_back({static_cast<double>(i), p});
            const double want = p * hours / 1000.0;
            worst = std::max(worst, std::abs(profiles::integrate_energy(s) - want) / want);
        }
    }
    std::vector<profiles::PowerSample> s;
    for (int i = 0; i <= 86400; ++i) s.push_back({static_cast<double>(i), static_cast<double>((i * 7919) % 3521)});
    const std::span<const profiles::PowerSample> all(s);
    bool additive = true;
    for (std::size_t cut : {1u, 3600u, 43200u, 86399u}) {
        additive = additive && profiles::integrate_energy_ws(all) ==
                                   profiles::integrate_energy_ws(all.first(cut + 1)) + profiles::integrate_energy_ws(all.subspan(cut));
    }
    report("energy integration", worst <= 1e-6 && additive,
           "max relative error " + std::to_string(worst) + ", partition additivity " + (additive ? "exact" : "broken"));
}

int run_cli(const fs::path& out) {
    const std::string cmd = std::string("\"") + HEMS_CLI_PATH + "\" run --out \"" + out.string() + "\" > \"" +
                            (out.string() + ".stdout") + "\" 2>&1";
    return std::system(cmd.c_str());
}

void determinism(const fs::path& work) {
    const auto a = work / "run_a";
    const auto b = work / "run_b";
    fs::remove_all(a);
    fs::remove_all(b);
    const int ra = run_cli(a);
    const int rb = run_cli(b);
    const auto ja = slurp(a / "report.json");
    const auto jb = slurp(b / "report.json");
    const bool same = ra == 0 && rb == 0 && !ja.empty() && ja == jb;

    bool replay_ok = false;
    std::string detail;
    try {
        const auto report = nlohmann::json::parse(ja);
        std::ifstream in(a / "run.log");
        const auto r = center::replay_log(in);
        replay_ok = true;
        double total = 0.0;
        for (const auto& row : report["appliances"]) {
            const auto* live = r.state.find(row["appliance"].get<std::string>());
            const double want = row["online_kwh"].get<double>();
            replay_ok = replay_ok && live && live->energy_kwh == want;
            if (live) total += live->energy_kwh;
        }
        detail = "replayed " + std::to_string(r.lines) + " lines, total " + num(total, 6) + " kWh";
    } catch (const std::exception& e) {
        detail = std::string("replay failed: ") + e.what();
    }
    report("determinism", same && replay_ok,
           std::string("report.json ") + (same ? "byte-identical" : "differs") + " across two runs, " + detail +
               (replay_ok ? " matching the report" : " not matching the report"));
}

void conservation(const experiment::ExperimentConfig& cfg) {
    center::NullSink sink;
    experiment::Simulation sim(cfg, {experiment::Mode::Offline, cfg.seed, false}, sink);
    sim.run(cfg.duration_ticks);
    bool conserved = true;
    std::uint64_t emitted = 0;
    for (const auto& n : sim.summary().nodes) {
        conserved = conserved && n.emitted == n.persisted && n.emitted > 0;
        emitted += n.emitted;
    }

    radio::ChannelModel channel({}, cfg.seed);
    const radio::Frame f{NodeId{1}, kCoordinatorId, 0, radio::FrameKind::Reading, {}};
    int delivered = 0;
    for (int i = 0; i < 10000; ++i) delivered += radio::delivered(channel.transmit({NodeId{1}, 18.0, false}, f, SimTime{}));
    const bool binomial = std::abs(delivered - 5000) <= 150;

    report("end-to-end conservation", conserved && binomial,
           std::to_string(emitted) + " readings emitted and persisted over a week; at 18 m " + std::to_string(delivered) +
               "/10000 delivered (5000 +/- 150)");
}

void relay(const experiment::ExperimentConfig& cfg) {
    const auto c = verify::relay_safety(cfg);
    report("relay safety", c.pass, c.detail);
}

void emergent(experiment::ExperimentConfig cfg) {
    const auto with = experiment::run_experiment(cfg, experiment::Mode::OnlineEmergent, cfg.seed);
    cfg.rules.clear();
    const auto without = experiment::run_experiment(cfg, experiment::Mode::OnlineEmergent, cfg.seed);
    const bool positive = with.report.total.reduction_kwh > 0.0;
    const bool neutral = without.report.total.reduction_kwh == 0.0;
    report("emergent mode", positive && neutral,
           "Off-only rules save " + num(with.report.total.reduction_kwh, 3) + " kWh (" +
               num(with.report.total.reduction_percent, 2) + "%), an empty rule set saves " +
               num(without.report.total.reduction_kwh, 3) + " kWh");
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "hems_acceptance";
    fs::create_directories(work);
    const auto cfg = experiment::default_fixture();

    weekly(cfg);
    presence();
    rssi();
    calibration();
    integration();
    determinism(work);
    conservation(cfg);
    relay(cfg);
    emergent(cfg);

    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criterion(s) failed") << std::endl;
    return failures == 0 ? 0 : 1;
}

#include <doctest.h>

#include <json.hpp>

#include "hems/experiment.hpp"

using namespace hems;
using namespace hems::experiment;

namespace {

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::Config);
        return e.what();
    }
    FAIL("config accepted");
    return {};
}

std::string fixture_with(const std::function<void(nlohmann::json&)>& edit) {
    auto j = nlohmann::json::parse(default_fixture_json());
    edit(j);
    return j.dump();
}

}  // namespace

TEST_CASE("shipped fixture parses") {
    const auto cfg = default_fixture();
    CHECK(cfg.appliances.size() == 6);
    CHECK(cfg.nodes.size() == 9);
    CHECK(cfg.usage.size() == 5);
    CHECK(cfg.find_appliance("TV")->spec.on_power_w() == 190.0);
    CHECK(cfg.find_usage("Washing machine") == nullptr);
    CHECK(cfg.tokens.size() == 2);
    for (const auto& n : cfg.nodes) CHECK(n.distance_m <= 15.0);
}

TEST_CASE("fixture usage hours reproduce the weekly kWh") {
    const auto cfg = default_fixture();
    const std::pair<const char*, double> want[] = {
        {"Light bulb", 1.5}, {"Fan", 2.9}, {"Computer", 1.07}, {"TV", 28.05}, {"Air conditioner", 273.22}};
    for (const auto& [name, kwh] : want) {
        CAPTURE(name);
        CHECK(profiles::weekly_profile(cfg.find_appliance(name)->spec, *cfg.find_usage(name)) ==
              doctest::Approx(kwh).epsilon(0.001));
    }
}

TEST_CASE("config errors name the field") {
    CHECK(config_error("{") .find("config: not valid JSON") == 0);
    CHECK(config_error(fixture_with([](auto& j) { j["appliances"][2]["watts"] = -1; })).find("appliances[2].watts") == 0);
    CHECK(config_error(fixture_with([](auto& j) { j["appliances"][0]["node"] = 7; })).find("appliances[0].node") == 0);
    CHECK(config_error(fixture_with([](auto& j) { j["nodes"][1]["kind"] = "toaster"; })).find("nodes[1].kind") == 0);
    CHECK(config_error(fixture_with([](auto& j) { j["usage"][0]["intervals"][0]["on"] = "25:00"; }))
              .find("usage[0].intervals[0].on") == 0);
    CHECK(config_error(fixture_with([](auto& j) { j["rules"][0]["target"] = "Toaster"; })).find("rules[0]") == 0);
    CHECK(config_error(fixture_with([](auto& j) { j["mode"] = "sideways"; })).find("mode") == 0);
    CHECK(config_error(fixture_with([](auto& j) { j["environment"]["temperature_c"] = {1, 2}; }))
              .find("environment.temperature_c") == 0);
    CHECK(config_error(fixture_with([](auto& j) { j["tokens"][0]["scope"] = "root"; })).find("tokens[0].scope") == 0);
}

TEST_CASE("modes by name") {
    CHECK(mode_from_string("online-emergent") == Mode::OnlineEmergent);
    CHECK(to_string(Mode::OnlineCalibrated) == "online-calibrated");
    CHECK_THROWS_AS(mode_from_string("x"), Error);
}

TEST_CASE("loss-free week conserves every reading") {
    const auto cfg = default_fixture();
    center::NullSink sink;
    Simulation sim(cfg, {Mode::Offline, 7, false}, sink);
    sim.run(cfg.duration_ticks);
    const auto s = sim.summary();
    CHECK(s.ticks == 604800);
    for (const auto& n : s.nodes) {
        CAPTURE(n.node.value);
        CHECK(n.emitted == 604800 / cfg.report_interval_ticks);
        CHECK(n.delivered == n.emitted);
        CHECK(n.persisted == n.emitted);
    }
    CHECK(s.commands == 0);

    // Metered energy agrees with the schedule arithmetic.
    for (const auto& [name, kwh] : s.kwh) {
        CAPTURE(name);
        const auto want = profiles::weekly_profile(cfg.find_appliance(name)->spec, *cfg.find_usage(name));
        CHECK(kwh == doctest::Approx(want).epsilon(0.005));
    }
}

TEST_CASE("lossy links lose readings but never invent them") {
    auto cfg = default_fixture();
    cfg.nodes[0].distance_m = 18.0;
    cfg.duration_ticks = 6000;
    center::NullSink sink;
    Simulation sim(cfg, {Mode::Offline, 3, false}, sink);
    sim.run(cfg.duration_ticks);
    const auto s = sim.summary();
    CHECK(s.nodes[0].delivered < s.nodes[0].emitted);
    CHECK(s.nodes[0].delivered > 0);
    CHECK(s.nodes[0].persisted == s.nodes[0].delivered);
    const auto k = sim.coordinator().counters(NodeId{1});
    CHECK(k.forwarded == s.nodes[0].delivered);
    // Gaps seen by the coordinator exclude losses before the first and after the last delivery.
    CHECK(k.dropped <= s.nodes[0].emitted - s.nodes[0].delivered);
    CHECK(k.duplicates == 0);
}

TEST_CASE("emergent rules cut consumption; no rules change nothing") {
    auto cfg = default_fixture();
    const auto emergent = run_experiment(cfg, Mode::OnlineEmergent, cfg.seed);
    REQUIRE(emergent.online);
    CHECK(emergent.report.total.reduction_kwh > 0.0);
    CHECK(emergent.online->rule_commands > 0);
    for (const auto& row : emergent.report.rows) CHECK(row.reduction_kwh >= 0.0);

    cfg.rules.clear();
    const auto idle = run_experiment(cfg, Mode::OnlineEmergent, cfg.seed);
    for (const auto& row : idle.report.rows) CHECK(row.online_kwh == row.offline_kwh);
    CHECK(idle.report.total.reduction_kwh == 0.0);
    CHECK(idle.online->commands == 0);
}

TEST_CASE("remote on for the washing machine trips the relay") {
    const auto cfg = default_fixture();
    center::MemorySink sink;
    Simulation sim(cfg, {Mode::Offline, 1, false}, sink);
    sim.run(10);
    const auto t = sim.center().submit_user_command("Washing machine", SwitchState::On, "test");
    sim.run(1);
    CHECK(sim.center().command_outcome(t)->outcome == center::Outcome::OverCurrent);
    CHECK(sim.home().appliance("Washing machine").sw == SwitchState::Off);
    sim.run(120);
    CHECK(sim.center().live_state().find("Washing machine")->power_w == 0.0);
}

TEST_CASE("user off command reaches the appliance") {
    const auto cfg = default_fixture();
    center::NullSink sink;
    Simulation sim(cfg, {Mode::Offline, 1, false}, sink);
    sim.run(3 * 3600 + 5);  // TV switched on at 01:00
    REQUIRE(sim.home().appliance("TV").sw == SwitchState::On);
    const auto t = sim.center().submit_user_command("TV", SwitchState::Off, "test");
    sim.run(1);
    CHECK(sim.center().command_outcome(t)->outcome == center::Outcome::Delivered);
    CHECK(sim.home().appliance("TV").sw == SwitchState::Off);
    sim.run(60);
    CHECK(sim.center().live_state().find("TV")->power_w == 0.0);
}

TEST_CASE("identical seeds give identical reports") {
    auto cfg = default_fixture();
    cfg.duration_ticks = 2 * kSecondsPerDay;
    const auto a = report_json(run_experiment(cfg, Mode::OnlineEmergent, 5));
    const auto b = report_json(run_experiment(cfg, Mode::OnlineEmergent, 5));
    CHECK(a == b);
    const auto c = report_json(run_experiment(cfg, Mode::OnlineEmergent, 6));
    CHECK(a != c);
}

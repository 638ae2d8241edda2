#include <doctest.h>

#include "hems/policy.hpp"

using namespace hems;
using namespace hems::policy;

namespace {

center::LiveState home(double temp = 25.0) {
    center::LiveState live;
    live.tick_seconds = 1.0;
    live.appliances = {{"Light bulb", NodeId{1}, SwitchState::On, 72.0, 0.0, SimTime{0}, 1},
                       {"Fan", NodeId{2}, SwitchState::Off, 0.0, 0.0, SimTime{0}, 1},
                       {"TV", NodeId{4}, SwitchState::On, 190.0, 0.0, SimTime{0}, 1}};
    live.environment.temperature_c = temp;
    live.environment.luminosity_lux = 82.0;
    live.environment.presence = true;
    return live;
}

PolicyRule absence(std::string id, std::string target, double seconds = 600) {
    return {std::move(id), {PresenceFor{false, seconds}}, std::move(target), SwitchState::Off, RuleMode::Automatic};
}

}  // namespace

TEST_CASE("absence for ten minutes turns the bulb off") {
    auto live = home();
    live.environment.presence = false;
    live.environment.presence_since = SimTime{1000};
    const std::vector<PolicyRule> rules{absence("empty-room", "Light bulb")};

    live.as_of = SimTime{1000 + 599};
    CHECK(evaluate_policies(rules, live).actions.empty());
    live.as_of = SimTime{1000 + 660};
    const auto e = evaluate_policies(rules, live);
    REQUIRE(e.actions.size() == 1);
    CHECK(e.actions[0] == IntendedAction{"empty-room", "Light bulb", SwitchState::Off});
}

TEST_CASE("presence resets the absence clock") {
    auto live = home();
    live.environment.presence = true;
    live.as_of = SimTime{10000};
    CHECK(evaluate_policies(std::vector{absence("r", "Light bulb")}, live).actions.empty());
}

TEST_CASE("no flapping when already in the target state") {
    auto live = home();
    live.environment.presence = false;
    live.as_of = SimTime{5000};
    live.appliances[0].state = SwitchState::Off;
    CHECK(evaluate_policies(std::vector{absence("r", "Light bulb")}, live).actions.empty());
}

TEST_CASE("first rule wins a target") {
    auto live = home();
    live.environment.presence = false;
    live.as_of = SimTime{5000};
    std::vector<PolicyRule> rules{absence("first", "TV"), absence("second", "TV"), absence("bulb", "Light bulb")};
    const auto e = evaluate_policies(rules, live);
    REQUIRE(e.actions.size() == 2);
    CHECK(e.actions[0].rule_id == "first");
    CHECK(e.actions[1].rule_id == "bulb");
    REQUIRE(e.suppressed.size() == 1);
    CHECK(e.suppressed[0].rule_id == "second");
}

TEST_CASE("thresholds and hysteresis") {
    const std::vector<PolicyRule> rules{
        {"hot", {Threshold{Quantity::Temperature, "", Comparison::AtLeast, 34.0, 1.0}}, "Fan", SwitchState::On, RuleMode::Automatic}};
    Latches latches;
    auto step = [&](double temp) {
        auto e = evaluate_policies(rules, home(temp), latches);
        latches = e.latches;
        return e.actions.size();
    };
    CHECK(step(33.0) == 0);
    CHECK(step(34.2) == 1);
    CHECK(step(34.5) == 0);  // latched
    CHECK(step(33.5) == 0);  // inside the band
    CHECK(step(34.1) == 0);
    CHECK(step(32.9) == 0);  // released
    CHECK(step(34.0) == 1);
}

TEST_CASE("threshold without band fires every time") {
    const std::vector<PolicyRule> rules{
        {"bright", {Threshold{Quantity::Luminosity, "", Comparison::AtLeast, 300.0, 0.0}}, "Light bulb", SwitchState::Off,
         RuleMode::Automatic}};
    auto live = home();
    live.environment.luminosity_lux = 330.0;
    CHECK(evaluate_policies(rules, live).actions.size() == 1);
    CHECK(evaluate_policies(rules, live).actions.size() == 1);
    live.environment.luminosity_lux.reset();
    CHECK(evaluate_policies(rules, live).actions.empty());
}

TEST_CASE("power threshold and time window") {
    const std::vector<PolicyRule> rules{{"tv-night",
                                         {Threshold{Quantity::Power, "TV", Comparison::AtLeast, 100.0, 0.0},
                                          TimeWindow{23 * 3600, 6 * 3600}},
                                         "TV",
                                         SwitchState::Off,
                                         RuleMode::Automatic}};
    auto live = home();
    live.as_of = SimTime{22 * 3600};
    CHECK(evaluate_policies(rules, live).actions.empty());
    live.as_of = SimTime{23 * 3600 + 5};
    CHECK(evaluate_policies(rules, live).actions.size() == 1);
    live.as_of = SimTime{86400 + 3 * 3600};
    CHECK(evaluate_policies(rules, live).actions.size() == 1);
    live.appliances[2].power_w = 50.0;
    CHECK(evaluate_policies(rules, live).actions.empty());
}

TEST_CASE("advisory rules only notify") {
    const std::vector<PolicyRule> rules{
        {"hot", {Threshold{Quantity::Temperature, "", Comparison::AtLeast, 34.0, 0.0}}, "Fan", SwitchState::On, RuleMode::Advisory}};
    const auto e = evaluate_policies(rules, home(35.0));
    CHECK(e.actions.empty());
    REQUIRE(e.notifications.size() == 1);
    CHECK(e.notifications[0].appliance == "Fan");
}

TEST_CASE("evaluation is pure") {
    auto live = home(35.0);
    live.environment.presence = false;
    live.as_of = SimTime{4000};
    const std::vector<PolicyRule> rules{
        absence("a", "TV"),
        {"hot", {Threshold{Quantity::Temperature, "", Comparison::AtLeast, 34.0, 1.0}}, "Fan", SwitchState::On, RuleMode::Automatic}};
    const auto a = evaluate_policies(rules, live);
    const auto b = evaluate_policies(rules, live);
    CHECK(a.actions == b.actions);
    CHECK(a.latches == b.latches);
}

TEST_CASE("rule validation") {
    const std::vector<std::string> names{"TV", "Fan"};
    CHECK_NOTHROW(validate(absence("ok", "TV"), names));
    try {
        validate(absence("ghost", "Toaster"), names);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnknownAppliance);
    }
    PolicyRule empty{"e", {}, "TV", SwitchState::Off, RuleMode::Automatic};
    CHECK_THROWS_AS(validate(empty, names), Error);
    PolicyRule band{"b", {Threshold{Quantity::Temperature, "", Comparison::AtLeast, 30, -1}}, "TV", SwitchState::Off,
                    RuleMode::Automatic};
    CHECK_THROWS_AS(validate(band, names), Error);
}

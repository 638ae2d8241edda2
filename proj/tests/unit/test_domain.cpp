#include <doctest.h>

#include "hems/domain.hpp"

using namespace hems;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::Config;
}

}  // namespace

TEST_CASE("appliance spec validation") {
    ApplianceSpec tv{"TV", "Samsung", "LCD 450", 54.0, NodeId{1}};
    CHECK(&validate_appliance(tv, NodeKind::EnergyConsumption) == &tv);

    ApplianceSpec fan{"Fan", "Samurai", "Max Air FS", 52.0, NodeId{4}};
    CHECK(code_of([&] { validate_appliance(fan, NodeKind::Presence); }) == Errc::NodeKindMismatch);

    ApplianceSpec broken = tv;
    broken.rated_power_w = 0.0;
    CHECK(code_of([&] { validate_appliance(broken, NodeKind::EnergyConsumption); }) == Errc::NonPositivePower);
    broken.rated_power_w = -3.0;
    CHECK(code_of([&] { validate_appliance(broken, NodeKind::EnergyConsumption); }) == Errc::NonPositivePower);
}

TEST_CASE("effective power overrides the nameplate") {
    ApplianceSpec tv{"TV", "Samsung", "LCD 450", 54.0, NodeId{1}};
    CHECK(tv.on_power_w() == 54.0);
    tv.effective_power_w = 190.0;
    CHECK(tv.on_power_w() == 190.0);
}

TEST_CASE("electrical sample power is V*I*PF") {
    const auto s = ElectricalSample::measured(3.18, 127.0, 1.0, 0.0);
    CHECK(s.power_w == doctest::Approx(403.86).epsilon(1e-12));
    CHECK_NOTHROW(validate(s));

    auto bad = s;
    bad.power_w += 1.0;
    CHECK(code_of([&] { validate(bad); }) == Errc::InvalidRecord);
}

TEST_CASE("environment sample bounds") {
    CHECK_NOTHROW(validate(EnvironmentSample{30.0, 40.0, 155.0, true}));
    CHECK(code_of([] { validate(EnvironmentSample{30.0, 101.0, 0.0, false}); }) == Errc::InvalidRecord);
    CHECK(code_of([] { validate(EnvironmentSample{30.0, 50.0, -1.0, false}); }) == Errc::InvalidRecord);
}

TEST_CASE("names round trip") {
    for (auto k : kAllNodeKinds) CHECK(node_kind_from_string(to_string(k)) == k);
    CHECK(code_of([] { node_kind_from_string("toaster"); }) == Errc::UnknownKind);
    CHECK(switch_state_from_string("on") == SwitchState::On);
    CHECK(switch_state_from_string("OFF") == SwitchState::Off);
    CHECK(to_string(Errc::OverCurrent) == "OverCurrent");
}

TEST_CASE("sim time") {
    CHECK(SimTime{90}.seconds(0.5) == 45.0);
    CHECK(SimTime{1} < SimTime{2});
    CHECK(kSecondsPerWeek == 604800);
}

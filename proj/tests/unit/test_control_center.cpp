#include <doctest.h>

#include <thread>

#include "hems/control_center.hpp"
#include <set>

using namespace hems;
using namespace hems::center;

namespace {

std::vector<ApplianceSpec> appliances() {
    return {{"Light bulb", "Phillips", "E27-A55", 72.0, NodeId{1}}, {"TV", "Samsung", "LCD 450", 54.0, NodeId{4}, 190.0}};
}

std::vector<NodeInfo> nodes() {
    return {{NodeId{1}, NodeKind::EnergyConsumption}, {NodeId{4}, NodeKind::EnergyConsumption},
            {NodeId{7}, NodeKind::TemperatureHumidity}, {NodeId{9}, NodeKind::Presence}};
}

ReadingRecord energy(std::uint8_t node, std::uint64_t tick, double watts, double kwh) {
    return {NodeId{node}, NodeKind::EnergyConsumption, SimTime{tick}, ElectricalSample::measured(watts / 100.0, 100.0, 1.0, kwh), -39};
}

ReadingRecord presence(std::uint64_t tick, bool present) {
    return {NodeId{9}, NodeKind::Presence, SimTime{tick}, EnvironmentSample{0, 0, 0, present}, -39};
}

Outcome deliver_all(const radio::Frame&, const ApplianceSpec&) { return Outcome::Delivered; }

}  // namespace

TEST_CASE("construction checks the installation") {
    MemorySink sink;
    auto bad = appliances();
    bad[1].node = NodeId{7};
    CHECK_THROWS_AS(ControlCenter(bad, nodes(), sink), Error);
    bad = appliances();
    bad[1].node = NodeId{5};
    CHECK_THROWS_AS(ControlCenter(bad, nodes(), sink), Error);
}

TEST_CASE("ingest updates the live cache and persists") {
    MemorySink sink;
    ControlCenter c(appliances(), nodes(), sink);
    c.write_header();
    CHECK(c.ingest(energy(1, 10, 72.0, 0.0002)) == 0);
    CHECK(c.ingest(presence(10, true)) == 1);
    const auto live = c.live_state();
    const auto* bulb = live.find("Light bulb");
    REQUIRE(bulb);
    CHECK(bulb->state == SwitchState::On);
    CHECK(bulb->power_w == doctest::Approx(72.0));
    CHECK(bulb->readings == 1);
    CHECK_FALSE(live.find("TV")->state.has_value());
    CHECK(live.environment.presence == true);
    CHECK(live.cursor == 2);
    CHECK(sink.lines().size() == 3);
    CHECK(c.persisted(NodeId{1}) == 1);
}

TEST_CASE("ingest rejects bad records without side effects") {
    MemorySink sink;
    ControlCenter c(appliances(), nodes(), sink);
    ReadingRecord stranger = energy(3, 0, 1, 0);
    try {
        c.ingest(stranger);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnknownNode);
    }
    auto wrong = presence(0, true);
    wrong.node = NodeId{7};
    CHECK_THROWS_AS(c.ingest(wrong), Error);
    c.ingest(energy(1, 5, 72, 0.5));
    CHECK_THROWS_AS(c.ingest(energy(1, 6, 72, 0.4)), Error);
    CHECK(c.event_count() == 1);
}

TEST_CASE("storage failure leaves the cache untouched") {
    MemorySink sink;
    ControlCenter c(appliances(), nodes(), sink);
    c.ingest(energy(1, 0, 72, 0.1));
    sink.fail_after(0);
    try {
        c.ingest(energy(1, 1, 0, 0.2));
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::StorageFailure);
    }
    const auto live = c.live_state();
    CHECK(live.find("Light bulb")->energy_kwh == 0.1);
    CHECK(live.find("Light bulb")->state == SwitchState::On);
    CHECK(live.cursor == 1);
}

TEST_CASE("history buckets") {
    NullSink sink;
    ControlCenter c(appliances(), nodes(), sink);
    // A reading at tick t closes energy metered through t+1 seconds.
    double kwh = 0.0;
    for (std::uint64_t t = 59; t < 7200; t += 60) {
        kwh += 72.0 * 60 / 3.6e6;
        c.ingest(energy(1, t, 72.0, kwh));
    }
    const auto h = c.query_history("Light bulb", 0, 7200, 3600);
    REQUIRE(h.size() == 2);
    CHECK(h[0].kwh == doctest::Approx(0.072));
    CHECK(h[0].avg_w == doctest::Approx(72.0));
    CHECK(h[0].samples == 60);
    CHECK(h[1].kwh == doctest::Approx(0.072));

    const auto ragged = c.query_history("Light bulb", 0, 5400, 3600);
    REQUIRE(ragged.size() == 2);
    CHECK(ragged[1].to_s == 5400);
    CHECK(ragged[1].kwh == doctest::Approx(0.036));

    double total = 0.0;
    for (const auto& p : c.query_history("Light bulb", 0, 7200, 700)) total += p.kwh;
    CHECK(total == doctest::Approx(kwh));

    CHECK(c.query_history("TV", 0, 3600, 60).size() == 60);
    CHECK(c.query_history("TV", 0, 0, 60).empty());
    CHECK_THROWS_AS(c.query_history("Toaster", 0, 10, 1), Error);
    CHECK_THROWS_AS(c.query_history("TV", 10, 0, 1), Error);
    CHECK_THROWS_AS(c.query_history("TV", 0, 10, 0), Error);
}

TEST_CASE("commands update state only when delivered") {
    MemorySink sink;
    ControlCenter c(appliances(), nodes(), sink);
    c.ingest(energy(4, 0, 190, 0.01));

    const auto dropped = c.dispatch("TV", SwitchState::Off, Origin{OriginKind::User, "s"}, SimTime{1},
                                    [](const radio::Frame&, const ApplianceSpec&) { return Outcome::Dropped; });
    CHECK(dropped.outcome == Outcome::Dropped);
    CHECK(c.live_state().find("TV")->state == SwitchState::On);

    radio::Frame seen;
    const auto ok = c.dispatch("TV", SwitchState::Off, Origin{OriginKind::User, "s"}, SimTime{2},
                               [&](const radio::Frame& f, const ApplianceSpec&) {
                                   seen = f;
                                   return Outcome::Delivered;
                               });
    CHECK(ok.outcome == Outcome::Delivered);
    CHECK(seen.dst == NodeId{4});
    CHECK(seen.kind == radio::FrameKind::Command);
    CHECK(seen.payload == std::vector<std::uint8_t>{0});
    const auto tv = *c.live_state().find("TV");
    CHECK(tv.state == SwitchState::Off);
    CHECK(tv.power_w == 0.0);
    CHECK(ok.ticket > dropped.ticket);
}

TEST_CASE("user commands supersede rule actions in the same tick") {
    MemorySink sink;
    ControlCenter c(appliances(), nodes(), sink);
    const auto t = c.submit_user_command("TV", SwitchState::On, "phone");
    const auto user = c.drain_user_commands();
    REQUIRE(user.size() == 1);
    CHECK(c.drain_user_commands().empty());
    const std::vector<policy::IntendedAction> rules{{"empty-room", "TV", SwitchState::Off}, {"empty-room", "Light bulb", SwitchState::Off}};
    const auto log = c.dispatch_tick(SimTime{3}, user, rules, deliver_all);
    REQUIRE(log.size() == 3);
    CHECK(log[0].ticket == t);
    CHECK(log[0].origin.kind == OriginKind::User);
    CHECK(log[1].outcome == Outcome::Superseded);
    CHECK(log[2].outcome == Outcome::Delivered);
    CHECK(c.live_state().find("TV")->state == SwitchState::On);
    CHECK(c.command_outcome(t)->outcome == Outcome::Delivered);
    CHECK_THROWS_AS(c.submit_user_command("Toaster", SwitchState::On, "x"), Error);
}

TEST_CASE("tickets are unique across threads") {
    NullSink sink;
    ControlCenter c(appliances(), nodes(), sink);
    std::vector<std::thread> ts;
    for (int i = 0; i < 8; ++i) {
        ts.emplace_back([&] {
            for (int k = 0; k < 100; ++k) c.submit_user_command("TV", SwitchState::On, "t");
        });
    }
    for (auto& t : ts) t.join();
    auto all = c.drain_user_commands();
    std::set<std::uint64_t> tickets;
    for (const auto& u : all) tickets.insert(u.ticket);
    CHECK(tickets.size() == 800);
}

TEST_CASE("waiting for a command outcome") {
    NullSink sink;
    ControlCenter c(appliances(), nodes(), sink);
    const auto t = c.submit_user_command("Light bulb", SwitchState::On, "s");
    CHECK_FALSE(c.wait_command_outcome(t, std::chrono::milliseconds(10)));
    std::thread loop([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        c.dispatch_tick(SimTime{1}, c.drain_user_commands(), {}, deliver_all);
    });
    const auto got = c.wait_command_outcome(t, std::chrono::seconds(5));
    loop.join();
    REQUIRE(got);
    CHECK(got->outcome == Outcome::Delivered);
}

TEST_CASE("manual switches are logged but do not move live state") {
    MemorySink sink;
    ControlCenter c(appliances(), nodes(), sink);
    c.record_manual_switch("TV", SwitchState::On, SimTime{5});
    const auto log = c.command_log();
    REQUIRE(log.size() == 1);
    CHECK(log[0].origin == Origin{OriginKind::Manual, "local"});
    CHECK_FALSE(c.live_state().find("TV")->state.has_value());
}

TEST_CASE("event stream ordering and cursor replay") {
    NullSink sink;
    ControlCenter c(appliances(), nodes(), sink);
    std::vector<std::uint64_t> pushed;
    const int sub = c.subscribe([&](const StreamEvent& e) { pushed.push_back(e.cursor); });
    for (std::uint64_t t = 0; t < 20; ++t) c.ingest(energy(1, t, 72, 0.001 * static_cast<double>(t)));
    c.unsubscribe(sub);
    c.ingest(energy(1, 20, 72, 0.1));
    CHECK(pushed.size() == 20);
    for (std::size_t i = 0; i < pushed.size(); ++i) CHECK(pushed[i] == i);

    const auto tail = c.events_since(10);
    REQUIRE(tail.size() == 11);
    for (std::size_t i = 0; i < tail.size(); ++i) CHECK(tail[i].cursor == 10 + i);
    CHECK(tail[0].type == "reading");
    CHECK(tail[0].appliance == "Light bulb");
    CHECK(c.events_since(10, 3).size() == 3);
    CHECK(c.wait_events(5, std::chrono::milliseconds(1)));
    CHECK_FALSE(c.wait_events(21, std::chrono::milliseconds(1)));
}

TEST_CASE("advisories are published, not dispatched") {
    NullSink sink;
    ControlCenter c(appliances(), nodes(), sink);
    c.notify_advisory({"hot", "TV", SwitchState::On}, SimTime{4});
    CHECK(c.advisories() == 1);
    CHECK(c.command_log().empty());
    CHECK(c.events_since(0)[0].type == "advisory");
}

TEST_CASE("concurrent readers see consistent snapshots") {
    NullSink sink;
    ControlCenter c(appliances(), nodes(), sink);
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::thread reader([&] {
        while (!done) {
            c.with_live_state([&](const LiveState& l) {
                const auto* b = l.find("Light bulb");
                if (b->readings > 0 && b->energy_kwh != 0.001 * static_cast<double>(b->readings)) ++bad;
            });
        }
    });
    for (std::uint64_t t = 1; t <= 5000; ++t) c.ingest(energy(1, t, 72, 0.001 * static_cast<double>(t)));
    done = true;
    reader.join();
    CHECK(bad == 0);
}

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hems/records.hpp"

using namespace hems;
using namespace hems::center;

TEST_CASE("reading lines keep field order and round trip") {
    ReadingRecord r{NodeId{1}, NodeKind::EnergyConsumption, SimTime{59}, ElectricalSample::measured(0.567, 127.004, 1.0, 0.0012), -39.0};
    const auto line = to_log_line(r);
    CHECK(line.rfind(R"({"ts":59,"node":1,"kind":"energy","payload":{"current_a":0.567,)", 0) == 0);
    CHECK(line.find(R"("rssi":-39.0})") != std::string::npos);
    const auto back = std::get<ReadingRecord>(parse_log_line(line));
    CHECK(std::get<ElectricalSample>(back.payload) == std::get<ElectricalSample>(r.payload));
    CHECK(back.time == r.time);
    CHECK(back.rssi_dbm == -39.0);

    ReadingRecord env{NodeId{9}, NodeKind::Presence, SimTime{3}, EnvironmentSample{0, 0, 0, true}, -40.4};
    CHECK(std::get<EnvironmentSample>(std::get<ReadingRecord>(parse_log_line(to_log_line(env))).payload).presence);
}

TEST_CASE("command and header lines round trip") {
    CommandLogEntry c{7, SimTime{100}, "TV", NodeId{4}, SwitchState::Off, Origin{OriginKind::Rule, "empty-room"}, Outcome::Delivered};
    CHECK(std::get<CommandLogEntry>(parse_log_line(to_log_line(c))) == c);

    LogHeader h{1.0, {{"TV", "Samsung", "LCD 450", 54.0, NodeId{4}, 190.0, 1.0}}, {{NodeId{4}, NodeKind::EnergyConsumption}}};
    const auto back = std::get<LogHeader>(parse_log_line(to_log_line(h)));
    CHECK(back.appliances.size() == 1);
    CHECK(back.appliances[0].on_power_w() == 190.0);
    CHECK(back.nodes[0].kind == NodeKind::EnergyConsumption);
}

TEST_CASE("malformed lines") {
    for (const char* bad : {"", "{", "[]", R"({"ts":1})", R"({"ts":1,"node":1,"kind":"toaster","payload":{},"rssi":0})",
                            R"({"ts":1,"node":300,"kind":"presence","payload":{"temperature_c":0,"humidity_pct":0,"luminosity_lux":0,"presence":true},"rssi":0})",
                            R"({"ts":1,"node":1,"kind":"energy","payload":{"current_a":1,"voltage_v":1,"power_factor":1,"power_w":5,"energy_kwh":0},"rssi":0})"}) {
        CAPTURE(bad);
        try {
            parse_log_line(bad);
            FAIL("parsed");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::InvalidRecord);
        }
    }
}

TEST_CASE("record validation ties payload to kind") {
    ReadingRecord r{NodeId{1}, NodeKind::Luminosity, SimTime{0}, ElectricalSample{}, 0};
    CHECK_THROWS_AS(validate(r), Error);
}

TEST_CASE("memory sink failure injection") {
    MemorySink s;
    s.fail_after(1);
    s.append(LogHeader{});
    CHECK_THROWS_AS(s.append(LogHeader{}), Error);
    CHECK(s.lines().size() == 1);
}

TEST_CASE("file log appends lines") {
    const auto path = std::filesystem::temp_directory_path() / "hems_records_test.log";
    {
        FileLog log(path.string());
        log.append(LogHeader{});
        log.append(CommandLogEntry{});
        log.flush();
    }
    std::ifstream in(path);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        CHECK_NOTHROW(parse_log_line(line));
        ++n;
    }
    CHECK(n == 2);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(FileLog("/nonexistent-dir/x.log"), Error);
}

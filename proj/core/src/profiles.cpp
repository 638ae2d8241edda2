#include "hems/profiles.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace hems::profiles {

double integrate_energy_ws(std::span<const PowerSample> samples) {
    double ws = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double dt = samples[i].t_s - samples[i - 1].t_s;
        if (!(dt > 0.0)) throw Error(Errc::NonMonotoneTime, "sample timestamps must be strictly increasing");
        ws += samples[i - 1].watts * dt;
    }
    return ws;
}

double integrate_energy(std::span<const PowerSample> samples) { return integrate_energy_ws(samples) / 3.6e6; }

namespace {

int parse_field(std::string_view s, std::string_view whole) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.size() != 2) {
        throw Error(Errc::InvalidProfile, "bad clock time '" + std::string(whole) + "'");
    }
    return v;
}

}  // namespace

int parse_clock(std::string_view text) {
    if (text.size() != 5 && text.size() != 8) throw Error(Errc::InvalidProfile, "bad clock time '" + std::string(text) + "'");
    if (text[2] != ':' || (text.size() == 8 && text[5] != ':')) {
        throw Error(Errc::InvalidProfile, "bad clock time '" + std::string(text) + "'");
    }
    const int h = parse_field(text.substr(0, 2), text);
    const int m = parse_field(text.substr(3, 2), text);
    const int s = text.size() == 8 ? parse_field(text.substr(6, 2), text) : 0;
    if (m > 59 || s > 59 || h > 24 || (h == 24 && (m != 0 || s != 0))) {
        throw Error(Errc::InvalidProfile, "clock time out of range '" + std::string(text) + "'");
    }
    return h * 3600 + m * 60 + s;
}

std::string format_clock(int seconds_of_day) {
    char buf[16];
    const int h = seconds_of_day / 3600;
    const int m = seconds_of_day / 60 % 60;
    const int s = seconds_of_day % 60;
    if (s == 0) {
        std::snprintf(buf, sizeof buf, "%02d:%02d", h, m);
    } else {
        std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", h, m, s);
    }
    return buf;
}

void validate(const UsageProfile& profile) {
    std::vector<UsageInterval> sorted = profile.week;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return std::tie(a.day, a.on_s) < std::tie(b.day, b.on_s); });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& iv = sorted[i];
        const std::string where = profile.appliance + " day " + std::to_string(iv.day) + " " + format_clock(iv.on_s);
        if (iv.day < 0 || iv.day > 6) throw Error(Errc::InvalidProfile, where + ": day must be 0..6");
        if (iv.on_s < 0 || iv.off_s > static_cast<int>(kSecondsPerDay)) {
            throw Error(Errc::InvalidProfile, where + ": time outside the day");
        }
        if (iv.off_s <= iv.on_s) throw Error(Errc::InvalidProfile, where + ": off time must be after on time");
        if (!(iv.load_fraction > 0.0 && iv.load_fraction <= 1.0)) {
            throw Error(Errc::InvalidProfile, where + ": load fraction must be in (0, 1]");
        }
        if (i > 0 && sorted[i - 1].day == iv.day && sorted[i - 1].off_s > iv.on_s) {
            throw Error(Errc::InvalidProfile, where + ": overlaps the previous interval");
        }
    }
}

double weekly_on_hours(const UsageProfile& profile) {
    double s = 0.0;
    for (const auto& iv : profile.week) s += iv.duration_s() * iv.load_fraction;
    return s / 3600.0;
}

double weekly_profile(const ApplianceSpec& appliance, const UsageProfile& usage) {
    return appliance.on_power_w() * weekly_on_hours(usage) / 1000.0;
}

UsageProfile trim_profile(const UsageProfile& usage, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(Errc::InvalidProfile, "trim fraction must be in [0, 1]");
    UsageProfile out{usage.appliance, {}};
    for (auto iv : usage.week) {
        const auto cut = static_cast<int>(std::lround(fraction * iv.duration_s()));
        iv.off_s -= cut;
        if (iv.off_s > iv.on_s) out.week.push_back(iv);
    }
    return out;
}

int ReportRow::display_percent() const { return round_percent(reduction_percent); }

const ReportRow& ConsumptionReport::row(std::string_view appliance) const {
    for (const auto& r : rows) {
        if (r.appliance == appliance) return r;
    }
    throw Error(Errc::UnknownAppliance, "no report row for '" + std::string(appliance) + "'");
}

int round_percent(double percent) { return static_cast<int>(std::floor(percent + 0.5)); }

namespace {

ReportRow make_row(std::string name, double offline, double online) {
    ReportRow r{std::move(name), offline, online, offline - online, 0.0};
    r.reduction_percent = offline > 0.0 ? 100.0 * r.reduction_kwh / offline : 0.0;
    return r;
}

}  // namespace

ConsumptionReport build_report(const KwhByAppliance& offline, const KwhByAppliance& online) {
    std::set<std::string> a, b;
    for (const auto& [name, _] : offline) a.insert(name);
    for (const auto& [name, _] : online) b.insert(name);
    if (a != b || a.size() != offline.size() || b.size() != online.size()) {
        throw Error(Errc::ApplianceSetMismatch, "offline and online reports cover different appliances");
    }

    ConsumptionReport report;
    double off_total = 0.0;
    double on_total = 0.0;
    for (const auto& [name, off] : offline) {
        auto it = std::find_if(online.begin(), online.end(), [&](const auto& p) { return p.first == name; });
        report.rows.push_back(make_row(name, off, it->second));
        off_total += off;
        on_total += it->second;
    }
    report.total = make_row("Weekly total", off_total, on_total);
    return report;
}

std::string render_table(const ConsumptionReport& report) {
    std::ostringstream os;
    auto cell = [&](const std::string& s) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " %16s", s.c_str());
        os << buf;
    };
    auto num = [](double v, int prec) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.*f", prec, v);
        return std::string(buf);
    };
    std::vector<const ReportRow*> cols;
    for (const auto& r : report.rows) cols.push_back(&r);
    cols.push_back(&report.total);

    os << "Comparison                  ";
    for (auto* c : cols) cell(c->appliance);
    os << "\nWithout HEMS [kWh/week]     ";
    for (auto* c : cols) cell(num(c->offline_kwh, 4));
    os << "\nWith HEMS [kWh/week]        ";
    for (auto* c : cols) cell(num(c->online_kwh, 4));
    os << "\nReduction [kWh/week]        ";
    for (auto* c : cols) cell(num(c->reduction_kwh, 4));
    os << "\nPercent decrease            ";
    for (auto* c : cols) cell(std::to_string(c->display_percent()) + "%");
    os << "\n";
    return os.str();
}

}  // namespace hems::profiles

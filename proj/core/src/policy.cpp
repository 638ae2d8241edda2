#include "hems/policy.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace hems::policy {

void validate(const PolicyRule& rule, std::span<const std::string> appliances) {
    auto known = [&](const std::string& name) {
        return std::find(appliances.begin(), appliances.end(), name) != appliances.end();
    };
    if (rule.id.empty()) throw Error(Errc::InvalidRule, "rule without id");
    if (!known(rule.target)) throw Error(Errc::UnknownAppliance, "rule '" + rule.id + "' targets unknown '" + rule.target + "'");
    if (rule.when.empty()) throw Error(Errc::InvalidRule, "rule '" + rule.id + "' has no conditions");
    for (const auto& c : rule.when) {
        if (const auto* t = std::get_if<Threshold>(&c)) {
            if (t->quantity == Quantity::Power && !known(t->appliance)) {
                throw Error(Errc::InvalidRule, "rule '" + rule.id + "' reads power of unknown appliance");
            }
            if (t->band < 0.0) throw Error(Errc::InvalidRule, "rule '" + rule.id + "' has a negative band");
        } else if (const auto* p = std::get_if<PresenceFor>(&c)) {
            if (p->seconds < 0.0) throw Error(Errc::InvalidRule, "rule '" + rule.id + "' has a negative duration");
        } else if (const auto* w = std::get_if<TimeWindow>(&c)) {
            const int day = static_cast<int>(kSecondsPerDay);
            if (w->from_s < 0 || w->from_s > day || w->to_s < 0 || w->to_s > day || w->from_s == w->to_s) {
                throw Error(Errc::InvalidRule, "rule '" + rule.id + "' has an invalid time window");
            }
        }
    }
}

namespace {

std::optional<double> read_quantity(const Threshold& t, const center::LiveState& live) {
    switch (t.quantity) {
    case Quantity::Temperature: return live.environment.temperature_c;
    case Quantity::Humidity: return live.environment.humidity_pct;
    case Quantity::Luminosity: return live.environment.luminosity_lux;
    case Quantity::Power:
        if (const auto* a = live.find(t.appliance); a && a->updated) return a->power_w;
        return std::nullopt;
    }
    return std::nullopt;
}

bool holds(const Condition& c, const center::LiveState& live) {
    if (const auto* t = std::get_if<Threshold>(&c)) {
        auto v = read_quantity(*t, live);
        if (!v) return false;
        return t->comparison == Comparison::AtLeast ? *v >= t->value : *v <= t->value;
    }
    if (const auto* p = std::get_if<PresenceFor>(&c)) {
        const auto& env = live.environment;
        if (!env.presence || *env.presence != p->present) return false;
        const double held = static_cast<double>(live.as_of.ticks - env.presence_since.ticks) * live.tick_seconds;
        return held >= p->seconds;
    }
    const auto& w = std::get<TimeWindow>(c);
    const auto sod = static_cast<int>(static_cast<std::uint64_t>(live.as_of.seconds(live.tick_seconds)) % kSecondsPerDay);
    if (w.from_s < w.to_s) return sod >= w.from_s && sod < w.to_s;
    return sod >= w.from_s || sod < w.to_s;
}

bool has_band(const PolicyRule& rule) {
    return std::any_of(rule.when.begin(), rule.when.end(), [](const Condition& c) {
        const auto* t = std::get_if<Threshold>(&c);
        return t && t->band > 0.0;
    });
}

// A latched rule re-arms once every banded threshold has moved back past its band.
bool released(const PolicyRule& rule, const center::LiveState& live) {
    for (const auto& c : rule.when) {
        const auto* t = std::get_if<Threshold>(&c);
        if (!t || t->band <= 0.0) continue;
        auto v = read_quantity(*t, live);
        if (!v) return false;
        const bool back = t->comparison == Comparison::AtLeast ? *v < t->value - t->band : *v > t->value + t->band;
        if (!back) return false;
    }
    return true;
}

}  // namespace

Evaluation evaluate_policies(std::span<const PolicyRule> rules, const center::LiveState& live, const Latches& latches) {
    Evaluation out;
    out.latches = latches;
    std::set<std::string> claimed;

    for (const auto& rule : rules) {
        const bool banded = has_band(rule);
        if (banded) {
            bool& disarmed = out.latches[rule.id];
            if (disarmed) {
                if (released(rule, live)) disarmed = false;
                continue;
            }
        }

        const bool triggered = std::all_of(rule.when.begin(), rule.when.end(),
                                           [&](const Condition& c) { return holds(c, live); });
        if (!triggered) continue;
        if (banded) out.latches[rule.id] = true;

        const auto* target = live.find(rule.target);
        if (target && target->state == rule.action) continue;

        IntendedAction act{rule.id, rule.target, rule.action};
        if (rule.mode == RuleMode::Advisory) {
            out.notifications.push_back(std::move(act));
        } else if (claimed.contains(rule.target)) {
            out.suppressed.push_back(std::move(act));
        } else {
            claimed.insert(rule.target);
            out.actions.push_back(std::move(act));
        }
    }
    return out;
}

}  // namespace hems::policy

#pragma once

// Automation rules evaluated against the control center's live state.

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hems/domain.hpp"
#include "hems/live_state.hpp"

namespace hems::policy {

enum class Quantity { Temperature, Humidity, Luminosity, Power };
enum class Comparison { AtLeast, AtMost };

/// `band` > 0 adds hysteresis: once the rule has fired it stays quiet until
/// the value has moved back past value -/+ band.
struct Threshold {
    Quantity quantity = Quantity::Temperature;
    std::string appliance;  // only for Quantity::Power
    Comparison comparison = Comparison::AtLeast;
    double value = 0.0;
    double band = 0.0;
};

struct PresenceFor {
    bool present = false;
    double seconds = 0.0;
};

/// Seconds of day; from > to wraps past midnight.
struct TimeWindow {
    int from_s = 0;
    int to_s = 0;
};

using Condition = std::variant<Threshold, PresenceFor, TimeWindow>;

enum class RuleMode { Automatic, Advisory };

struct PolicyRule {
    std::string id;
    std::vector<Condition> when;  // all must hold
    std::string target;
    SwitchState action = SwitchState::Off;
    RuleMode mode = RuleMode::Automatic;
};

void validate(const PolicyRule& rule, std::span<const std::string> appliances);

struct IntendedAction {
    std::string rule_id;
    std::string appliance;
    SwitchState action = SwitchState::Off;

    bool operator==(const IntendedAction&) const = default;
};

/// Rule id -> disarmed. Only rules with a hysteresis band ever appear here.
using Latches = std::map<std::string, bool>;

struct Evaluation {
    std::vector<IntendedAction> actions;
    std::vector<IntendedAction> notifications;  // advisory rules
    std::vector<IntendedAction> suppressed;     // lost to an earlier rule on the same target
    Latches latches;
};

/// Pure: identical (rules, live, latches) always give an identical result.
/// Rules are visited in list order; an Automatic rule whose target is already
/// in the desired state yields nothing.
Evaluation evaluate_policies(std::span<const PolicyRule> rules, const center::LiveState& live,
                             const Latches& latches = {});

}  // namespace hems::policy

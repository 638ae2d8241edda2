#include "hems/experiment.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace hems::experiment {

struct Simulation::Node {
    NodeConfig config;
    const ApplianceConfig* appliance = nullptr;
    sensors::NoiseModel noise;
    profiles::EnergyAccumulator energy;
    sensors::RelayState relay;
    ElectricalSample last;
    std::uint16_t seq = 0;
    std::uint64_t emitted = 0;
    std::uint64_t delivered = 0;
};

namespace {

std::vector<ApplianceSpec> specs_of(const ExperimentConfig& c) {
    std::vector<ApplianceSpec> out;
    for (const auto& a : c.appliances) out.push_back(a.spec);
    return out;
}

std::vector<center::NodeInfo> nodes_of(const ExperimentConfig& c) {
    std::vector<center::NodeInfo> out;
    for (const auto& n : c.nodes) out.push_back({n.id, n.kind});
    return out;
}

double hourly_at(const std::array<double, 24>& v, double seconds_of_day) {
    const double h = seconds_of_day / 3600.0;
    const auto i = static_cast<std::size_t>(h) % 24;
    const double frac = h - std::floor(h);
    return v[i] + (v[(i + 1) % 24] - v[i]) * frac;
}

}  // namespace

Simulation::Simulation(const ExperimentConfig& config, SimulationOptions options, center::RecordSink& sink)
    : config_(config),
      options_(options),
      channel_(config.channel, options.seed),
      coordinator_(kCoordinatorId, config.downlink_retries) {
    validate(config_);
    center_ = std::make_unique<center::ControlCenter>(specs_of(config_), nodes_of(config_), sink,
                                                      center::CenterOptions{config_.tick_seconds, options_.journal});

    for (const auto& a : config_.appliances) sensors::set_switch(home_, a.spec, SwitchState::Off);

    for (const auto& nc : config_.nodes) {
        auto node = std::make_unique<Node>();
        node->config = nc;
        node->noise = sensors::NoiseModel(config_.noise, options_.seed + nc.id.value);
        node->relay.node = nc.id;
        for (const auto& a : config_.appliances) {
            if (a.spec.node == nc.id) {
                node->appliance = &a;
                node->relay.rating = a.relay;
            }
        }
        coordinator_.register_node(nc.id);
        links_[nc.id] = radio::RadioLink{nc.id, nc.distance_m, nc.elevation_bonus};
        nodes_.push_back(std::move(node));
    }

    for (const auto& a : config_.appliances) {
        std::vector<ScheduleEvent> events;
        if (const auto* usage = config_.find_usage(a.spec.name)) {
            const auto profile = options_.mode == Mode::OnlineCalibrated ? profiles::trim_profile(*usage, a.calibrated_trim)
                                                                         : *usage;
            for (const auto& iv : profile.week) {
                const auto day = static_cast<std::uint64_t>(iv.day) * kSecondsPerDay;
                events.push_back({(day + iv.on_s) % kSecondsPerWeek, SwitchState::On, iv.load_fraction});
                events.push_back({(day + iv.off_s) % kSecondsPerWeek, SwitchState::Off, iv.load_fraction});
            }
        }
        // Off before On at the same instant so back-to-back intervals chain.
        std::stable_sort(events.begin(), events.end(), [](const ScheduleEvent& x, const ScheduleEvent& y) {
            if (x.at_s != y.at_s) return x.at_s < y.at_s;
            return x.state == SwitchState::Off && y.state == SwitchState::On;
        });
        schedule_.push_back(std::move(events));
    }
    schedule_pos_.assign(schedule_.size(), 0);

    center_->write_header();
}

Simulation::~Simulation() = default;

void Simulation::apply_schedule(std::uint64_t week_s) {
    if (week_s < last_week_) std::fill(schedule_pos_.begin(), schedule_pos_.end(), 0);
    last_week_ = week_s;
    for (std::size_t i = 0; i < schedule_.size(); ++i) {
        const auto& events = schedule_[i];
        auto& pos = schedule_pos_[i];
        const auto& app = config_.appliances[i];
        while (pos < events.size() && events[pos].at_s <= week_s) {
            const auto& ev = events[pos++];
            const auto& st = home_.appliance(app.spec.name);
            if (st.sw == ev.state && (ev.state == SwitchState::Off || st.load_fraction == ev.load_fraction)) continue;
            sensors::set_switch(home_, app.spec, ev.state, ev.load_fraction);
            for (auto& n : nodes_) {
                if (n->appliance == &app) n->relay.closed = ev.state == SwitchState::On;
            }
            center_->record_manual_switch(app.spec.name, ev.state, now_);
        }
    }
}

void Simulation::update_environment(std::uint64_t t_s) {
    const auto& env = config_.environment;
    const double sod = static_cast<double>(t_s % kSecondsPerDay);
    home_.temperature_c = hourly_at(env.temperature_c, sod);
    home_.humidity_pct = hourly_at(env.humidity_pct, sod);
    home_.illuminance_lux = hourly_at(env.luminosity_lux, sod);

    const int day = static_cast<int>((t_s / kSecondsPerDay) % 7);
    const int s = static_cast<int>(t_s % kSecondsPerDay);
    home_.occupant.reset();
    for (const auto& slot : env.occupancy) {
        if (slot.day == day && slot.from_s <= s && s < slot.to_s) {
            home_.occupant = slot.position;
            break;
        }
    }
}

void Simulation::sample_and_report() {
    const double dt = config_.tick_seconds;
    const bool report = (now_.ticks + 1) % config_.report_interval_ticks == 0;
    for (auto& n : nodes_) {
        sensors::ReadingPayload reading;
        reading.kind = n->config.kind;
        if (n->config.kind == NodeKind::EnergyConsumption) {
            if (!n->appliance) continue;
            // Metering runs every tick whether or not a report goes out.
            n->last = sensors::sample_energy(home_, n->appliance->spec, n->appliance->supply_voltage_v, n->noise);
            n->energy.add(n->last.power_w, dt);
            if (!report) continue;
            n->last.energy_kwh = n->energy.kwh();
            reading.value = n->last;
        } else {
            if (!report) continue;
            reading.value = sensors::sample_environment(home_, n->config.kind, n->noise, config_.presence);
        }

        radio::Frame frame{n->config.id, coordinator_.id(), n->seq++, radio::FrameKind::Reading,
                           sensors::encode_reading(reading)};
        const auto wire = radio::encode_frame(frame);
        ++n->emitted;
        const auto result = channel_.transmit(links_.at(n->config.id), frame, now_);
        if (const auto* d = std::get_if<radio::Delivered>(&result)) {
            coordinator_.on_radio_receive(radio::decode_frame(wire), d->rssi_dbm, now_);
        }
    }
}

void Simulation::deliver_to_center() {
    for (const auto& fwd : coordinator_.drain_to_center()) {
        const auto reading = sensors::decode_reading(fwd.frame.payload);
        center::ReadingRecord rec{fwd.frame.src, reading.kind, fwd.received_at, reading.value, fwd.rssi_dbm};
        center_->ingest(rec);
        for (auto& n : nodes_) {
            if (n->config.id == fwd.frame.src) ++n->delivered;
        }
    }
}

center::Outcome Simulation::carry_command(const radio::Frame& command, const ApplianceSpec& appliance) {
    const auto result = coordinator_.relay_command(command, channel_, links_, now_);
    const auto* d = std::get_if<radio::Delivered>(&result);
    if (!d) return center::Outcome::Dropped;
    const auto action = sensors::decode_command(d->frame.payload);
    for (auto& n : nodes_) {
        if (n->config.id != d->frame.dst || !n->appliance) continue;
        try {
            sensors::actuate(n->relay, action, home_, appliance, n->appliance->supply_voltage_v);
        } catch (const Error& e) {
            if (e.code() == Errc::OverCurrent) return center::Outcome::OverCurrent;
            throw;
        }
        return center::Outcome::Delivered;
    }
    throw Error(Errc::UnknownNode, "no appliance behind node " + std::to_string(d->frame.dst.value));
}

void Simulation::control() {
    const auto user = center_->drain_user_commands();
    std::vector<policy::IntendedAction> actions;
    if (options_.mode == Mode::OnlineEmergent && !config_.rules.empty()) {
        auto eval = center_->with_live_state(
            [&](const center::LiveState& live) { return policy::evaluate_policies(config_.rules, live, latches_); });
        latches_ = std::move(eval.latches);
        actions = std::move(eval.actions);
        for (const auto& advice : eval.notifications) center_->notify_advisory(advice, now_);
    }
    if (user.empty() && actions.empty()) return;

    const center::CommandTransport transport = [this](const radio::Frame& f, const ApplianceSpec& a) {
        return carry_command(f, a);
    };
    for (const auto& entry : center_->dispatch_tick(now_, user, actions, transport)) {
        if (entry.outcome == center::Outcome::Superseded) continue;
        ++commands_;
        if (entry.origin.kind == center::OriginKind::Rule) ++rule_commands_;
    }
}

void Simulation::step() {
    const auto t_s = static_cast<std::uint64_t>(std::floor(now_.seconds(config_.tick_seconds)));
    apply_schedule(t_s % kSecondsPerWeek);
    update_environment(t_s);
    control();
    sample_and_report();
    deliver_to_center();
    center_->advance(now_);
    ++now_.ticks;
}

void Simulation::run(std::uint64_t ticks) {
    for (std::uint64_t i = 0; i < ticks; ++i) step();
}

RunSummary Simulation::summary() const {
    RunSummary s;
    s.mode = options_.mode;
    s.ticks = now_.ticks;
    const auto live = center_->live_state();
    for (const auto& a : config_.appliances) {
        if (!config_.find_usage(a.spec.name)) continue;
        s.kwh.emplace_back(a.spec.name, live.find(a.spec.name)->energy_kwh);
    }
    for (const auto& n : nodes_) {
        s.nodes.push_back({n->config.id, n->emitted, n->delivered, center_->persisted(n->config.id)});
    }
    s.commands = commands_;
    s.rule_commands = rule_commands_;
    s.advisories = center_->advisories();
    return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config, Mode mode, std::uint64_t seed,
                                center::RecordSink* run_log, center::RecordSink* baseline_log) {
    center::NullSink null;
    ExperimentResult result;
    {
        auto* sink = baseline_log ? baseline_log : (mode == Mode::Offline && run_log ? run_log : &null);
        Simulation sim(config, {Mode::Offline, seed, false}, *sink);
        sim.run(config.duration_ticks);
        result.baseline = sim.summary();
    }
    if (mode == Mode::Offline) {
        result.report = profiles::build_report(result.baseline.kwh, result.baseline.kwh);
        return result;
    }
    Simulation sim(config, {mode, seed, false}, run_log ? *run_log : null);
    sim.run(config.duration_ticks);
    result.online = sim.summary();
    result.report = profiles::build_report(result.baseline.kwh, result.online->kwh);
    return result;
}

namespace {

nlohmann::ordered_json row_json(const profiles::ReportRow& r) {
    return {{"appliance", r.appliance},
            {"offline_kwh", r.offline_kwh},
            {"online_kwh", r.online_kwh},
            {"reduction_kwh", r.reduction_kwh},
            {"reduction_percent", r.reduction_percent},
            {"display_percent", r.display_percent()}};
}

nlohmann::ordered_json summary_json(const RunSummary& s) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : s.nodes) {
        nodes.push_back({{"node", n.node.value}, {"emitted", n.emitted}, {"delivered", n.delivered}, {"persisted", n.persisted}});
    }
    return {{"mode", to_string(s.mode)},
            {"ticks", s.ticks},
            {"commands", s.commands},
            {"rule_commands", s.rule_commands},
            {"advisories", s.advisories},
            {"nodes", nodes}};
}

}  // namespace

std::string report_json(const ExperimentResult& result) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : result.report.rows) rows.push_back(row_json(r));
    nlohmann::ordered_json j = {{"mode", to_string(result.online ? result.online->mode : result.baseline.mode)},
                                {"appliances", rows},
                                {"total", row_json(result.report.total)},
                                {"baseline", summary_json(result.baseline)}};
    if (result.online) j["online"] = summary_json(*result.online);
    return j.dump(2) + "\n";
}

}  // namespace hems::experiment

#include "optonet/optics.hpp"

#include <algorithm>
#include <ostream>

namespace optonet {

void StimulationSchedule::validate() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (e.pulse.width <= 0.0 || e.pulse.intensity < 0.0)
            throw ConfigError("schedule: pulse width must be > 0 and intensity >= 0");
        if (e.pulse.end() > horizon)
            throw ScheduleOverflowError("schedule: pulse extends past the horizon");
        if (i > 0) {
            const auto& p = entries[i - 1];
            if (e.neuron < p.neuron ||
                (e.neuron == p.neuron && e.pulse.start < p.pulse.end()))
                throw ConfigError("schedule: per-neuron pulses must be sorted and non-overlapping");
        }
    }
}

std::vector<LightPulse> make_pulse_train(std::size_t n, double start, double width,
                                         double period, double intensity) {
    if (period <= width)
        throw ConfigError("pulse train: period must exceed pulse width (pulses would overlap)");
    if (width <= 0.0) throw ConfigError("pulse train: width must be > 0");
    std::vector<LightPulse> pulses;
    pulses.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        pulses.push_back({start + static_cast<double>(k) * period, width, intensity, 473.0});
    return pulses;
}

void PairingProtocol::validate() const {
    if (pulse_width <= 0.0) throw ConfigError("pairing protocol: pulse_width > 0 required");
    if (delta_t_pair <= 0.0) throw ConfigError("pairing protocol: delta_t_pair > 0 required");
    if (inter_pairing_gap <= delta_t_pair + pulse_width)
        throw ConfigError("pairing protocol: inter_pairing_gap must cover one pairing");
}

StimulationSchedule schedule_pairings(NeuronId pre, NeuronId post, std::size_t n_pairings,
                                      PairingKind kind, const PairingProtocol& protocol) {
    protocol.validate();
    if (pre == post) throw ConfigError("schedule_pairings: pre and post must differ");
    StimulationSchedule schedule;
    if (n_pairings == 0) return schedule;
    if (kind == PairingKind::NoChange) return schedule;

    const double horizon =
        static_cast<double>(n_pairings) * protocol.inter_pairing_gap;
    if (horizon > protocol.session_horizon)
        throw ScheduleOverflowError("schedule_pairings: session exceeds the horizon; cap the pulse count");

    const NeuronId first = (kind == PairingKind::Potentiate) ? pre : post;
    const NeuronId second = (kind == PairingKind::Potentiate) ? post : pre;
    for (std::size_t k = 0; k < n_pairings; ++k) {
        const double t0 = static_cast<double>(k) * protocol.inter_pairing_gap;
        schedule.entries.push_back(
            {first, {t0, protocol.pulse_width, protocol.intensity, 473.0}});
        schedule.entries.push_back(
            {second, {t0 + protocol.delta_t_pair, protocol.pulse_width, protocol.intensity, 473.0}});
    }
    schedule.horizon = horizon;
    std::stable_sort(schedule.entries.begin(), schedule.entries.end(),
                     [](const ScheduleEntry& a, const ScheduleEntry& b) {
                         if (a.neuron != b.neuron) return a.neuron < b.neuron;
                         return a.pulse.start < b.pulse.start;
                     });
    schedule.validate();
    return schedule;
}

double irradiance_at(const StimulationSchedule& schedule, NeuronId neuron, double t) {
    for (const auto& e : schedule.entries) {
        if (e.neuron != neuron) continue;
        if (e.pulse.covers(t)) return e.pulse.intensity;
        if (e.pulse.start > t) break;  // entries for a neuron are sorted
    }
    return 0.0;
}

void dump_schedule_csv(const StimulationSchedule& schedule, std::ostream& out) {
    for (const auto& e : schedule.entries)
        out << e.neuron << ',' << format_double(e.pulse.start) << ','
            << format_double(e.pulse.width) << ',' << format_double(e.pulse.intensity) << '\n';
}

}  // namespace optonet

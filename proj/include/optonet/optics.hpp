// Simulated blue-light stimulation: pulse trains with the fixed hardware
// constants (5 ms width, 1 mW/mm^2, 473 nm) and pair-stimulation schedules
// that realize a requested number of STDP pairings on (pre, post) neurons.
#pragma once

#include <vector>

#include "optonet/common.hpp"
#include "optonet/neuron.hpp"
#include "optonet/plasticity.hpp"

namespace optonet {

struct LightPulse {
    double start = 0.0;       // ms
    double width = 5.0;       // ms
    double intensity = 1.0;   // mW/mm^2
    double wavelength = 473.0;  // nm, metadata only

    double end() const { return start + width; }
    bool covers(double t) const { return t >= start && t < end(); }
};

struct ScheduleEntry {
    NeuronId neuron = 0;
    LightPulse pulse;
};

// Timed light-pulse assignments to individual neurons; the only training
// actuator in optical mode. Entries are kept sorted by (neuron, start).
struct StimulationSchedule {
    std::vector<ScheduleEntry> entries;
    double horizon = 0.0;  // ms; every pulse ends before this

    void validate() const;  // per-neuron non-overlap, ordering, horizon
};

struct ScheduleOverflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// n pulses at start + k*period. Throws ConfigError if period <= width.
std::vector<LightPulse> make_pulse_train(std::size_t n, double start, double width,
                                         double period, double intensity);

struct PairingProtocol {
    double pulse_width = 5.0;      // ms
    double intensity = 1.0;        // mW/mm^2
    double delta_t_pair = 4.0;     // ms, pre->post offset inside the window
    double inter_pairing_gap = 100.0;  // ms; >= one full Eq.-(5) episode
    double session_horizon = 20000.0;  // ms; overflow guard

    void validate() const;
};

// Schedule n_pairings on (pre, post). Potentiate places the pre pulse
// delta_t_pair before the post pulse; Depress the reverse. Successive
// pairings are separated by inter_pairing_gap so calcium traces do not bleed
// between episodes. Throws ScheduleOverflowError past session_horizon.
StimulationSchedule schedule_pairings(NeuronId pre, NeuronId post, std::size_t n_pairings,
                                      PairingKind kind, const PairingProtocol& protocol);

// Intensity of the covering pulse for that neuron at time t, else 0. Light is
// single-cell precise: pulses on other neurons never contribute.
double irradiance_at(const StimulationSchedule& schedule, NeuronId neuron, double t);

// Append the schedule as CSV rows (neuron_id, start_ms, width_ms, intensity).
void dump_schedule_csv(const StimulationSchedule& schedule, std::ostream& out);

}  // namespace optonet

// Conductance-based point neuron with an embedded light-gated ChR2 channel,
// and a reduced leaky-integrator back-end for large training runs.
//
// Units throughout: mV, ms, mS/cm^2, uA/cm^2, uF/cm^2; irradiance in mW/mm^2.
// Sign convention follows the membrane equation
//   C dV/dt = -(I_syn + I_Na + I_Kdr + I_Ka + I_Kahp + I_Kc + I_Ca + I_ChR2
//              + I_Leak + gc*V),
// i.e. negative currents are inward and depolarize.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "optonet/common.hpp"

namespace optonet {

using NeuronId = std::uint32_t;

// ---------------------------------------------------------------------------
// full conductance model

enum class Channel : int { Na = 0, Kdr, KA, Kahp, Kc, Ca, ChR2, Leak, count_ };
inline constexpr int kChannelCount = static_cast<int>(Channel::count_);

// array-backed map channel id -> value
struct ChannelMap {
    std::array<double, kChannelCount> v{};
    double& operator[](Channel c) { return v[static_cast<int>(c)]; }
    double operator[](Channel c) const { return v[static_cast<int>(c)]; }
};

// Gating variables, named by role:
//   na_act/na_inact        sodium activation (m) / inactivation (h)
//   kdr_act                delayed-rectifier activation (n)
//   ka_act/ka_inact        A-type activation / inactivation
//   ca_act                 calcium channel activation
//   kahp_act               slow Ca-dependent K activation (tracks ca, slow)
//   kc_act                 short Ca-dependent K activation (tracks ca, fast)
enum class Gate : int {
    na_act = 0, na_inact, kdr_act, ka_act, ka_inact, ca_act, kahp_act, kc_act, count_
};
inline constexpr int kGateCount = static_cast<int>(Gate::count_);

struct GateMap {
    std::array<double, kGateCount> v{};
    double& operator[](Gate g) { return v[static_cast<int>(g)]; }
    double operator[](Gate g) const { return v[static_cast<int>(g)]; }
};

// Three-state ChR2 photocycle: closed -> open (rate ~ irradiance),
// open -> desensitized, desensitized -> closed (recovery).
struct ChR2State {
    double closed = 1.0;
    double open = 0.0;
    double desensitized = 0.0;

    double sum() const { return closed + open + desensitized; }
};

// Photocycle rate constants (1/ms); frozen after the single-neuron
// light-response calibration.
struct ChR2Rates {
    double opening_per_irradiance = 0.8;  // closed->open, per mW/mm^2
    double closing = 0.4;                 // open->desensitized
    double recovery = 0.04;               // desensitized->closed
};

enum class Integrator { exponential, euler };

struct NeuronParams {
    double membrane_capacitance = 1.0;  // uF/cm^2

    ChannelMap channel_peak_conductances;  // mS/cm^2
    ChannelMap reversal_potentials;        // mV (Leak slot holds E_L)

    ChR2Rates chr2_rates;

    double coupling_conductance_gc = 0.0;  // shunt to 0 mV, see gc*V term
    double spike_threshold = -20.0;        // mV
    double refractory_period = 5.0;        // ms

    // calcium pool: d[ca]/dt = -ca_influx_scale * I_Ca - ca / tau_ca
    double ca_influx_scale = 0.006;  // normalized units per uA/cm^2 / ms
    double tau_ca = 20.0;            // ms

    Integrator integrator = Integrator::exponential;

    // Defaults reproduce a silent-at-rest pyramidal-style cell that fires one
    // spike per calibrated 5 ms light pulse.
    static NeuronParams defaults();

    void validate() const;  // throws ConfigError on invariant violation
};

struct NeuronState {
    double v = -67.0;  // mV
    GateMap gating;
    double ca_internal = 0.0;  // normalized units, >= 0
    ChR2State chr2;
    std::optional<double> last_spike_time;  // on the state's local clock
    double t = 0.0;                         // local clock, ms
};

// State with v at the numerical resting equilibrium and gates settled there.
NeuronState resting_state(const NeuronParams& params);

// Advance the full model by dt. i_syn in the membrane-equation sign
// convention (negative = inward/depolarizing). Returns true iff the voltage
// crossed spike_threshold upward and the neuron is past refractory.
// Throws NumericError if the state leaves the finite range.
bool step_conductance_neuron(NeuronState& state, const NeuronParams& params,
                             double i_syn, double irradiance, double dt);

// I_ChR2 = g * open * (v - e_rev)
inline double chr2_current(const ChR2State& chr2, double v, double g_chr2, double e_chr2) {
    return g_chr2 * chr2.open * (v - e_chr2);
}

// ---------------------------------------------------------------------------
// fast reduced back-end (leaky integrator with reset)

struct FastNeuronParams {
    double tau_m = 10.0;     // ms
    double v_rest = -65.0;   // mV
    double v_thresh = -50.0; // mV
    double v_reset = -70.0;  // mV
    double refractory = 3.0; // ms; below the error-bin width so a driven
                             // neuron can spike in every bin

    double r_m = 1.0;        // mV per uA/cm^2
    double ca_per_spike = 0.2;
    double tau_ca = 20.0;

    void validate() const;
};

struct FastNeuronState {
    double v = -65.0;
    double ca_internal = 0.0;
    std::optional<double> last_spike_time;
    double t = 0.0;
};

// Exact exponential update of the leaky integrator for piecewise-constant
// input; same spike/refractory semantics as the full model.
inline bool step_fast_neuron(FastNeuronState& s, const FastNeuronParams& p,
                             double i_syn, double dt) {
    const double t_next = s.t + dt;
    bool spiked = false;
    if (s.last_spike_time && (t_next - *s.last_spike_time) < p.refractory) {
        s.v = p.v_reset;  // held for the absolute refractory period
    } else {
        const double v_inf = p.v_rest - p.r_m * i_syn;
        const double prev = s.v;
        s.v = v_inf + (s.v - v_inf) * std::exp(-dt / p.tau_m);
        if (prev < p.v_thresh && s.v >= p.v_thresh) {
            spiked = true;
            s.v = p.v_reset;
            s.last_spike_time = t_next;
            s.ca_internal += p.ca_per_spike;
        }
    }
    s.ca_internal *= std::exp(-dt / p.tau_ca);
    s.t = t_next;
    if (!std::isfinite(s.v)) throw NumericError("fast neuron state diverged");
    return spiked;
}

// ---------------------------------------------------------------------------

// Per-neuron spike times for one simulation window.
struct SpikeRecord {
    NeuronId neuron_id = 0;
    std::vector<double> spike_times;  // ms, strictly increasing

    std::size_t count() const { return spike_times.size(); }
};

}  // namespace optonet

// Alpha-function synaptic conductance and excitatory/inhibitory current
// injection, Eqs.-style:
//   I_exc = g_syn(t) * (V - E_syn)
//   I_inh = g_syn(t) * (V + E_syn)        (E_syn a positive magnitude)
//   g_syn(t) = sum_i g_peak * ((t-t_i)/tau) * exp(-(t-t_i)/tau)
// Currents follow the membrane-equation convention: negative = inward.
#pragma once

#include <span>
#include <vector>

#include "optonet/common.hpp"
#include "optonet/neuron.hpp"

namespace optonet {

enum class SynapseRole : std::uint8_t { excitatory = 0, inhibitory = 1 };

struct Synapse {
    NeuronId pre = 0;
    NeuronId post = 0;
    SynapseRole role = SynapseRole::excitatory;
    double g_peak = 0.0;  // mS/cm^2, never negative
    double tau = 5.0;     // ms
    double e_syn = 0.0;   // mV; reversal for exc, magnitude for inh
    std::vector<double> pre_spike_times;  // ascending, bounded to the last 8*tau
    double ca_trace = 0.0;  // normalized synaptic calcium

    // Append a presynaptic spike and drop history older than 8*tau.
    void record_pre_spike(double t);
};

// Alpha-function conductance at time t. Terms older than 8*tau are dropped
// (< 0.3% of g_peak each).
double alpha_conductance(const Synapse& s, double t);

inline double excitatory_current(double g_syn, double v, double e_syn) {
    return g_syn * (v - e_syn);
}

inline double inhibitory_current(double g_syn, double v, double e_syn) {
    return g_syn * (v + e_syn);
}

// Net synaptic current onto one neuron from its excitatory and inhibitory
// afferents, in the membrane-equation convention (negative = depolarizing).
// The paper's excitatory-minus-inhibitory drive is the negative of this.
double layer_net_input(std::span<const Synapse> excitatory,
                       std::span<const Synapse> inhibitory, double t, double v);

}  // namespace optonet

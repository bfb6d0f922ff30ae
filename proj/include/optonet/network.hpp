// Three-layer topology of paired excitatory/inhibitory neurons, forward-pass
// simulation over a time window, input encoding and output decoding.
//
// Neuron ids are global and pair-major:
//   input layer:  pair i -> exc member 2i, inh member 2i+1
//   hidden layer: pair h -> exc member 2*nI+2h, inh member 2*nI+2h+1
//   output layer: o      -> 2*nI + 2*nH + o   (outputs are single neurons)
//
// Synapse storage order (also the snapshot weight order):
//   input->hidden block, input-pair-major:
//     for each input pair i, hidden neuron m: [exc_i -> m], [inh_i -> m]
//   hidden->output block, hidden-pair-major:
//     for each hidden pair h, output o: [exc_h -> o], [inh_h -> o]
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "optonet/neuron.hpp"
#include "optonet/optics.hpp"
#include "optonet/plasticity.hpp"
#include "optonet/synapse.hpp"

namespace optonet {

struct Topology {
    std::size_t n_input_pairs = 0;
    std::size_t n_hidden_pairs = 0;
    std::size_t n_output = 0;

    std::size_t input_neurons() const { return 2 * n_input_pairs; }
    std::size_t hidden_neurons() const { return 2 * n_hidden_pairs; }
    std::size_t total_neurons() const { return input_neurons() + hidden_neurons() + n_output; }
    // one exc + one inh synapse per (input pair, hidden neuron) and per
    // (hidden pair, output neuron)
    std::size_t synapse_count() const {
        return 2 * n_input_pairs * hidden_neurons() + 2 * n_hidden_pairs * n_output;
    }

    NeuronId input_exc(std::size_t pair) const { return static_cast<NeuronId>(2 * pair); }
    NeuronId input_inh(std::size_t pair) const { return static_cast<NeuronId>(2 * pair + 1); }
    NeuronId hidden_exc(std::size_t pair) const {
        return static_cast<NeuronId>(input_neurons() + 2 * pair);
    }
    NeuronId hidden_inh(std::size_t pair) const {
        return static_cast<NeuronId>(input_neurons() + 2 * pair + 1);
    }
    NeuronId output(std::size_t o) const {
        return static_cast<NeuronId>(input_neurons() + hidden_neurons() + o);
    }

    std::size_t ih_index(std::size_t in_pair, std::size_t hidden_neuron, SynapseRole role) const {
        return in_pair * hidden_neurons() * 2 + hidden_neuron * 2 +
               (role == SynapseRole::inhibitory ? 1 : 0);
    }
    std::size_t ho_index(std::size_t hid_pair, std::size_t out, SynapseRole role) const {
        return 2 * n_input_pairs * hidden_neurons() + hid_pair * n_output * 2 + out * 2 +
               (role == SynapseRole::inhibitory ? 1 : 0);
    }

    void validate() const;
};

enum class Backend { full, fast };

struct SynapseDefaults {
    double tau = 5.0;    // ms
    double e_exc = 0.0;  // mV, excitatory reversal
    double e_inh = 80.0; // mV, magnitude in the I = g*(V + E) form
};

// spike thresholds per layer (threshold_inp/hid/out)
struct LayerThresholds {
    double input = 0.0, hidden = 0.0, output = 0.0;
};

struct WeightInit {
    double lo_frac = 0.3;  // U[lo, hi] * g_ref
    double hi_frac = 0.7;
    // reference conductance per projection is g_scale / fan_in_pairs^fan_power
    // so postsynaptic drive stays comparable across layer widths
    double g_scale = 2.0;
    double fan_power = 0.5;
};

struct Network {
    Topology topology;
    Backend backend = Backend::fast;
    NeuronParams full_params = NeuronParams::defaults();
    FastNeuronParams fast_params;
    SynapseDefaults syn;
    LayerThresholds thresholds;  // filled from backend params if unset
    double drive_scale = 100.0;  // i_max: encoded input current per unit intensity
    double light_gain = 60.0;    // fast back-end: current per mW/mm^2 of light
    std::uint64_t rng_seed = 0;
    std::vector<Synapse> synapses;

    std::size_t layer_of(NeuronId id) const;  // 0 input, 1 hidden, 2 output
    double threshold_of_layer(std::size_t layer) const;
};

Network build_network(const Topology& topology, const WeightInit& init, std::uint64_t seed,
                      Backend backend = Backend::fast);

// Per-input-pair constant drive over the window (positive = depolarizing),
// one value per input pair; both pair members receive it.
std::vector<double> encode_input(const std::vector<double>& values, double i_max);

struct ForwardTrace {
    std::vector<SpikeRecord> input, hidden, output;
    double window = 0.0;  // (0, T]
    double dt = 0.0;

    std::vector<std::size_t> output_counts() const;
};

// Simulate all three layers over (0, T]; weights are not modified.
ForwardTrace forward_pass(const Network& net, const std::vector<double>& drive, double T,
                          double dt);

// argmax of output spike counts, ties to the lowest index; nullopt when every
// output neuron stayed silent (scored as incorrect).
std::optional<std::size_t> decode_output(const ForwardTrace& trace);

// Versioned snapshot container (JSON text).
std::string snapshot(const Network& net);
Network restore(const std::string& text);
void save_snapshot(const Network& net, const std::string& path);
Network load_snapshot(const std::string& path);

// ---------------------------------------------------------------------------
// stimulation sessions: light-driven simulation with calcium STDP active

struct SessionResult {
    std::size_t pulses_delivered = 0;
    std::size_t pairings_applied = 0;
    std::vector<SpikeRecord> spikes;  // per neuron, whole network
};

// Simulate the network under a light schedule with the pairing-driven
// plasticity rule engaged on every synapse. This is the only code path that
// changes weights in optical mode. No external drive besides light.
SessionResult run_stimulation_session(Network& net, const StimulationSchedule& schedule,
                                      const PlasticityParams& plasticity, double dt);

}  // namespace optonet

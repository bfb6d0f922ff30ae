// The indirect training loop: per-bin output errors, hidden-error
// backpropagation through the signed pair weights, conductance deltas,
// sign-routing onto the excitatory/inhibitory member synapse, pulse-count
// quantization, and epoch orchestration.
//
// All physical weight changes are potentiations; a negative delta is realized
// by strengthening the inhibitory synapse of the pair.
#pragma once

#include <iosfwd>
#include <optional>

#include "optonet/data.hpp"
#include "optonet/network.hpp"
#include "optonet/optics.hpp"
#include "optonet/plasticity.hpp"

namespace optonet {

enum class TrainMode { ideal, optical };

struct TrainConfig {
    double mu = 0.01;            // learning rate
    double epsilon_window = 5.0; // ms; STDP window = error bin width
    double T = 50.0;             // ms per sample
    double dt = 1.0;             // ms (fast back-end); 0.1 for full
    std::size_t epochs = 150;
    std::size_t batch_per_epoch = 50;
    std::size_t max_pulses = 50;  // per synapse per sample
    TrainMode mode = TrainMode::ideal;
    std::uint64_t seed = 1;
    std::size_t snapshot_every = 0;  // epochs; 0 = final snapshot only

    std::size_t n_bins() const {
        return static_cast<std::size_t>(epsilon_window > 0.0 ? (T / epsilon_window + 1e-9) : 0);
    }
    void validate() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double accuracy = 0.0;  // fraction of the batch classified correctly
    double mse = 0.0;
    double mean_pulses_per_sample = 0.0;  // pairings, in factorID units
};

// err[bin][o] = expected(o) - spiked_in_bin(o), all-or-nothing per bin;
// expected is 1 for the target neuron in every bin and 0 elsewhere.
std::vector<std::vector<int>> output_error(const ForwardTrace& trace, std::size_t target_class,
                                           double bin_width);

// Per-bin error for each hidden neuron: err[bin][neuron] = sum over outputs
// of (g_exc(pair, o) - g_inh(pair, o)) * output error in that bin. Zero for
// units that never spiked in the window; both members of a pair carry the
// unit's error.
std::vector<std::vector<double>> hidden_error(const Network& net,
                                              const std::vector<std::vector<int>>& output_errors,
                                              const ForwardTrace& trace);

// mu * sum over bins of presynaptic spike count * postsynaptic error
double delta_from_bins(const std::vector<std::size_t>& pre_counts,
                       const std::vector<double>& post_err, double mu);

struct ConductanceDeltas {
    std::vector<std::vector<double>> ho;  // [hidden pair][output]
    std::vector<std::vector<double>> ih;  // [input pair][hidden neuron]
};

ConductanceDeltas conductance_deltas(const Network& net, const ForwardTrace& trace,
                                     const std::vector<std::vector<int>>& output_errors,
                                     const std::vector<std::vector<double>>& hidden_errors,
                                     double mu, double epsilon_window);

// Sign routing: dg > 0 strengthens the excitatory synapse, dg < 0 the
// inhibitory one; both as potentiations of the chosen target.
struct RoutedAction {
    std::size_t synapse_index = 0;
    double magnitude = 0.0;
};
std::optional<RoutedAction> route_delta(double dg, std::size_t exc_synapse,
                                        std::size_t inh_synapse);

// Smallest n with sum_{k<n} dw_single(w_k) >= dg - dw_single(w0)/2, walking
// the weight-dependent quantum sequentially; capped at max_pulses.
std::size_t pulses_required(double dg_magnitude, double w_current, const PlasticityParams& params,
                            std::size_t max_pulses, DwCache* cache = nullptr);

struct SampleResult {
    std::size_t pairings = 0;      // total pairings scheduled/applied
    bool correct = false;          // training-pass prediction matched the label
    std::vector<double> xi_bins;   // summed signed output errors per bin
    bool capped = false;           // some synapse hit max_pulses
};

// forward -> errors -> deltas -> routing -> quantization -> application.
// ideal mode applies quantized dw_single steps directly; optical mode builds
// pairing schedules and lets the simulated plasticity realize the change.
SampleResult train_sample(Network& net, const Sample& sample, const TrainConfig& cfg,
                          const PlasticityParams& plasticity, DwCache& cache,
                          const PairingProtocol& protocol, std::ostream* schedule_dump = nullptr);

EpochMetrics train_epoch(Network& net, const Dataset& dataset, const TrainConfig& cfg,
                         const PlasticityParams& plasticity, DwCache& cache, Rng& epoch_rng,
                         std::size_t epoch_index, const PairingProtocol& protocol,
                         std::ostream* schedule_dump = nullptr);

struct EvalResult {
    double accuracy = 0.0;
    std::size_t n_samples = 0;
    // confusion[true][pred]; the extra final column counts no-prediction
    std::vector<std::vector<std::size_t>> confusion;
};

// Read-only evaluation; samples may be evaluated concurrently (jobs > 1).
EvalResult evaluate(const Network& net, const Dataset& dataset, double T, double dt,
                    std::size_t jobs = 1);

}  // namespace optonet

#include "optonet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <thread>

namespace optonet {
namespace {

// spike at time t in (0, T] lands in bin ceil(t/eps) - 1, clamped
std::size_t bin_index(double t, double eps, std::size_t n_bins) {
    const auto b = static_cast<std::ptrdiff_t>(std::ceil(t / eps - 1e-9)) - 1;
    if (b < 0) return 0;
    return std::min(static_cast<std::size_t>(b), n_bins - 1);
}

std::vector<std::vector<std::size_t>> pair_bin_counts(const std::vector<SpikeRecord>& layer,
                                                      double eps, std::size_t n_bins) {
    const std::size_t n_pairs = layer.size() / 2;
    std::vector<std::vector<std::size_t>> counts(n_pairs, std::vector<std::size_t>(n_bins, 0));
    for (std::size_t m = 0; m < layer.size(); ++m)
        for (double t : layer[m].spike_times) ++counts[m / 2][bin_index(t, eps, n_bins)];
    return counts;
}

}  // namespace

void TrainConfig::validate() const {
    if (mu <= 0.0) throw ConfigError("train.mu > 0 required");
    if (epsilon_window <= 0.0) throw ConfigError("train.epsilon_window > 0 required");
    if (epsilon_window > T) throw ConfigError("train.epsilon_window must not exceed train.T");
    if (T <= 0.0 || dt <= 0.0) throw ConfigError("train.T and train.dt must be > 0");
    if (batch_per_epoch < 1) throw ConfigError("train.batch_per_epoch >= 1 required");
    if (max_pulses < 1) throw ConfigError("train.max_pulses >= 1 required");
}

std::vector<std::vector<int>> output_error(const ForwardTrace& trace, std::size_t target_class,
                                           double bin_width) {
    if (target_class >= trace.output.size())
        throw ConfigError("output_error: target class outside the output layer");
    const auto n_bins =
        static_cast<std::size_t>(trace.window / bin_width + 1e-9);
    std::vector<std::vector<int>> err(n_bins, std::vector<int>(trace.output.size(), 0));
    for (std::size_t b = 0; b < n_bins; ++b)
        for (std::size_t o = 0; o < trace.output.size(); ++o)
            err[b][o] = (o == target_class) ? 1 : 0;  // expected spike pattern
    for (std::size_t o = 0; o < trace.output.size(); ++o)
        for (double t : trace.output[o].spike_times) {
            auto& e = err[bin_index(t, bin_width, n_bins)][o];
            // observed indicator is all-or-nothing per bin
            e = ((o == target_class) ? 1 : 0) - 1;
        }
    return err;
}

std::vector<std::vector<double>> hidden_error(const Network& net,
                                              const std::vector<std::vector<int>>& output_errors,
                                              const ForwardTrace& trace) {
    // The exc/inh pair emulates one signed unit; both members carry the
    // unit's error, gated on the unit having spiked in the window.
    const auto& topo = net.topology;
    const std::size_t n_bins = output_errors.size();
    std::vector<std::vector<double>> err(n_bins, std::vector<double>(topo.hidden_neurons(), 0.0));
    for (std::size_t u = 0; u < topo.n_hidden_pairs; ++u) {
        if (trace.hidden[2 * u].spike_times.empty() &&
            trace.hidden[2 * u + 1].spike_times.empty())
            continue;  // only units that spiked
        for (std::size_t b = 0; b < n_bins; ++b) {
            double sum = 0.0;
            for (std::size_t o = 0; o < topo.n_output; ++o) {
                const double w_signed =
                    net.synapses[topo.ho_index(u, o, SynapseRole::excitatory)].g_peak -
                    net.synapses[topo.ho_index(u, o, SynapseRole::inhibitory)].g_peak;
                sum += w_signed * output_errors[b][o];
            }
            err[b][2 * u] = sum;
            err[b][2 * u + 1] = sum;
        }
    }
    return err;
}

double delta_from_bins(const std::vector<std::size_t>& pre_counts,
                       const std::vector<double>& post_err, double mu) {
    if (pre_counts.size() != post_err.size())
        throw ConfigError("delta_from_bins: bin count mismatch");
    double acc = 0.0;
    for (std::size_t b = 0; b < pre_counts.size(); ++b)
        acc += static_cast<double>(pre_counts[b]) * post_err[b];
    return mu * acc;
}

ConductanceDeltas conductance_deltas(const Network& net, const ForwardTrace& trace,
                                     const std::vector<std::vector<int>>& output_errors,
                                     const std::vector<std::vector<double>>& hidden_errors,
                                     double mu, double epsilon_window) {
    const auto& topo = net.topology;
    const std::size_t n_bins = output_errors.size();
    ConductanceDeltas d;

    const auto hid_counts = pair_bin_counts(trace.hidden, epsilon_window, n_bins);
    d.ho.assign(topo.n_hidden_pairs, std::vector<double>(topo.n_output, 0.0));
    std::vector<double> err_col(n_bins);
    for (std::size_t p = 0; p < topo.n_hidden_pairs; ++p) {
        for (std::size_t o = 0; o < topo.n_output; ++o) {
            for (std::size_t b = 0; b < n_bins; ++b) err_col[b] = output_errors[b][o];
            d.ho[p][o] = delta_from_bins(hid_counts[p], err_col, mu);
        }
    }

    const auto inp_counts = pair_bin_counts(trace.input, epsilon_window, n_bins);
    d.ih.assign(topo.n_input_pairs, std::vector<double>(topo.hidden_neurons(), 0.0));
    for (std::size_t i = 0; i < topo.n_input_pairs; ++i) {
        for (std::size_t m = 0; m < topo.hidden_neurons(); ++m) {
            for (std::size_t b = 0; b < n_bins; ++b) err_col[b] = hidden_errors[b][m];
            d.ih[i][m] = delta_from_bins(inp_counts[i], err_col, mu);
        }
    }
    return d;
}

std::optional<RoutedAction> route_delta(double dg, std::size_t exc_synapse,
                                        std::size_t inh_synapse) {
    if (dg > 0.0) return RoutedAction{exc_synapse, dg};
    if (dg < 0.0) return RoutedAction{inh_synapse, -dg};
    return std::nullopt;
}

std::size_t pulses_required(double dg_magnitude, double w_current, const PlasticityParams& params,
                            std::size_t max_pulses, DwCache* cache) {
    if (dg_magnitude < 0.0) throw ConfigError("pulses_required: magnitude must be >= 0");
    if (dg_magnitude == 0.0) return 0;
    const double target =
        dg_magnitude - dw_single(params, w_current, PairingKind::Potentiate, cache) / 2.0;
    if (target <= 0.0) return 0;
    double acc = 0.0, w = w_current;
    std::size_t n = 0;
    while (acc < target && n < max_pulses) {
        const double dw = dw_single(params, w, PairingKind::Potentiate, cache);
        if (dw <= 0.0) break;  // quantum vanished at the Eq.-(5) fixed point
        acc += dw;
        w += dw;
        ++n;
    }
    return n;
}

SampleResult train_sample(Network& net, const Sample& sample, const TrainConfig& cfg,
                          const PlasticityParams& plasticity, DwCache& cache,
                          const PairingProtocol& protocol, std::ostream* schedule_dump) {
    const auto drive = encode_input(sample.features, net.drive_scale);
    const ForwardTrace trace = forward_pass(net, drive, cfg.T, cfg.dt);

    SampleResult result;
    const auto pred = decode_output(trace);
    result.correct = pred.has_value() && *pred == sample.label;

    const auto out_err = output_error(trace, sample.label, cfg.epsilon_window);
    result.xi_bins.assign(out_err.size(), 0.0);
    bool any_error = false;
    for (std::size_t b = 0; b < out_err.size(); ++b) {
        for (int e : out_err[b]) {
            result.xi_bins[b] += e;
            if (e != 0) any_error = true;
        }
    }
    if (!any_error) return result;  // nothing to correct

    const auto hid_err = hidden_error(net, out_err, trace);
    const auto deltas = conductance_deltas(net, trace, out_err, hid_err, cfg.mu,
                                           cfg.epsilon_window);

    struct Job {
        std::size_t synapse;
        std::size_t n;
    };
    std::vector<Job> jobs;
    const auto& topo = net.topology;
    auto plan = [&](double dg, std::size_t exc_idx, std::size_t inh_idx) {
        const auto routed = route_delta(dg, exc_idx, inh_idx);
        if (!routed) return;
        const double w = net.synapses[routed->synapse_index].g_peak;
        const std::size_t n =
            pulses_required(routed->magnitude, w, plasticity, cfg.max_pulses, &cache);
        if (n == cfg.max_pulses) result.capped = true;
        if (n > 0) jobs.push_back({routed->synapse_index, n});
    };
    for (std::size_t i = 0; i < topo.n_input_pairs; ++i)
        for (std::size_t m = 0; m < topo.hidden_neurons(); ++m)
            plan(deltas.ih[i][m], topo.ih_index(i, m, SynapseRole::excitatory),
                 topo.ih_index(i, m, SynapseRole::inhibitory));
    for (std::size_t p = 0; p < topo.n_hidden_pairs; ++p)
        for (std::size_t o = 0; o < topo.n_output; ++o)
            plan(deltas.ho[p][o], topo.ho_index(p, o, SynapseRole::excitatory),
                 topo.ho_index(p, o, SynapseRole::inhibitory));

    if (result.capped && cfg.mode == TrainMode::optical)
        std::cerr << "warning: pairing count capped at max_pulses=" << cfg.max_pulses
                  << " for at least one synapse this sample\n";

    for (const Job& job : jobs) {
        result.pairings += job.n;
        if (cfg.mode == TrainMode::ideal) {
            Synapse& syn = net.synapses[job.synapse];
            for (std::size_t k = 0; k < job.n; ++k)
                syn.g_peak += cache.map_for(PairingKind::Potentiate).delta(syn.g_peak);
        } else {
            const Synapse& syn = net.synapses[job.synapse];
            const auto schedule =
                schedule_pairings(syn.pre, syn.post, job.n, PairingKind::Potentiate, protocol);
            if (schedule_dump) dump_schedule_csv(schedule, *schedule_dump);
            run_stimulation_session(net, schedule, plasticity, cfg.dt);
        }
    }
    return result;
}

EpochMetrics train_epoch(Network& net, const Dataset& dataset, const TrainConfig& cfg,
                         const PlasticityParams& plasticity, DwCache& cache, Rng& epoch_rng,
                         std::size_t epoch_index, const PairingProtocol& protocol,
                         std::ostream* schedule_dump) {
    if (dataset.samples.empty()) throw ConfigError("train_epoch: dataset is empty");
    const auto batch = sample_batch(dataset, cfg.batch_per_epoch, epoch_rng);

    EpochMetrics metrics;
    metrics.epoch = epoch_index;
    std::size_t correct = 0, pairings = 0;
    double mse_acc = 0.0;
    for (const Sample& s : batch) {
        const auto r = train_sample(net, s, cfg, plasticity, cache, protocol, schedule_dump);
        if (r.correct) ++correct;
        pairings += r.pairings;
        double mean_xi = 0.0;
        for (double xi : r.xi_bins) mean_xi += xi;
        mean_xi /= static_cast<double>(r.xi_bins.size());
        mse_acc += mean_xi * mean_xi;
    }
    metrics.accuracy = static_cast<double>(correct) / static_cast<double>(batch.size());
    metrics.mse = mse_acc / static_cast<double>(batch.size());
    metrics.mean_pulses_per_sample =
        static_cast<double>(pairings) / static_cast<double>(batch.size());
    return metrics;
}

EvalResult evaluate(const Network& net, const Dataset& dataset, double T, double dt,
                    std::size_t jobs) {
    if (dataset.samples.empty()) throw ConfigError("evaluate: dataset is empty");
    const std::size_t n = dataset.samples.size();
    const std::size_t n_classes = dataset.n_classes;
    std::vector<std::size_t> predictions(n, n_classes);  // n_classes = no prediction

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const auto drive = encode_input(dataset.samples[k].features, net.drive_scale);
            const auto trace = forward_pass(net, drive, T, dt);
            const auto pred = decode_output(trace);
            if (pred && *pred < n_classes) predictions[k] = *pred;
        }
    };

    if (jobs <= 1) {
        worker(0, n);
    } else {
        const std::size_t n_threads = std::min(jobs, n);
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + n_threads - 1) / n_threads;
        for (std::size_t t = 0; t < n_threads; ++t)
            pool.emplace_back(worker, t * chunk, std::min(n, (t + 1) * chunk));
        for (auto& th : pool) th.join();
    }

    EvalResult result;
    result.n_samples = n;
    result.confusion.assign(n_classes, std::vector<std::size_t>(n_classes + 1, 0));
    std::size_t correct = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t truth = dataset.samples[k].label;
        ++result.confusion[truth][predictions[k]];
        if (predictions[k] == truth) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return result;
}

}  // namespace optonet

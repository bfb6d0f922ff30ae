#include "optonet/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace optonet {

void Topology::validate() const {
    if (n_input_pairs < 1 || n_hidden_pairs < 1 || n_output < 1)
        throw ConfigError("topology: n_input_pairs, n_hidden_pairs and n_output must all be >= 1");
}

std::size_t Network::layer_of(NeuronId id) const {
    if (id < topology.input_neurons()) return 0;
    if (id < topology.input_neurons() + topology.hidden_neurons()) return 1;
    return 2;
}

double Network::threshold_of_layer(std::size_t layer) const {
    return layer == 0 ? thresholds.input : (layer == 1 ? thresholds.hidden : thresholds.output);
}

Network build_network(const Topology& topology, const WeightInit& init, std::uint64_t seed,
                      Backend backend) {
    topology.validate();
    if (init.lo_frac < 0.0 || init.hi_frac < init.lo_frac)
        throw ConfigError("weight init: need 0 <= lo_frac <= hi_frac");

    Network net;
    net.topology = topology;
    net.backend = backend;
    net.rng_seed = seed;
    const double thr = (backend == Backend::full) ? net.full_params.spike_threshold
                                                  : net.fast_params.v_thresh;
    net.thresholds = {thr, thr, thr};

    Rng rng = Rng::with_root(seed).child(0x77e1);
    const double g_ref_ih =
        init.g_scale / std::pow(static_cast<double>(topology.n_input_pairs), init.fan_power);
    const double g_ref_ho =
        init.g_scale / std::pow(static_cast<double>(topology.n_hidden_pairs), init.fan_power);

    net.synapses.reserve(topology.synapse_count());
    auto make_syn = [&](NeuronId pre, NeuronId post, SynapseRole role, double g_peak) {
        Synapse s;
        s.pre = pre;
        s.post = post;
        s.role = role;
        s.g_peak = g_peak;
        s.tau = net.syn.tau;
        s.e_syn = (role == SynapseRole::excitatory) ? net.syn.e_exc : net.syn.e_inh;
        net.synapses.push_back(std::move(s));
    };
    auto draw = [&](double g_ref) { return rng.uniform(init.lo_frac, init.hi_frac) * g_ref; };

    // Both members of a hidden pair jointly emulate one signed unit, so they
    // receive mirrored input weights: one draw per (input pair, hidden pair,
    // role), shared by the two member neurons.
    const NeuronId hidden_base = static_cast<NeuronId>(topology.input_neurons());
    for (std::size_t i = 0; i < topology.n_input_pairs; ++i) {
        for (std::size_t u = 0; u < topology.n_hidden_pairs; ++u) {
            const double w_e = draw(g_ref_ih);
            const double w_i = draw(g_ref_ih);
            for (std::size_t member = 0; member < 2; ++member) {
                const NeuronId post = hidden_base + static_cast<NeuronId>(2 * u + member);
                make_syn(topology.input_exc(i), post, SynapseRole::excitatory, w_e);
                make_syn(topology.input_inh(i), post, SynapseRole::inhibitory, w_i);
            }
        }
    }
    for (std::size_t h = 0; h < topology.n_hidden_pairs; ++h) {
        for (std::size_t o = 0; o < topology.n_output; ++o) {
            make_syn(topology.hidden_exc(h), topology.output(o), SynapseRole::excitatory,
                     draw(g_ref_ho));
            make_syn(topology.hidden_inh(h), topology.output(o), SynapseRole::inhibitory,
                     draw(g_ref_ho));
        }
    }
    return net;
}

std::vector<double> encode_input(const std::vector<double>& values, double i_max) {
    std::vector<double> drive;
    drive.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double v = values[k];
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream msg;
            msg << "encode_input: feature " << k << " = " << v
                << " outside [0, 1]; normalize first";
            throw ConfigError(msg.str());
        }
        drive.push_back(v * i_max);
    }
    return drive;
}

std::vector<std::size_t> ForwardTrace::output_counts() const {
    std::vector<std::size_t> counts;
    counts.reserve(output.size());
    for (const auto& rec : output) counts.push_back(rec.count());
    return counts;
}

std::optional<std::size_t> decode_output(const ForwardTrace& trace) {
    std::size_t best = 0, best_count = 0;
    for (std::size_t o = 0; o < trace.output.size(); ++o) {
        const std::size_t c = trace.output[o].count();
        if (c > best_count) {
            best = o;
            best_count = c;
        }
    }
    if (best_count == 0) return std::nullopt;
    return best;
}

// ---------------------------------------------------------------------------
// simulation engine shared by forward passes and stimulation sessions

namespace {

// per-pre-neuron alpha-function recurrence; exact for on-grid spikes:
//   x(t) = sum exp(-(t-ts)/tau),  y(t) = sum ((t-ts)/tau) exp(-(t-ts)/tau)
struct AlphaState {
    double x = 0.0, y = 0.0;
};

struct Adjacency {
    std::vector<std::vector<std::size_t>> exc_in, inh_in;  // per post neuron
};

Adjacency build_adjacency(const Network& net) {
    Adjacency adj;
    const std::size_t n = net.topology.total_neurons();
    adj.exc_in.resize(n);
    adj.inh_in.resize(n);
    for (std::size_t s = 0; s < net.synapses.size(); ++s) {
        const Synapse& syn = net.synapses[s];
        (syn.role == SynapseRole::excitatory ? adj.exc_in : adj.inh_in)[syn.post].push_back(s);
    }
    return adj;
}

class Simulation {
  public:
    Simulation(const Network& net, double dt)
        : net_(net), dt_(dt), adj_(build_adjacency(net)), alpha_decay_(std::exp(-dt / net.syn.tau)) {
        if (dt <= 0.0) throw ConfigError("simulation: dt must be > 0");
        const std::size_t n = net.topology.total_neurons();
        alpha_.resize(n);
        records_.resize(n);
        for (std::size_t i = 0; i < n; ++i) records_[i].neuron_id = static_cast<NeuronId>(i);

        if (net.backend == Backend::full) {
            for (int layer = 0; layer < 3; ++layer) {
                full_layer_params_[layer] = net.full_params;
                full_layer_params_[layer].spike_threshold =
                    net.threshold_of_layer(static_cast<std::size_t>(layer));
                full_layer_params_[layer].validate();
            }
            const NeuronState rest = resting_state(net.full_params);
            full_states_.assign(n, rest);
        } else {
            for (int layer = 0; layer < 3; ++layer) {
                fast_layer_params_[layer] = net.fast_params;
                fast_layer_params_[layer].v_thresh =
                    net.threshold_of_layer(static_cast<std::size_t>(layer));
                fast_layer_params_[layer].validate();
            }
            FastNeuronState rest;
            rest.v = net.fast_params.v_rest;
            fast_states_.assign(n, rest);
        }
    }

    double time() const { return t_; }

    // One synchronous step. drive: per-input-pair depolarizing current;
    // irradiance: per-neuron light lookup; on_spike: called for every neuron
    // that fired this step, pre-synaptic handling first.
    template <typename IrradianceFn, typename SpikeFn>
    void step(const std::vector<double>& drive, IrradianceFn&& irradiance, SpikeFn&& on_spike) {
        const std::size_t n = net_.topology.total_neurons();
        const std::size_t n_inputs = net_.topology.input_neurons();
        spiked_now_.clear();

        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t layer = net_.layer_of(static_cast<NeuronId>(j));
            double i_syn = 0.0;
            if (j < n_inputs) {
                if (!drive.empty()) i_syn -= drive[j / 2];  // both pair members
            } else {
                double g_e = 0.0, g_i = 0.0;
                for (std::size_t s : adj_.exc_in[j])
                    g_e += net_.synapses[s].g_peak * alpha_[net_.synapses[s].pre].y;
                for (std::size_t s : adj_.inh_in[j])
                    g_i += net_.synapses[s].g_peak * alpha_[net_.synapses[s].pre].y;
                const double v_for_currents =
                    (net_.backend == Backend::full) ? full_states_[j].v : net_.fast_params.v_rest;
                i_syn += excitatory_current(g_e, v_for_currents, net_.syn.e_exc);
                i_syn += inhibitory_current(g_i, v_for_currents, net_.syn.e_inh);
            }

            bool fired;
            if (net_.backend == Backend::full) {
                fired = step_conductance_neuron(full_states_[j], full_layer_params_[layer], i_syn,
                                                irradiance(static_cast<NeuronId>(j), t_), dt_);
            } else {
                const double irr = irradiance(static_cast<NeuronId>(j), t_);
                if (irr > 0.0) i_syn -= net_.light_gain * irr;
                fired = step_fast_neuron(fast_states_[j], fast_layer_params_[layer], i_syn, dt_);
            }
            if (fired) spiked_now_.push_back(static_cast<NeuronId>(j));
        }

        t_ += dt_;
        for (auto& a : alpha_) {
            a.y = alpha_decay_ * (a.y + (dt_ / net_.syn.tau) * a.x);
            a.x = alpha_decay_ * a.x;
        }
        for (NeuronId id : spiked_now_) {
            records_[id].spike_times.push_back(t_);
            alpha_[id].x += 1.0;
        }
        on_spike(std::span<const NeuronId>(spiked_now_), t_);
    }

    std::vector<SpikeRecord> take_records() { return std::move(records_); }
    const std::vector<SpikeRecord>& records() const { return records_; }

  private:
    const Network& net_;
    double dt_;
    double t_ = 0.0;
    Adjacency adj_;
    double alpha_decay_;
    std::vector<AlphaState> alpha_;
    std::vector<SpikeRecord> records_;
    std::vector<NeuronId> spiked_now_;
    std::vector<NeuronState> full_states_;
    std::vector<FastNeuronState> fast_states_;
    std::array<NeuronParams, 3> full_layer_params_{};
    std::array<FastNeuronParams, 3> fast_layer_params_{};
};

}  // namespace

ForwardTrace forward_pass(const Network& net, const std::vector<double>& drive, double T,
                          double dt) {
    if (T <= 0.0) throw ConfigError("forward_pass: T must be > 0");
    if (!drive.empty() && drive.size() != net.topology.n_input_pairs)
        throw ConfigError("forward_pass: drive size must equal n_input_pairs");

    Simulation sim(net, dt);
    const auto nsteps = static_cast<std::size_t>(std::floor(T / dt + 1e-9));
    auto dark = [](NeuronId, double) { return 0.0; };
    auto ignore = [](std::span<const NeuronId>, double) {};
    for (std::size_t i = 0; i < nsteps; ++i) sim.step(drive, dark, ignore);

    auto all = sim.take_records();
    ForwardTrace trace;
    trace.window = T;
    trace.dt = dt;
    const std::size_t ni = net.topology.input_neurons();
    const std::size_t nh = net.topology.hidden_neurons();
    trace.input.assign(all.begin(), all.begin() + ni);
    trace.hidden.assign(all.begin() + ni, all.begin() + ni + nh);
    trace.output.assign(all.begin() + ni + nh, all.end());
    return trace;
}

SessionResult run_stimulation_session(Network& net, const StimulationSchedule& schedule,
                                      const PlasticityParams& plasticity, double dt) {
    schedule.validate();
    SessionResult result;
    result.pulses_delivered = schedule.entries.size();
    if (schedule.entries.empty()) return result;

    // per-neuron sorted pulse lists with a moving cursor
    const std::size_t n = net.topology.total_neurons();
    std::vector<std::vector<LightPulse>> pulses(n);
    for (const auto& e : schedule.entries) {
        if (e.neuron >= n) throw ConfigError("schedule names a neuron outside the network");
        pulses[e.neuron].push_back(e.pulse);
    }
    std::vector<std::size_t> cursor(n, 0);
    auto irradiance = [&](NeuronId id, double t) {
        auto& list = pulses[id];
        auto& c = cursor[id];
        while (c < list.size() && list[c].end() <= t) ++c;
        return (c < list.size() && list[c].covers(t)) ? list[c].intensity : 0.0;
    };

    // per-synapse pairing bookkeeping; traces restart each session (sessions
    // are spaced far beyond tau_ca_syn in protocol time)
    struct SynTrace {
        double value = 0.0, at = 0.0;
        std::optional<double> last_pre, last_post;
    };
    std::vector<SynTrace> traces(net.synapses.size());
    for (auto& s : net.synapses) {
        s.pre_spike_times.clear();
        s.ca_trace = 0.0;
    }

    std::vector<std::vector<std::size_t>> out_of(n), in_of(n);
    for (std::size_t s = 0; s < net.synapses.size(); ++s) {
        out_of[net.synapses[s].pre].push_back(s);
        in_of[net.synapses[s].post].push_back(s);
    }

    auto decay_to = [&](SynTrace& tr, double t) {
        tr.value *= std::exp(-(t - tr.at) / plasticity.tau_ca_syn);
        tr.at = t;
    };
    auto run_episode = [&](std::size_t sidx, double level) {
        Synapse& syn = net.synapses[sidx];
        const double dw = episode_map(level, plasticity, plasticity.episode_dt).delta(syn.g_peak);
        syn.g_peak += dw;
        if (syn.g_peak < 0.0) syn.g_peak = 0.0;
        ++result.pairings_applied;
    };

    // All presynaptic events of a step are handled before any postsynaptic
    // event, so a same-step pre/post pair classifies as pre <= post.
    auto on_spike = [&](std::span<const NeuronId> ids, double t) {
        for (NeuronId id : ids) {
            for (std::size_t sidx : out_of[id]) {  // id is presynaptic
                Synapse& syn = net.synapses[sidx];
                SynTrace& tr = traces[sidx];
                decay_to(tr, t);
                tr.value += plasticity.ca_quantum_pre;
                syn.record_pre_spike(t);
                if (tr.last_post && (t - *tr.last_post) <= plasticity.pairing_window &&
                    t > *tr.last_post) {
                    tr.value += plasticity.ca_quantum_pair_depress();
                    run_episode(sidx, tr.value);
                    tr.last_post.reset();
                }
                tr.last_pre = t;
                syn.ca_trace = tr.value;
            }
        }
        for (NeuronId id : ids) {
            for (std::size_t sidx : in_of[id]) {  // id is postsynaptic
                Synapse& syn = net.synapses[sidx];
                SynTrace& tr = traces[sidx];
                if (tr.last_pre && (t - *tr.last_pre) <= plasticity.pairing_window) {
                    decay_to(tr, t);
                    tr.value += plasticity.ca_quantum_pair;
                    run_episode(sidx, tr.value);
                    tr.last_pre.reset();
                }
                tr.last_post = t;
                syn.ca_trace = tr.value;
            }
        }
    };

    Simulation sim(net, dt);
    const auto nsteps = static_cast<std::size_t>(std::ceil(schedule.horizon / dt - 1e-9));
    const std::vector<double> no_drive;
    for (std::size_t i = 0; i < nsteps; ++i) sim.step(no_drive, irradiance, on_spike);

    result.spikes = sim.take_records();
    return result;
}

// ---------------------------------------------------------------------------
// snapshot format

namespace {

using nlohmann::json;

json channel_map_json(const ChannelMap& m) {
    return json{{"na", m[Channel::Na]},     {"kdr", m[Channel::Kdr]},
                {"ka", m[Channel::KA]},     {"kahp", m[Channel::Kahp]},
                {"kc", m[Channel::Kc]},     {"ca", m[Channel::Ca]},
                {"chr2", m[Channel::ChR2]}, {"leak", m[Channel::Leak]}};
}

ChannelMap channel_map_from(const json& j) {
    ChannelMap m;
    m[Channel::Na] = j.at("na");
    m[Channel::Kdr] = j.at("kdr");
    m[Channel::KA] = j.at("ka");
    m[Channel::Kahp] = j.at("kahp");
    m[Channel::Kc] = j.at("kc");
    m[Channel::Ca] = j.at("ca");
    m[Channel::ChR2] = j.at("chr2");
    m[Channel::Leak] = j.at("leak");
    return m;
}

constexpr int kSnapshotVersion = 1;

}  // namespace

std::string snapshot(const Network& net) {
    json j;
    j["format"] = "optonet-snapshot";
    j["version"] = kSnapshotVersion;
    j["backend"] = (net.backend == Backend::full) ? "full" : "fast";
    j["topology"] = {{"input_pairs", net.topology.n_input_pairs},
                     {"hidden_pairs", net.topology.n_hidden_pairs},
                     {"outputs", net.topology.n_output}};
    j["seed"] = net.rng_seed;
    j["synapse"] = {{"tau", net.syn.tau}, {"e_exc", net.syn.e_exc}, {"e_inh", net.syn.e_inh}};
    j["thresholds"] = {{"input", net.thresholds.input},
                       {"hidden", net.thresholds.hidden},
                       {"output", net.thresholds.output}};
    j["drive_scale"] = net.drive_scale;
    j["light_gain"] = net.light_gain;
    j["fast_params"] = {{"tau_m", net.fast_params.tau_m},
                        {"v_rest", net.fast_params.v_rest},
                        {"v_thresh", net.fast_params.v_thresh},
                        {"v_reset", net.fast_params.v_reset},
                        {"refractory", net.fast_params.refractory},
                        {"r_m", net.fast_params.r_m},
                        {"ca_per_spike", net.fast_params.ca_per_spike},
                        {"tau_ca", net.fast_params.tau_ca}};
    j["full_params"] = {{"c_m", net.full_params.membrane_capacitance},
                        {"g", channel_map_json(net.full_params.channel_peak_conductances)},
                        {"e", channel_map_json(net.full_params.reversal_potentials)},
                        {"gc", net.full_params.coupling_conductance_gc},
                        {"spike_threshold", net.full_params.spike_threshold},
                        {"refractory", net.full_params.refractory_period},
                        {"ca_influx_scale", net.full_params.ca_influx_scale},
                        {"tau_ca", net.full_params.tau_ca},
                        {"chr2_opening", net.full_params.chr2_rates.opening_per_irradiance},
                        {"chr2_closing", net.full_params.chr2_rates.closing},
                        {"chr2_recovery", net.full_params.chr2_rates.recovery},
                        {"integrator", net.full_params.integrator == Integrator::euler
                                           ? "euler"
                                           : "exponential"}};
    std::vector<double> weights;
    weights.reserve(net.synapses.size());
    for (const auto& s : net.synapses) weights.push_back(s.g_peak);
    j["weights"] = weights;
    return j.dump();
}

Network restore(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("snapshot: not valid JSON: ") + e.what());
    }
    try {
        if (j.value("format", "") != "optonet-snapshot")
            throw FormatError("snapshot: missing optonet-snapshot marker");
        if (j.at("version").get<int>() != kSnapshotVersion) {
            std::ostringstream msg;
            msg << "snapshot: version " << j.at("version").get<int>() << " unsupported (expected "
                << kSnapshotVersion << ")";
            throw FormatError(msg.str());
        }
        Topology topo;
        topo.n_input_pairs = j.at("topology").at("input_pairs").get<std::size_t>();
        topo.n_hidden_pairs = j.at("topology").at("hidden_pairs").get<std::size_t>();
        topo.n_output = j.at("topology").at("outputs").get<std::size_t>();
        topo.validate();

        const std::string backend_id = j.at("backend").get<std::string>();
        if (backend_id != "full" && backend_id != "fast")
            throw FormatError("snapshot: unknown backend id '" + backend_id + "'");

        WeightInit init;  // weights are overwritten below
        Network net = build_network(topo, init, j.at("seed").get<std::uint64_t>(),
                                    backend_id == "full" ? Backend::full : Backend::fast);

        const auto& syn = j.at("synapse");
        net.syn.tau = syn.at("tau");
        net.syn.e_exc = syn.at("e_exc");
        net.syn.e_inh = syn.at("e_inh");
        const auto& thr = j.at("thresholds");
        net.thresholds = {thr.at("input"), thr.at("hidden"), thr.at("output")};
        net.drive_scale = j.at("drive_scale");
        net.light_gain = j.at("light_gain");

        const auto& fp = j.at("fast_params");
        net.fast_params.tau_m = fp.at("tau_m");
        net.fast_params.v_rest = fp.at("v_rest");
        net.fast_params.v_thresh = fp.at("v_thresh");
        net.fast_params.v_reset = fp.at("v_reset");
        net.fast_params.refractory = fp.at("refractory");
        net.fast_params.r_m = fp.at("r_m");
        net.fast_params.ca_per_spike = fp.at("ca_per_spike");
        net.fast_params.tau_ca = fp.at("tau_ca");

        const auto& gp = j.at("full_params");
        net.full_params.membrane_capacitance = gp.at("c_m");
        net.full_params.channel_peak_conductances = channel_map_from(gp.at("g"));
        net.full_params.reversal_potentials = channel_map_from(gp.at("e"));
        net.full_params.coupling_conductance_gc = gp.at("gc");
        net.full_params.spike_threshold = gp.at("spike_threshold");
        net.full_params.refractory_period = gp.at("refractory");
        net.full_params.ca_influx_scale = gp.at("ca_influx_scale");
        net.full_params.tau_ca = gp.at("tau_ca");
        net.full_params.chr2_rates.opening_per_irradiance = gp.at("chr2_opening");
        net.full_params.chr2_rates.closing = gp.at("chr2_closing");
        net.full_params.chr2_rates.recovery = gp.at("chr2_recovery");
        net.full_params.integrator =
            gp.at("integrator") == "euler" ? Integrator::euler : Integrator::exponential;

        const auto& weights = j.at("weights");
        if (weights.size() != net.synapses.size())
            throw FormatError("snapshot: weight count does not match the topology");
        for (std::size_t s = 0; s < net.synapses.size(); ++s) {
            const double w = weights[s].get<double>();
            if (!(w >= 0.0)) throw FormatError("snapshot: negative synaptic weight");
            net.synapses[s].g_peak = w;
        }
        // synapse reversals follow the restored defaults
        for (auto& s : net.synapses)
            s.e_syn = (s.role == SynapseRole::excitatory) ? net.syn.e_exc : net.syn.e_inh;
        for (auto& s : net.synapses) s.tau = net.syn.tau;
        return net;
    } catch (const json::exception& e) {
        throw FormatError(std::string("snapshot: malformed field: ") + e.what());
    }
}

void save_snapshot(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open snapshot file for writing: " + path);
    out << snapshot(net) << '\n';
    if (!out) throw IoError("failed writing snapshot: " + path);
}

Network load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return restore(buf.str());
}

}  // namespace optonet

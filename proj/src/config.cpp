#include "optonet/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace optonet {
namespace {

const std::set<std::string> kKnownKeys = {
    "experiment", "preset", "out", "seed", "jobs", "dump_schedule",
    "dataset.kind", "dataset.images", "dataset.labels", "dataset.test_images",
    "dataset.test_labels", "dataset.classes", "dataset.max_pool", "dataset.train_limit",
    "dataset.test_limit",
    "topology.input_pairs", "topology.hidden_pairs", "topology.outputs",
    "backend",
    "network.drive_scale", "network.light_gain",
    "init.g_lo", "init.g_hi", "init.g_scale", "init.fan_power",
    "synapse.tau", "synapse.e_exc", "synapse.e_inh",
    "thresholds.input", "thresholds.hidden", "thresholds.output",
    "neuron.fast.tau_m", "neuron.fast.v_rest", "neuron.fast.v_thresh", "neuron.fast.v_reset",
    "neuron.fast.refractory", "neuron.fast.r_m",
    "neuron.full.integrator", "neuron.full.g_na", "neuron.full.g_kdr", "neuron.full.g_ka",
    "neuron.full.g_kahp", "neuron.full.g_kc", "neuron.full.g_ca", "neuron.full.g_chr2",
    "neuron.full.g_leak", "neuron.full.e_na", "neuron.full.e_k", "neuron.full.e_ca",
    "neuron.full.e_chr2", "neuron.full.e_leak", "neuron.full.gc",
    "neuron.full.spike_threshold", "neuron.full.refractory", "neuron.full.ca_influx_scale",
    "neuron.full.tau_ca", "neuron.full.chr2_opening", "neuron.full.chr2_closing",
    "neuron.full.chr2_recovery",
    "plasticity.theta_d", "plasticity.theta_p", "plasticity.lambda", "plasticity.eta_max",
    "plasticity.eta_half_ca", "plasticity.omega_depress_depth",
    "plasticity.omega_potentiate_level", "plasticity.omega_sharpness",
    "plasticity.pairing_window", "plasticity.ca_quantum_pre", "plasticity.ca_quantum_pair",
    "plasticity.tau_ca_syn", "plasticity.episode_dt", "plasticity.canonical_pair_offset",
    "protocol.pulse_width", "protocol.intensity", "protocol.delta_t_pair",
    "protocol.inter_pairing_gap", "protocol.session_horizon",
    "train.mu", "train.epsilon_window", "train.T", "train.dt", "train.epochs",
    "train.batch_per_epoch", "train.max_pulses", "train.mode", "train.snapshot_every",
    "eval.snapshot", "eval.split",
    "sweep.axis", "sweep.values", "sweep.seeds", "sweep.seeds_per_point",
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

const std::map<std::string, KeyValues>& presets() {
    static const std::map<std::string, KeyValues> table = {
        {"xor.default",
         {
             {"experiment", "train"},
             {"dataset.kind", "xor"},
             {"topology.input_pairs", "2"},
             {"topology.hidden_pairs", "20"},
             {"topology.outputs", "2"},
             {"backend", "fast"},
             {"train.mu", "0.01"},
             {"train.epochs", "150"},
             {"train.T", "50"},
             {"train.dt", "1"},
             {"train.epsilon_window", "5"},
             {"train.batch_per_epoch", "50"},
             {"train.mode", "ideal"},
             {"network.drive_scale", "100"},
             {"init.g_scale", "2.0"},
             {"init.fan_power", "0"},
             {"synapse.e_inh", "130"},
             {"plasticity.lambda", "0.001"},
             {"plasticity.eta_max", "0.002"},
             {"thresholds.hidden", "-57"},
             {"thresholds.output", "-25"},
         }},
        {"mnist.desk",
         {
             {"experiment", "train"},
             {"dataset.kind", "idx"},
             {"dataset.images", "data/digits-train-images.idx.gz"},
             {"dataset.labels", "data/digits-train-labels.idx.gz"},
             {"dataset.test_images", "data/digits-test-images.idx.gz"},
             {"dataset.test_labels", "data/digits-test-labels.idx.gz"},
             {"dataset.classes", "0,1,2"},
             {"dataset.train_limit", "600"},
             {"dataset.test_limit", "300"},
             {"topology.input_pairs", "784"},
             {"topology.hidden_pairs", "50"},
             {"topology.outputs", "3"},
             {"backend", "fast"},
             {"train.mu", "0.001"},
             {"train.epochs", "30"},
             {"train.T", "50"},
             {"train.dt", "1"},
             {"train.epsilon_window", "5"},
             {"train.batch_per_epoch", "50"},
             {"train.mode", "ideal"},
             {"network.drive_scale", "100"},
             {"init.g_scale", "2.0"},
             {"init.fan_power", "0"},
             {"synapse.e_inh", "130"},
             {"plasticity.lambda", "0.001"},
             {"plasticity.eta_max", "0.002"},
             {"thresholds.hidden", "60"},
             {"thresholds.output", "-57"},
         }},
        {"mnist.pooled.desk",
         {
             {"experiment", "train"},
             {"dataset.kind", "idx"},
             {"dataset.images", "data/digits-train-images.idx.gz"},
             {"dataset.labels", "data/digits-train-labels.idx.gz"},
             {"dataset.test_images", "data/digits-test-images.idx.gz"},
             {"dataset.test_labels", "data/digits-test-labels.idx.gz"},
             {"dataset.classes", "0,1,2"},
             {"dataset.max_pool", "true"},
             {"dataset.train_limit", "600"},
             {"dataset.test_limit", "300"},
             {"topology.input_pairs", "196"},
             {"topology.hidden_pairs", "50"},
             {"topology.outputs", "3"},
             {"backend", "fast"},
             {"train.mu", "0.001"},
             {"train.epochs", "30"},
             {"train.T", "50"},
             {"train.dt", "1"},
             {"train.epsilon_window", "5"},
             {"train.batch_per_epoch", "50"},
             {"train.mode", "ideal"},
             {"network.drive_scale", "100"},
             {"init.g_scale", "2.0"},
             {"init.fan_power", "0"},
             {"synapse.e_inh", "130"},
             {"plasticity.lambda", "0.001"},
             {"plasticity.eta_max", "0.002"},
             {"thresholds.hidden", "35"},
             {"thresholds.output", "-57"},
         }},
        // paper-scale configuration; long-running, expects real MNIST files
        {"mnist.full",
         {
             {"experiment", "train"},
             {"dataset.kind", "idx"},
             {"dataset.images", "data/train-images-idx3-ubyte.gz"},
             {"dataset.labels", "data/train-labels-idx1-ubyte.gz"},
             {"dataset.test_images", "data/t10k-images-idx3-ubyte.gz"},
             {"dataset.test_labels", "data/t10k-labels-idx1-ubyte.gz"},
             {"topology.input_pairs", "784"},
             {"topology.hidden_pairs", "500"},
             {"topology.outputs", "10"},
             {"backend", "fast"},
             {"train.mu", "0.001"},
             {"train.epochs", "100"},
             {"train.T", "50"},
             {"train.dt", "1"},
             {"train.epsilon_window", "5"},
             {"train.batch_per_epoch", "50"},
             {"train.mode", "ideal"},
             {"network.drive_scale", "100"},
             {"init.g_scale", "2.0"},
             {"init.fan_power", "0"},
             {"synapse.e_inh", "130"},
             {"plasticity.lambda", "0.001"},
             {"plasticity.eta_max", "0.002"},
             {"thresholds.hidden", "60"},
             {"thresholds.output", "-57"},
         }},
    };
    return table;
}

std::string nearest_key(const std::string& key) {
    std::string best;
    std::size_t best_d = SIZE_MAX;
    for (const auto& k : kKnownKeys) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

void check_key(const std::string& key) {
    if (!kKnownKeys.count(key))
        throw ConfigError("unknown config key '" + key + "' (nearest valid key: '" +
                          nearest_key(key) + "')");
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

template <typename T, typename Fn>
std::vector<T> to_list(const std::string& key, const std::string& value, Fn&& convert) {
    std::vector<T> out;
    for (const auto& cell : split(value, ',')) {
        const std::string item = trim(cell);
        if (item.empty()) continue;
        out.push_back(convert(key, item));
    }
    return out;
}

KeyValues parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    KeyValues kvs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << path << ":" << lineno << ": expected 'key = value'";
            throw ConfigError(msg.str());
        }
        kvs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kvs;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto& full = cfg.full_params;
    auto& g = full.channel_peak_conductances;
    auto& e = full.reversal_potentials;

    if (key == "experiment") cfg.experiment = value;
    else if (key == "out") cfg.out_dir = value;
    else if (key == "seed") { cfg.seed = to_u64(key, value); cfg.train.seed = cfg.seed; }
    else if (key == "jobs") cfg.jobs = static_cast<std::size_t>(to_u64(key, value));
    else if (key == "dump_schedule") cfg.dump_schedule = to_bool(key, value);

    else if (key == "dataset.kind") cfg.dataset.kind = value;
    else if (key == "dataset.images") cfg.dataset.images = value;
    else if (key == "dataset.labels") cfg.dataset.labels = value;
    else if (key == "dataset.test_images") cfg.dataset.test_images = value;
    else if (key == "dataset.test_labels") cfg.dataset.test_labels = value;
    else if (key == "dataset.classes")
        cfg.dataset.classes = to_list<std::size_t>(key, value, [](const auto& k, const auto& v) {
            return static_cast<std::size_t>(to_u64(k, v));
        });
    else if (key == "dataset.max_pool") cfg.dataset.max_pool = to_bool(key, value);
    else if (key == "dataset.train_limit")
        cfg.dataset.train_limit = static_cast<std::size_t>(to_u64(key, value));
    else if (key == "dataset.test_limit")
        cfg.dataset.test_limit = static_cast<std::size_t>(to_u64(key, value));

    else if (key == "topology.input_pairs")
        cfg.topology.n_input_pairs = static_cast<std::size_t>(to_u64(key, value));
    else if (key == "topology.hidden_pairs")
        cfg.topology.n_hidden_pairs = static_cast<std::size_t>(to_u64(key, value));
    else if (key == "topology.outputs")
        cfg.topology.n_output = static_cast<std::size_t>(to_u64(key, value));

    else if (key == "backend") {
        if (value == "full") cfg.backend = Backend::full;
        else if (value == "fast") cfg.backend = Backend::fast;
        else throw ConfigError("backend: expected full|fast, got '" + value + "'");
    }

    else if (key == "network.drive_scale") cfg.drive_scale = to_double(key, value);
    else if (key == "network.light_gain") cfg.light_gain = to_double(key, value);
    else if (key == "init.g_lo") cfg.init.lo_frac = to_double(key, value);
    else if (key == "init.g_hi") cfg.init.hi_frac = to_double(key, value);
    else if (key == "init.g_scale") cfg.init.g_scale = to_double(key, value);
    else if (key == "init.fan_power") cfg.init.fan_power = to_double(key, value);

    else if (key == "synapse.tau") cfg.syn.tau = to_double(key, value);
    else if (key == "synapse.e_exc") cfg.syn.e_exc = to_double(key, value);
    else if (key == "synapse.e_inh") cfg.syn.e_inh = to_double(key, value);

    else if (key == "thresholds.input") cfg.threshold_input = to_double(key, value);
    else if (key == "thresholds.hidden") cfg.threshold_hidden = to_double(key, value);
    else if (key == "thresholds.output") cfg.threshold_output = to_double(key, value);

    else if (key == "neuron.fast.tau_m") cfg.fast_params.tau_m = to_double(key, value);
    else if (key == "neuron.fast.v_rest") cfg.fast_params.v_rest = to_double(key, value);
    else if (key == "neuron.fast.v_thresh") cfg.fast_params.v_thresh = to_double(key, value);
    else if (key == "neuron.fast.v_reset") cfg.fast_params.v_reset = to_double(key, value);
    else if (key == "neuron.fast.refractory") cfg.fast_params.refractory = to_double(key, value);
    else if (key == "neuron.fast.r_m") cfg.fast_params.r_m = to_double(key, value);

    else if (key == "neuron.full.integrator") {
        if (value == "euler") full.integrator = Integrator::euler;
        else if (value == "exponential") full.integrator = Integrator::exponential;
        else throw ConfigError("neuron.full.integrator: expected exponential|euler");
    }
    else if (key == "neuron.full.g_na") g[Channel::Na] = to_double(key, value);
    else if (key == "neuron.full.g_kdr") g[Channel::Kdr] = to_double(key, value);
    else if (key == "neuron.full.g_ka") g[Channel::KA] = to_double(key, value);
    else if (key == "neuron.full.g_kahp") g[Channel::Kahp] = to_double(key, value);
    else if (key == "neuron.full.g_kc") g[Channel::Kc] = to_double(key, value);
    else if (key == "neuron.full.g_ca") g[Channel::Ca] = to_double(key, value);
    else if (key == "neuron.full.g_chr2") g[Channel::ChR2] = to_double(key, value);
    else if (key == "neuron.full.g_leak") g[Channel::Leak] = to_double(key, value);
    else if (key == "neuron.full.e_na") e[Channel::Na] = to_double(key, value);
    else if (key == "neuron.full.e_k") {
        const double ek = to_double(key, value);
        e[Channel::Kdr] = e[Channel::KA] = e[Channel::Kahp] = e[Channel::Kc] = ek;
    }
    else if (key == "neuron.full.e_ca") e[Channel::Ca] = to_double(key, value);
    else if (key == "neuron.full.e_chr2") e[Channel::ChR2] = to_double(key, value);
    else if (key == "neuron.full.e_leak") e[Channel::Leak] = to_double(key, value);
    else if (key == "neuron.full.gc") full.coupling_conductance_gc = to_double(key, value);
    else if (key == "neuron.full.spike_threshold") full.spike_threshold = to_double(key, value);
    else if (key == "neuron.full.refractory") full.refractory_period = to_double(key, value);
    else if (key == "neuron.full.ca_influx_scale") full.ca_influx_scale = to_double(key, value);
    else if (key == "neuron.full.tau_ca") full.tau_ca = to_double(key, value);
    else if (key == "neuron.full.chr2_opening")
        full.chr2_rates.opening_per_irradiance = to_double(key, value);
    else if (key == "neuron.full.chr2_closing") full.chr2_rates.closing = to_double(key, value);
    else if (key == "neuron.full.chr2_recovery") full.chr2_rates.recovery = to_double(key, value);

    else if (key == "plasticity.theta_d") cfg.plasticity.theta_d = to_double(key, value);
    else if (key == "plasticity.theta_p") cfg.plasticity.theta_p = to_double(key, value);
    else if (key == "plasticity.lambda") cfg.plasticity.lambda_decay = to_double(key, value);
    else if (key == "plasticity.eta_max") cfg.plasticity.eta_max = to_double(key, value);
    else if (key == "plasticity.eta_half_ca") cfg.plasticity.eta_half_ca = to_double(key, value);
    else if (key == "plasticity.omega_depress_depth")
        cfg.plasticity.omega_depress_depth = to_double(key, value);
    else if (key == "plasticity.omega_potentiate_level")
        cfg.plasticity.omega_potentiate_level = to_double(key, value);
    else if (key == "plasticity.omega_sharpness")
        cfg.plasticity.omega_sharpness = to_double(key, value);
    else if (key == "plasticity.pairing_window")
        cfg.plasticity.pairing_window = to_double(key, value);
    else if (key == "plasticity.ca_quantum_pre")
        cfg.plasticity.ca_quantum_pre = to_double(key, value);
    else if (key == "plasticity.ca_quantum_pair")
        cfg.plasticity.ca_quantum_pair = to_double(key, value);
    else if (key == "plasticity.tau_ca_syn") cfg.plasticity.tau_ca_syn = to_double(key, value);
    else if (key == "plasticity.episode_dt") cfg.plasticity.episode_dt = to_double(key, value);
    else if (key == "plasticity.canonical_pair_offset")
        cfg.plasticity.canonical_pair_offset = to_double(key, value);

    else if (key == "protocol.pulse_width") cfg.protocol.pulse_width = to_double(key, value);
    else if (key == "protocol.intensity") cfg.protocol.intensity = to_double(key, value);
    else if (key == "protocol.delta_t_pair") cfg.protocol.delta_t_pair = to_double(key, value);
    else if (key == "protocol.inter_pairing_gap")
        cfg.protocol.inter_pairing_gap = to_double(key, value);
    else if (key == "protocol.session_horizon")
        cfg.protocol.session_horizon = to_double(key, value);

    else if (key == "train.mu") cfg.train.mu = to_double(key, value);
    else if (key == "train.epsilon_window") cfg.train.epsilon_window = to_double(key, value);
    else if (key == "train.T") cfg.train.T = to_double(key, value);
    else if (key == "train.dt") cfg.train.dt = to_double(key, value);
    else if (key == "train.epochs") cfg.train.epochs = static_cast<std::size_t>(to_u64(key, value));
    else if (key == "train.batch_per_epoch")
        cfg.train.batch_per_epoch = static_cast<std::size_t>(to_u64(key, value));
    else if (key == "train.max_pulses")
        cfg.train.max_pulses = static_cast<std::size_t>(to_u64(key, value));
    else if (key == "train.mode") {
        if (value == "ideal") cfg.train.mode = TrainMode::ideal;
        else if (value == "optical") cfg.train.mode = TrainMode::optical;
        else throw ConfigError("train.mode: expected ideal|optical, got '" + value + "'");
    }
    else if (key == "train.snapshot_every")
        cfg.train.snapshot_every = static_cast<std::size_t>(to_u64(key, value));

    else if (key == "eval.snapshot") cfg.eval_snapshot = value;
    else if (key == "eval.split") cfg.eval_split = value;

    else if (key == "sweep.axis") cfg.sweep.axis = value;
    else if (key == "sweep.values")
        cfg.sweep.values = to_list<double>(key, value, to_double);
    else if (key == "sweep.seeds")
        cfg.sweep.seeds = to_list<std::uint64_t>(key, value, to_u64);
    else if (key == "sweep.seeds_per_point")
        cfg.sweep.seeds_per_point = static_cast<std::size_t>(to_u64(key, value));

    else if (key == "preset") { /* handled during resolution */ }
    else throw ConfigError("unhandled config key '" + key + "'");
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, kv] : presets()) names.push_back(name);
    return names;
}

void RunConfig::validate() const {
    static const std::set<std::string> experiments = {"train", "eval", "sweep", "neuron-demo",
                                                      "plasticity-probe"};
    if (!experiments.count(experiment))
        throw ConfigError("experiment: expected one of train|eval|sweep|neuron-demo|plasticity-probe");
    if (dataset.kind != "xor" && dataset.kind != "idx")
        throw ConfigError("dataset.kind: expected xor|idx, got '" + dataset.kind + "'");
    if (eval_split != "test" && eval_split != "train")
        throw ConfigError("eval.split: expected test|train");
    if (sweep.axis != "learning_rate" && sweep.axis != "hidden_pairs")
        throw ConfigError("sweep.axis: expected learning_rate|hidden_pairs");
    topology.validate();
    if (init.lo_frac < 0.0 || init.hi_frac < init.lo_frac)
        throw ConfigError("init: need 0 <= init.g_lo <= init.g_hi");
    if (init.g_scale <= 0.0) throw ConfigError("init.g_scale > 0 required");
    if (syn.tau <= 0.0) throw ConfigError("synapse.tau > 0 required");
    if (drive_scale < 0.0) throw ConfigError("network.drive_scale >= 0 required");
    full_params.validate();
    fast_params.validate();
    plasticity.validate();
    protocol.validate();
    train.validate();
    if (train.mode == TrainMode::optical &&
        protocol.delta_t_pair >= plasticity.pairing_window)
        throw ConfigError("protocol.delta_t_pair must stay inside plasticity.pairing_window");
    const bool needs_paths = dataset.kind == "idx" &&
                             (experiment == "train" || experiment == "eval" ||
                              experiment == "sweep");
    if (needs_paths && (dataset.images.empty() || dataset.labels.empty()))
        throw ConfigError("dataset.images and dataset.labels are required for dataset.kind=idx");
}

Network RunConfig::make_network() const { return make_network(seed, topology.n_hidden_pairs); }

Network RunConfig::make_network(std::uint64_t seed_override,
                                std::size_t hidden_pairs_override) const {
    Topology topo = topology;
    topo.n_hidden_pairs = hidden_pairs_override;
    Network net = build_network(topo, init, seed_override, backend);
    net.full_params = full_params;
    net.fast_params = fast_params;
    net.syn = syn;
    net.drive_scale = drive_scale;
    net.light_gain = light_gain;
    for (auto& s : net.synapses) {
        s.tau = syn.tau;
        s.e_syn = (s.role == SynapseRole::excitatory) ? syn.e_exc : syn.e_inh;
    }
    const double base = (backend == Backend::full) ? full_params.spike_threshold
                                                   : fast_params.v_thresh;
    net.thresholds.input = threshold_input.value_or(base);
    net.thresholds.hidden = threshold_hidden.value_or(base);
    net.thresholds.output = threshold_output.value_or(base);
    return net;
}

RunConfig parse_and_validate(const std::string& config_path,
                             const std::vector<std::pair<std::string, std::string>>& overrides) {
    // gather key/value layers in resolution order
    KeyValues file_kvs;
    if (!config_path.empty()) file_kvs = parse_config_file(config_path);

    for (const auto& [k, v] : file_kvs) check_key(k);
    for (const auto& [k, v] : overrides) check_key(k);

    // preset may come from the file or the overrides (overrides win)
    std::string preset_name;
    for (const auto& [k, v] : file_kvs)
        if (k == "preset") preset_name = v;
    for (const auto& [k, v] : overrides)
        if (k == "preset") preset_name = v;

    KeyValues resolved_order;
    if (!preset_name.empty()) {
        const auto it = presets().find(preset_name);
        if (it == presets().end()) {
            std::string names;
            for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
            throw ConfigError("unknown preset '" + preset_name + "' (available: " + names + ")");
        }
        for (const auto& kv : it->second) resolved_order.push_back(kv);
    }
    for (const auto& kv : file_kvs)
        if (kv.first != "preset") resolved_order.push_back(kv);
    for (const auto& kv : overrides)
        if (kv.first != "preset") resolved_order.push_back(kv);

    RunConfig cfg;
    if (const char* root = std::getenv("OPTONET_OUT"); root && *root) cfg.out_dir = root;
    for (const auto& [k, v] : resolved_order) apply_key(cfg, k, v);

    cfg.resolved.clear();
    if (!preset_name.empty()) cfg.resolved["preset"] = preset_name;
    for (const auto& [k, v] : resolved_order) cfg.resolved[k] = v;

    cfg.validate();
    return cfg;
}

}  // namespace optonet

// Run configuration: flat-keyed text files (key = value), built-in presets,
// flag overrides, validation with field-path messages.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optonet/network.hpp"
#include "optonet/trainer.hpp"

namespace optonet {

struct DatasetSpec {
    std::string kind = "xor";  // xor | idx
    std::string images, labels;            // train split
    std::string test_images, test_labels;  // test split (idx only)
    std::vector<std::size_t> classes;      // empty = all
    bool max_pool = false;
    std::size_t train_limit = 0;  // 0 = all
    std::size_t test_limit = 0;
};

struct SweepSpec {
    std::string axis = "learning_rate";  // learning_rate | hidden_pairs
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;  // empty: derived from seed/seeds_per_point
    std::size_t seeds_per_point = 3;
};

struct RunConfig {
    std::string experiment = "train";
    std::string out_dir;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    bool dump_schedule = false;

    DatasetSpec dataset;
    Topology topology{2, 20, 2};
    Backend backend = Backend::fast;
    WeightInit init;
    double drive_scale = 100.0;
    double light_gain = 60.0;
    SynapseDefaults syn;
    std::optional<double> threshold_input, threshold_hidden, threshold_output;
    NeuronParams full_params = NeuronParams::defaults();
    FastNeuronParams fast_params;
    PlasticityParams plasticity;
    PairingProtocol protocol;
    TrainConfig train;
    std::string eval_snapshot;
    std::string eval_split = "test";  // test | train
    SweepSpec sweep;

    // every key after preset/file/flag resolution, echoed into the manifest
    std::map<std::string, std::string> resolved;

    void validate() const;
    Network make_network() const;  // built from topology/init/seed + params
    Network make_network(std::uint64_t seed_override, std::size_t hidden_pairs_override) const;
};

std::vector<std::string> preset_names();

// Resolution order: defaults < preset < config file < overrides. Unknown keys
// report the nearest valid key. config_path may be empty.
RunConfig parse_and_validate(const std::string& config_path,
                             const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace optonet

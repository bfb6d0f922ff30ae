// Experiment drivers behind the CLI subcommands.
#pragma once

#include <string>

#include "optonet/config.hpp"
#include "optonet/metrics.hpp"

namespace optonet {

struct LoadedData {
    Dataset train, test;
};
LoadedData load_data(const RunConfig& cfg);

struct TrainRunResult {
    std::vector<EpochMetrics> epochs;
    double final_accuracy = 0.0;  // on the test split
    double final_mse = 0.0;       // last epoch's batch MSE
    std::string snapshot_path;
};

// Full training run: epochs, metrics.csv, snapshot(s), manifest.
TrainRunResult run_train(const RunConfig& cfg);

// Re-run a recorded manifest and compare the final accuracy bit-exactly.
// Returns true when the run reproduces.
bool verify_manifest(const std::string& manifest_path);

// Dispatch cfg.experiment; throws on failure (the CLI maps error categories
// to exit codes).
void run(const RunConfig& cfg);

}  // namespace optonet

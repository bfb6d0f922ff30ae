// Accuracy/MSE computation, sweep aggregation and CSV emission.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "optonet/common.hpp"
#include "optonet/trainer.hpp"

namespace optonet {

// MSE = (1/N) * sum_k ( (1/T_bins) * sum_t xi_k(t) )^2 with xi the summed
// signed per-neuron bin errors of sample k.
double mse(const std::vector<std::vector<double>>& xi_per_sample, std::size_t n_samples,
           std::size_t t_bins);

struct SweepRunRow {
    double axis_value = 0.0;
    std::uint64_t seed = 0;
    double final_accuracy = 0.0;
    double final_mse = 0.0;
    std::optional<std::size_t> epochs_to_converge;
    bool failed = false;
    std::string error;
};

struct SweepPoint {
    double value = 0.0;
    double mean_accuracy = 0.0, min_accuracy = 0.0, max_accuracy = 0.0;
    double mean_mse = 0.0;
    std::vector<SweepRunRow> runs;
};

struct SweepResult {
    std::string axis;  // learning_rate | hidden_pairs
    std::vector<SweepPoint> points;  // sorted by value
};

// One training run for the sweep: per-epoch accuracies plus final metrics.
struct SweepRunOutcome {
    std::vector<double> epoch_accuracy;
    double final_accuracy = 0.0;
    double final_mse = 0.0;
};
using SweepRunFn = std::function<SweepRunOutcome(double axis_value, std::uint64_t seed)>;

// Runs one training per (value, seed); individual failures are recorded in
// the rows and the sweep continues. Convergence epoch = first epoch with
// accuracy >= 0.95 * final accuracy. jobs > 1 runs points concurrently.
SweepResult run_sweep(const std::string& axis, const std::vector<double>& values,
                      const std::vector<std::uint64_t>& seeds, const SweepRunFn& run,
                      std::size_t jobs = 1);

void write_metrics_csv(const std::vector<EpochMetrics>& epochs, const std::string& path);
std::vector<EpochMetrics> parse_metrics_csv(const std::string& path);

void write_sweep_csv(const SweepResult& result, const std::string& path);
void write_sweep_aggregate_csv(const SweepResult& result, const std::string& path);
// Rebuilds the per-run rows (grouped into points) from sweep.csv.
SweepResult parse_sweep_csv(const std::string& path, const std::string& axis);

}  // namespace optonet

#include "optonet/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace optonet {

double mse(const std::vector<std::vector<double>>& xi_per_sample, std::size_t n_samples,
           std::size_t t_bins) {
    if (n_samples < 1) throw ConfigError("mse: need at least one sample");
    if (xi_per_sample.size() != n_samples) throw ConfigError("mse: sample count mismatch");
    double acc = 0.0;
    for (const auto& xi : xi_per_sample) {
        if (xi.size() != t_bins) throw ConfigError("mse: bin count mismatch");
        double mean = 0.0;
        for (double v : xi) mean += v;
        mean /= static_cast<double>(t_bins);
        acc += mean * mean;
    }
    return acc / static_cast<double>(n_samples);
}

SweepResult run_sweep(const std::string& axis, const std::vector<double>& values,
                      const std::vector<std::uint64_t>& seeds, const SweepRunFn& run,
                      std::size_t jobs) {
    if (values.empty()) throw ConfigError("sweep: value list must not be empty");
    if (seeds.empty()) throw ConfigError("sweep: seed list must not be empty");

    struct Task {
        std::size_t point, run;
        double value;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < values.size(); ++p)
        for (std::size_t r = 0; r < seeds.size(); ++r) tasks.push_back({p, r, values[p], seeds[r]});

    std::vector<std::vector<SweepRunRow>> rows(values.size(),
                                               std::vector<SweepRunRow>(seeds.size()));
    auto execute = [&](const Task& task) {
        SweepRunRow row;
        row.axis_value = task.value;
        row.seed = task.seed;
        try {
            const SweepRunOutcome out = run(task.value, task.seed);
            row.final_accuracy = out.final_accuracy;
            row.final_mse = out.final_mse;
            const double bar = 0.95 * out.final_accuracy;
            for (std::size_t e = 0; e < out.epoch_accuracy.size(); ++e) {
                if (out.epoch_accuracy[e] >= bar && out.final_accuracy > 0.0) {
                    row.epochs_to_converge = e;
                    break;
                }
            }
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        rows[task.point][task.run] = std::move(row);
    };

    if (jobs <= 1) {
        for (const auto& t : tasks) execute(t);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            while (true) {
                const std::size_t k = next.fetch_add(1);
                if (k >= tasks.size()) return;
                execute(tasks[k]);
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(jobs, tasks.size()); ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SweepResult result;
    result.axis = axis;
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    for (std::size_t idx : order) {
        SweepPoint point;
        point.value = values[idx];
        point.runs = rows[idx];
        double acc_sum = 0.0, mse_sum = 0.0;
        double lo = 1.0, hi = 0.0;
        std::size_t ok = 0;
        for (const auto& row : point.runs) {
            if (row.failed) continue;
            ++ok;
            acc_sum += row.final_accuracy;
            mse_sum += row.final_mse;
            lo = std::min(lo, row.final_accuracy);
            hi = std::max(hi, row.final_accuracy);
        }
        if (ok > 0) {
            point.mean_accuracy = acc_sum / static_cast<double>(ok);
            point.mean_mse = mse_sum / static_cast<double>(ok);
            point.min_accuracy = lo;
            point.max_accuracy = hi;
        }
        result.points.push_back(std::move(point));
    }
    return result;
}

void write_metrics_csv(const std::vector<EpochMetrics>& epochs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write metrics csv: " + path);
    out << "epoch,accuracy,mse,mean_pulses_per_sample\n";
    for (const auto& m : epochs)
        out << m.epoch << ',' << format_double(m.accuracy) << ',' << format_double(m.mse) << ','
            << format_double(m.mean_pulses_per_sample) << '\n';
    if (!out) throw IoError("failed writing metrics csv: " + path);
}

std::vector<EpochMetrics> parse_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read metrics csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("metrics csv: missing header: " + path);
    std::vector<EpochMetrics> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 4) throw FormatError("metrics csv: bad row: " + line);
        EpochMetrics m;
        m.epoch = static_cast<std::size_t>(std::stoull(cells[0]));
        m.accuracy = std::stod(cells[1]);
        m.mse = std::stod(cells[2]);
        m.mean_pulses_per_sample = std::stod(cells[3]);
        out.push_back(m);
    }
    return out;
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write sweep csv: " + path);
    out << "axis_value,seed,final_accuracy,final_mse,epochs_to_converge\n";
    for (const auto& point : result.points) {
        for (const auto& row : point.runs) {
            if (row.failed) continue;  // failures live in the JSON manifest
            out << format_double(row.axis_value) << ',' << row.seed << ','
                << format_double(row.final_accuracy) << ',' << format_double(row.final_mse) << ',';
            if (row.epochs_to_converge) out << *row.epochs_to_converge;
            out << '\n';
        }
    }
    if (!out) throw IoError("failed writing sweep csv: " + path);
}

void write_sweep_aggregate_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write sweep aggregate csv: " + path);
    out << "axis_value,mean_accuracy,min_accuracy,max_accuracy,mean_mse\n";
    for (const auto& point : result.points)
        out << format_double(point.value) << ',' << format_double(point.mean_accuracy) << ','
            << format_double(point.min_accuracy) << ',' << format_double(point.max_accuracy) << ','
            << format_double(point.mean_mse) << '\n';
    if (!out) throw IoError("failed writing sweep aggregate csv: " + path);
}

SweepResult parse_sweep_csv(const std::string& path, const std::string& axis) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read sweep csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("sweep csv: missing header: " + path);
    std::vector<SweepRunRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 5) throw FormatError("sweep csv: bad row: " + line);
        SweepRunRow row;
        row.axis_value = std::stod(cells[0]);
        row.seed = std::stoull(cells[1]);
        row.final_accuracy = std::stod(cells[2]);
        row.final_mse = std::stod(cells[3]);
        if (!trim(cells[4]).empty())
            row.epochs_to_converge = static_cast<std::size_t>(std::stoull(cells[4]));
        rows.push_back(row);
    }

    SweepResult result;
    result.axis = axis;
    for (const auto& row : rows) {
        SweepPoint* point = nullptr;
        for (auto& p : result.points)
            if (p.value == row.axis_value) point = &p;
        if (!point) {
            result.points.push_back({});
            result.points.back().value = row.axis_value;
            point = &result.points.back();
        }
        point->runs.push_back(row);
    }
    std::sort(result.points.begin(), result.points.end(),
              [](const SweepPoint& a, const SweepPoint& b) { return a.value < b.value; });
    for (auto& point : result.points) {
        double acc_sum = 0.0, mse_sum = 0.0, lo = 1.0, hi = 0.0;
        for (const auto& row : point.runs) {
            acc_sum += row.final_accuracy;
            mse_sum += row.final_mse;
            lo = std::min(lo, row.final_accuracy);
            hi = std::max(hi, row.final_accuracy);
        }
        if (!point.runs.empty()) {
            point.mean_accuracy = acc_sum / static_cast<double>(point.runs.size());
            point.mean_mse = mse_sum / static_cast<double>(point.runs.size());
            point.min_accuracy = lo;
            point.max_accuracy = hi;
        }
    }
    return result;
}

}  // namespace optonet

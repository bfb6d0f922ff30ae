#include "optonet/run.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "optonet/data.hpp"
#include "optonet/optics.hpp"

namespace optonet {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string resolve_out_dir(const RunConfig& cfg) {
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    return "runs/" + cfg.experiment;
}

std::string ensure_out_dir(const RunConfig& cfg) {
    const std::string dir = resolve_out_dir(cfg);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return dir;
}

json config_json(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.resolved) j[k] = v;
    return j;
}

void write_manifest(const std::string& dir, const RunConfig& cfg, const json& extra) {
    json j;
    j["format"] = "optonet-run-manifest";
    j["version"] = 1;
    j["experiment"] = cfg.experiment;
    j["seed"] = cfg.seed;
    j["config"] = config_json(cfg);
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    const std::string path = dir + "/manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing manifest: " + path);
}

Dataset limited(Dataset d, std::size_t limit) {
    if (limit > 0 && d.samples.size() > limit) {
        d.samples.resize(limit);
        Fnv1a h;
        h.update(d.digest.data(), d.digest.size());
        h.update("limit", 5);
        h.update_u64(limit);
        d.digest = h.hex();
    }
    return d;
}

void run_neuron_demo(const RunConfig& cfg) {
    const std::string dir = ensure_out_dir(cfg);
    const auto pulses = make_pulse_train(10, 0.0, 5.0, 55.0, 1.0);
    StimulationSchedule schedule;
    for (const auto& p : pulses) schedule.entries.push_back({0, p});
    schedule.horizon = 10 * 55.0 + 50.0;
    schedule.validate();

    const double dt = 0.1;
    NeuronParams params = cfg.full_params;
    NeuronState state = resting_state(params);

    const std::string path = dir + "/neuron_demo.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace: " + path);
    out << "t_ms,v_mV,irradiance,spike_flag\n";
    std::size_t spikes = 0;
    const auto nsteps = static_cast<std::size_t>(schedule.horizon / dt);
    for (std::size_t i = 0; i < nsteps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double irr = irradiance_at(schedule, 0, t);
        const bool spiked = step_conductance_neuron(state, params, 0.0, irr, dt);
        if (spiked) ++spikes;
        out << format_double(t) << ',' << format_double(state.v) << ',' << format_double(irr)
            << ',' << (spiked ? 1 : 0) << '\n';
    }
    std::cerr << "neuron-demo: " << pulses.size() << " pulses -> " << spikes << " spikes; trace "
              << path << '\n';
    write_manifest(dir, cfg, json{{"results", {{"pulses", pulses.size()}, {"spikes", spikes}}}});
}

void run_plasticity_probe(const RunConfig& cfg) {
    const std::string dir = ensure_out_dir(cfg);
    const std::string path = dir + "/plasticity_probe.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write probe: " + path);
    out << "ca,omega,eta\n";
    const double hi = std::max(1.5, 2.5 * cfg.plasticity.theta_p);
    for (double ca = 0.0; ca <= hi + 1e-12; ca += 0.005)
        out << format_double(ca) << ',' << format_double(omega(ca, cfg.plasticity)) << ','
            << format_double(eta(ca, cfg.plasticity)) << '\n';
    std::cerr << "plasticity-probe: curves written to " << path << '\n';
    write_manifest(dir, cfg, json{{"results", {{"curve", path}}}});
}

SweepRunOutcome train_once(const RunConfig& cfg, std::uint64_t seed, std::size_t hidden_pairs,
                           double mu, const LoadedData& data) {
    Network net = cfg.make_network(seed, hidden_pairs);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.mu = mu;
    DwCache cache(cfg.plasticity);
    Rng root = Rng::with_root(seed);

    SweepRunOutcome outcome;
    for (std::size_t e = 0; e < tc.epochs; ++e) {
        Rng epoch_rng = root.child(e);
        const auto m = train_epoch(net, data.train, tc, cfg.plasticity, cache, epoch_rng, e,
                                   cfg.protocol, nullptr);
        outcome.epoch_accuracy.push_back(m.accuracy);
        outcome.final_mse = m.mse;
    }
    outcome.final_accuracy = evaluate(net, data.test, tc.T, tc.dt, cfg.jobs).accuracy;
    return outcome;
}

void run_sweep_experiment(const RunConfig& cfg) {
    const std::string dir = ensure_out_dir(cfg);
    if (cfg.sweep.values.empty())
        throw ConfigError("sweep.values must list at least one axis value");
    std::vector<std::uint64_t> seeds = cfg.sweep.seeds;
    if (seeds.empty())
        for (std::size_t k = 0; k < cfg.sweep.seeds_per_point; ++k)
            seeds.push_back(cfg.seed + k);

    const LoadedData data = load_data(cfg);
    const bool mu_axis = cfg.sweep.axis == "learning_rate";
    auto fn = [&](double value, std::uint64_t seed) {
        const std::size_t hp = mu_axis ? cfg.topology.n_hidden_pairs
                                       : static_cast<std::size_t>(std::llround(value));
        const double mu = mu_axis ? value : cfg.train.mu;
        if (!mu_axis && hp < 1) throw ConfigError("sweep: hidden_pairs value must be >= 1");
        return train_once(cfg, seed, hp, mu, data);
    };
    const SweepResult result = run_sweep(cfg.sweep.axis, cfg.sweep.values, seeds, fn, cfg.jobs);

    write_sweep_csv(result, dir + "/sweep.csv");
    write_sweep_aggregate_csv(result, dir + "/sweep_aggregate.csv");
    json points = json::array();
    for (const auto& p : result.points) {
        json runs = json::array();
        for (const auto& r : p.runs)
            runs.push_back({{"seed", r.seed},
                            {"final_accuracy", r.final_accuracy},
                            {"final_mse", r.final_mse},
                            {"failed", r.failed},
                            {"error", r.error}});
        points.push_back({{"value", p.value},
                          {"mean_accuracy", p.mean_accuracy},
                          {"min_accuracy", p.min_accuracy},
                          {"max_accuracy", p.max_accuracy},
                          {"mean_mse", p.mean_mse},
                          {"runs", runs}});
    }
    write_manifest(dir, cfg,
                   json{{"dataset", {{"digest", data.train.digest}}},
                        {"results", {{"axis", result.axis}, {"points", points}}}});
    std::cerr << "sweep: " << result.points.size() << " points x " << seeds.size()
              << " seeds written to " << dir << '\n';
}

void run_eval(const RunConfig& cfg) {
    if (cfg.eval_snapshot.empty())
        throw ConfigError("eval.snapshot (or --snapshot) is required for the eval experiment");
    const std::string dir = ensure_out_dir(cfg);
    const Network net = load_snapshot(cfg.eval_snapshot);
    const LoadedData data = load_data(cfg);
    const Dataset& split = (cfg.eval_split == "train") ? data.train : data.test;
    const EvalResult r = evaluate(net, split, cfg.train.T, cfg.train.dt, cfg.jobs);

    std::cout << "accuracy " << format_double(r.accuracy) << " on " << r.n_samples
              << " samples\n";
    json confusion = json::array();
    for (const auto& row : r.confusion) confusion.push_back(row);
    write_manifest(dir, cfg,
                   json{{"dataset", {{"digest", split.digest}, {"samples", r.n_samples}}},
                        {"results", {{"accuracy", r.accuracy}, {"confusion", confusion}}}});
}

}  // namespace

LoadedData load_data(const RunConfig& cfg) {
    LoadedData data;
    if (cfg.dataset.kind == "xor") {
        data.train = xor_dataset();
        data.test = data.train;
    } else {
        data.train = load_idx(cfg.dataset.images, cfg.dataset.labels);
        if (!cfg.dataset.test_images.empty())
            data.test = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels);
        else
            data.test = data.train;
    }
    if (!cfg.dataset.classes.empty()) {
        data.train = class_filter(data.train, cfg.dataset.classes);
        data.test = class_filter(data.test, cfg.dataset.classes);
    }
    if (cfg.dataset.max_pool) {
        data.train = max_pool_dataset(data.train);
        data.test = max_pool_dataset(data.test);
    }
    data.train = limited(std::move(data.train), cfg.dataset.train_limit);
    data.test = limited(std::move(data.test), cfg.dataset.test_limit);

    if (data.train.feature_dim != cfg.topology.n_input_pairs) {
        std::ostringstream msg;
        msg << "dataset feature_dim " << data.train.feature_dim
            << " does not match topology.input_pairs " << cfg.topology.n_input_pairs;
        throw ConfigError(msg.str());
    }
    if (data.train.n_classes != cfg.topology.n_output) {
        std::ostringstream msg;
        msg << "dataset has " << data.train.n_classes << " classes but topology.outputs is "
            << cfg.topology.n_output;
        throw ConfigError(msg.str());
    }
    return data;
}

TrainRunResult run_train(const RunConfig& cfg) {
    const std::string dir = ensure_out_dir(cfg);
    const LoadedData data = load_data(cfg);

    Network net = cfg.make_network();
    DwCache cache(cfg.plasticity);
    Rng root = Rng::with_root(cfg.train.seed);

    std::ofstream schedule_dump;
    if (cfg.dump_schedule) {
        schedule_dump.open(dir + "/schedules.csv");
        if (!schedule_dump) throw IoError("cannot write schedule dump");
        schedule_dump << "neuron_id,start_ms,width_ms,intensity\n";
    }

    TrainRunResult result;
    for (std::size_t e = 0; e < cfg.train.epochs; ++e) {
        Rng epoch_rng = root.child(e);
        const auto m =
            train_epoch(net, data.train, cfg.train, cfg.plasticity, cache, epoch_rng, e,
                        cfg.protocol, cfg.dump_schedule ? &schedule_dump : nullptr);
        result.epochs.push_back(m);
        if (cfg.train.snapshot_every > 0 && (e + 1) % cfg.train.snapshot_every == 0) {
            std::ostringstream name;
            name << dir << "/snapshot_epoch" << (e + 1) << ".json";
            save_snapshot(net, name.str());
        }
        std::cerr << "epoch " << e << ": accuracy " << m.accuracy << ", mse " << m.mse
                  << ", pairings/sample " << m.mean_pulses_per_sample << '\n';
    }

    write_metrics_csv(result.epochs, dir + "/metrics.csv");
    result.snapshot_path = dir + "/snapshot.json";
    save_snapshot(net, result.snapshot_path);

    result.final_accuracy = evaluate(net, data.test, cfg.train.T, cfg.train.dt, cfg.jobs).accuracy;
    result.final_mse = result.epochs.empty() ? 0.0 : result.epochs.back().mse;

    write_manifest(
        dir, cfg,
        json{{"dataset",
              {{"digest", data.train.digest},
               {"train_samples", data.train.samples.size()},
               {"test_digest", data.test.digest},
               {"test_samples", data.test.samples.size()}}},
             {"results",
              {{"final_accuracy", result.final_accuracy},
               {"final_mse", result.final_mse},
               {"epochs", result.epochs.size()},
               {"snapshot", result.snapshot_path}}}});
    std::cerr << "train: final test accuracy " << result.final_accuracy << '\n';
    return result;
}

bool verify_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest: " + manifest_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest: not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "optonet-run-manifest")
        throw FormatError("manifest: missing optonet-run-manifest marker");
    if (j.value("experiment", "") != "train")
        throw ConfigError("verify-manifest: only train manifests can be verified");

    std::vector<std::pair<std::string, std::string>> overrides;
    for (auto it = j.at("config").begin(); it != j.at("config").end(); ++it)
        overrides.emplace_back(it.key(), it.value().get<std::string>());

    RunConfig cfg = parse_and_validate("", overrides);
    // rerun into a scratch directory, leaving the original outputs alone
    cfg.out_dir = resolve_out_dir(cfg) + "/verify";
    const double recorded = j.at("results").at("final_accuracy").get<double>();
    const TrainRunResult redo = run_train(cfg);
    const bool ok = redo.final_accuracy == recorded;
    std::cerr << "verify-manifest: recorded " << format_double(recorded) << ", reproduced "
              << format_double(redo.final_accuracy) << (ok ? " (match)" : " (MISMATCH)") << '\n';
    return ok;
}

void run(const RunConfig& cfg) {
    if (cfg.experiment == "neuron-demo") run_neuron_demo(cfg);
    else if (cfg.experiment == "plasticity-probe") run_plasticity_probe(cfg);
    else if (cfg.experiment == "train") run_train(cfg);
    else if (cfg.experiment == "eval") run_eval(cfg);
    else if (cfg.experiment == "sweep") run_sweep_experiment(cfg);
    else throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace optonet

// optonet command-line entry point.
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "optonet/config.hpp"
#include "optonet/run.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::string mode;
    std::string snapshot;
    std::string verify_manifest_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double mu = 0.0;
    bool mu_set = false;
    std::size_t jobs = 0;
    bool jobs_set = false;
    bool dump_schedule = false;
    std::vector<std::string> sets;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "configuration file (key = value lines)");
    cmd->add_option("--preset", f.preset, "built-in preset name");
    cmd->add_option("--out", f.out_dir, "output directory (default $OPTONET_OUT or runs/<cmd>)");
    cmd->add_option("--seed", f.seed, "run seed")->each([&](const std::string&) { f.seed_set = true; });
    cmd->add_option("--mode", f.mode, "training mode: ideal|optical");
    cmd->add_option("--mu", f.mu, "learning rate")->each([&](const std::string&) { f.mu_set = true; });
    cmd->add_option("--jobs", f.jobs, "parallelism for evaluation/sweeps")
        ->each([&](const std::string&) { f.jobs_set = true; });
    cmd->add_flag("--dump-schedule", f.dump_schedule, "dump stimulation schedules as CSV");
    cmd->add_option("--set", f.sets, "extra key=value override (repeatable)");
}

std::vector<std::pair<std::string, std::string>> collect_overrides(const CommonFlags& f,
                                                                   const std::string& experiment) {
    std::vector<std::pair<std::string, std::string>> ov;
    if (!f.preset.empty()) ov.emplace_back("preset", f.preset);
    ov.emplace_back("experiment", experiment);
    if (!f.out_dir.empty()) ov.emplace_back("out", f.out_dir);
    if (f.seed_set) ov.emplace_back("seed", std::to_string(f.seed));
    if (!f.mode.empty()) ov.emplace_back("train.mode", f.mode);
    if (f.mu_set) ov.emplace_back("train.mu", optonet::format_double(f.mu));
    if (f.jobs_set) ov.emplace_back("jobs", std::to_string(f.jobs));
    if (f.dump_schedule) ov.emplace_back("dump_schedule", "true");
    if (!f.snapshot.empty()) ov.emplace_back("eval.snapshot", f.snapshot);
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw optonet::ConfigError("--set expects key=value, got '" + kv + "'");
        ov.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return ov;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optonet: spiking network trainer driven by simulated light-pulse pairings"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* demo = app.add_subcommand("neuron-demo", "single-neuron light-response trace");
    auto* probe = app.add_subcommand("plasticity-probe", "dump the Omega/eta curves");
    auto* train = app.add_subcommand("train", "train a network");
    auto* eval = app.add_subcommand("eval", "evaluate a snapshot");
    auto* sweep = app.add_subcommand("sweep", "train across an axis of values");
    for (auto* cmd : {demo, probe, train, eval, sweep}) add_common_flags(cmd, flags);
    eval->add_option("--snapshot", flags.snapshot, "network snapshot to evaluate");
    eval->add_option("--split", [&flags](const std::vector<std::string>& v) {
        flags.sets.push_back("eval.split=" + v.back());
        return true;
    }, "dataset split: test|train");
    train->add_option("--verify-manifest", flags.verify_manifest_path,
                      "re-run a recorded manifest and compare the final accuracy");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!flags.verify_manifest_path.empty())
            return optonet::verify_manifest(flags.verify_manifest_path) ? optonet::kExitOk
                                                                        : optonet::kExitFailure;
        const std::string experiment = app.get_subcommands().front()->get_name();
        const auto overrides = collect_overrides(flags, experiment);
        const optonet::RunConfig cfg = optonet::parse_and_validate(flags.config_path, overrides);
        optonet::run(cfg);
        return optonet::kExitOk;
    } catch (const optonet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return optonet::kExitConfig;
    } catch (const optonet::FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return optonet::kExitConfig;
    } catch (const optonet::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return optonet::kExitIo;
    } catch (const optonet::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return optonet::kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return optonet::kExitFailure;
    }
}

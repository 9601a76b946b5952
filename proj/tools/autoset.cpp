#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "autoset/pipeline.hpp"
#include "autoset/synthgen.hpp"

using namespace autoset;

namespace {

RunConfig load_run_config(const std::string& config_path, const std::optional<std::uint64_t>& seed,
                          const std::string& out_dir) {
    RunConfig rc = config_path.empty() ? RunConfig{} : RunConfig::from_config(ConfigFile::parse_file(config_path));
    if (seed) {
        rc.seed = *seed;
        rc.training.seed = *seed;
    }
    if (!out_dir.empty()) rc.out_dir = out_dir;
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep activity-set recognition pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir, mode_name;
    std::optional<std::uint64_t> seed;
    std::optional<double> u_flag;
    std::optional<double> threshold_flag;
    app.add_option("--config", config_path, "Run configuration file")->envname("AUTOSET_CONFIG");
    app.add_option("--seed", seed, "Override the run seed");
    app.add_option("--out", out_dir, "Override the output directory");

    auto* prepare = app.add_subcommand("prepare", "Normalize, segment, and write split archives");

    auto* train = app.add_subcommand("train", "Train one of the four model variants");
    train->add_option("--mode", mode_name, "deep-bce|auto-bce|deep-set|auto-set")->required();

    auto* infer = app.add_subcommand("infer", "Score the test archive and write a prediction dump");
    infer->add_option("--mode", mode_name, "deep-bce|auto-bce|deep-set|auto-set")->required();
    infer->add_option("--u", u_flag, "Pin the set-inference normalization constant U");
    infer->add_option("--threshold", threshold_flag, "Element-score threshold for bce models");

    auto* eval = app.add_subcommand("eval", "Evaluate a prediction dump against the test targets");
    eval->add_option("--mode", mode_name, "deep-bce|auto-bce|deep-set|auto-set")->required();

    std::vector<std::string> compare_modes;
    auto* compare = app.add_subcommand("compare", "Evaluate several dumps and print a comparison table");
    compare->add_option("--mode", compare_modes, "Modes to compare (repeatable)")->required();

    std::string synth_out;
    int synth_activities = 3, synth_channels = 3;
    long synth_samples = 60000;
    double synth_noise = 0.05;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic annotated stream");
    synth->add_option("--out-file", synth_out, "Output stream file (generic delimited format)")->required();
    synth->add_option("--activities", synth_activities, "Number of activities");
    synth->add_option("--channels", synth_channels, "Number of channels");
    synth->add_option("--samples", synth_samples, "Total samples");
    synth->add_option("--noise", synth_noise, "Gaussian noise standard deviation");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            SynthConfig cfg = default_synth_config(synth_activities, synth_channels, seed.value_or(1));
            cfg.total_samples = synth_samples;
            cfg.noise_std = synth_noise;
            write_delimited(synth_out, generate(cfg));
            std::cout << "wrote " << synth_out << "\n";
            return 0;
        }

        RunConfig rc = load_run_config(config_path, seed, out_dir);
        if (threshold_flag) rc.inference.threshold = *threshold_flag;

        if (prepare->parsed()) {
            const PrepareSummary s = cmd_prepare(rc);
            std::cout << "train=" << s.n_train << " val=" << s.n_val << " test=" << s.n_test
                      << " unlabeled=" << s.n_unlabeled << " max_cardinality=" << s.max_cardinality
                      << "\n";
        } else if (train->parsed()) {
            const TrainOutputs t = cmd_train(rc, parse_model_mode(mode_name));
            std::cout << "checkpoint=" << t.checkpoint_path << " best_epoch="
                      << t.supervised.best_epoch << "\n";
        } else if (infer->parsed()) {
            std::cout << "dump=" << cmd_infer(rc, parse_model_mode(mode_name), u_flag) << "\n";
        } else if (eval->parsed()) {
            const MetricsReport rep = cmd_eval(rc, parse_model_mode(mode_name));
            std::cout << format_report(rep);
        } else if (compare->parsed()) {
            std::vector<ModelMode> modes;
            for (const auto& m : compare_modes) modes.push_back(parse_model_mode(m));
            std::cout << cmd_compare(rc, modes);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// Command-line front end: layer-wise training, evaluation and analysis.

#include "scnn/archive.hpp"
#include "scnn/config.hpp"
#include "scnn/pipeline.hpp"
#include "scnn/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct Globals {
    std::string config_path;
    std::string out_dir = "run";
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool quiet = false;
};

scnn::RunConfig build_config(const Globals& g) {
    scnn::RunConfig config = g.config_path.empty() ? scnn::RunConfig{}
                                                   : scnn::load_config(g.config_path);
    for (const auto& o : g.overrides) scnn::apply_override(config, o);
    if (g.seed_set) config.seed = g.seed;
    config.validate();
    return config;
}

// Settings that may change between training and evaluation of a saved model.
scnn::RunConfig evaluation_config(const Globals& g, const scnn::ModelArchive& archive) {
    scnn::RunConfig config = archive.config();
    for (const auto& o : g.overrides) scnn::apply_override(config, o);
    config.validate();
    return config;
}

std::string out_file(const Globals& g, const std::string& name) {
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / name).string();
}

void write_config_copy(const Globals& g, const scnn::RunConfig& config) {
    std::filesystem::create_directories(g.out_dir);
    std::ofstream(out_file(g, "config.txt")) << scnn::serialize_config(config);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiking convolutional network with unsupervised feature discovery"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("-c,--config", g.config_path, "Config file (key = value lines)")
        ->check(CLI::ExistingFile);
    app.add_option("-o,--out", g.out_dir, "Run directory for the model archive and reports")
        ->capture_default_str();
    auto* seed_opt = app.add_option("-s,--seed", g.seed, "Master seed (overrides the config)");
    app.add_option("--set", g.overrides, "Override one config key, e.g. --set H=64")
        ->take_all();
    app.add_flag("-q,--quiet", g.quiet, "Suppress progress output");

    bool fresh = false;
    std::string noise_text;
    std::size_t pooled_index = 0;
    bool pooled_requested = false;

    auto* train_filters = app.add_subcommand("train-filters", "Learn convolution filters");
    auto* train_features = app.add_subcommand("train-features", "Train the discovery layer");
    auto* train_classifier = app.add_subcommand("train-classifier", "Fit the SVM readout");
    auto* run_all = app.add_subcommand("run-all", "Train all stages, resuming where possible");
    run_all->add_flag("--fresh", fresh, "Ignore an existing archive in the run directory");
    auto* evaluate = app.add_subcommand("evaluate", "Score a trained model on the test set");
    evaluate->add_option("--noise", noise_text,
                         "Comma-separated list such as none,gauss:0.04,sp:0.25");
    auto* control = app.add_subcommand("control-matrix",
                                       "Compare neuron-model and STDP variants on shared filters");
    control->add_option("--noise", noise_text, "Comma-separated noise list");
    auto* correlations =
        app.add_subcommand("analyze-correlations", "Report discovery weight correlations");
    auto* dump = app.add_subcommand("dump-filters", "Write the filter bank as an image");
    dump->add_option("--pooled", pooled_index,
                     "Also render the pooled spike counts of this test image")
        ->each([&](const std::string&) { pooled_requested = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    g.seed_set = seed_opt->count() > 0;
    std::ostream* log = g.quiet ? nullptr : &std::cerr;

    try {
        scnn::RunOptions options{g.out_dir, !fresh, log};
        if (train_filters->parsed() || train_features->parsed() || train_classifier->parsed()) {
            const scnn::RunConfig config = build_config(g);
            const scnn::Stage stage = train_filters->parsed()    ? scnn::Stage::filters
                                      : train_features->parsed() ? scnn::Stage::discovery
                                                                 : scnn::Stage::classifier;
            write_config_copy(g, config);
            scnn::run_stage(config, stage, options);
            std::cout << "saved " << scnn::archive_path(g.out_dir) << '\n';
        } else if (run_all->parsed()) {
            const scnn::RunConfig config = build_config(g);
            write_config_copy(g, config);
            scnn::run_layerwise(config, options);
            std::cout << "saved " << scnn::archive_path(g.out_dir) << '\n';
        } else if (evaluate->parsed()) {
            const auto archive = scnn::load_model(scnn::archive_path(g.out_dir));
            const scnn::RunConfig config = evaluation_config(g, archive);
            const auto noises =
                scnn::parse_noise_list(noise_text.empty() ? config.noise : noise_text);
            const auto test = scnn::load_test_set(config);
            const auto report = scnn::evaluate(archive, test, noises, log,
                                               static_cast<std::size_t>(config.workers));
            scnn::write_evaluation_csv(out_file(g, "evaluation.csv"), report);
            scnn::write_confusion_csv(out_file(g, "confusion.csv"), report);
            scnn::write_sparsity_csv(out_file(g, "sparsity.csv"), report);
            scnn::print_evaluation(std::cout, report);
        } else if (control->parsed()) {
            const scnn::RunConfig config = build_config(g);
            options.resume = true;
            const auto archive = scnn::run_stage(config, scnn::Stage::filters, options);
            const auto noises = scnn::parse_noise_list(
                noise_text.empty() ? "none,gauss:0.04,sp:0.04,sp:0.25" : noise_text);
            const auto train = scnn::load_training_set(config);
            const auto test = scnn::load_test_set(config);
            const auto report =
                scnn::control_matrix(config, archive.filters(), train, test, noises, log);
            scnn::write_control_csv(out_file(g, "control.csv"), report);
            scnn::print_control(std::cout, report);
        } else if (correlations->parsed()) {
            const auto archive = scnn::load_model(scnn::archive_path(g.out_dir));
            const auto report = scnn::weight_correlation(archive.discovery());
            scnn::write_correlation_matrix_csv(out_file(g, "correlation.csv"), report);
            scnn::write_correlation_pgm(out_file(g, "correlation.pgm"), report);
            std::cout << "H = " << report.size << ", mean |off-diagonal correlation| = "
                      << report.average << '\n';
        } else if (dump->parsed()) {
            const auto archive = scnn::load_model(scnn::archive_path(g.out_dir));
            scnn::write_filters_pgm(out_file(g, "filters.pgm"), archive.filters());
            std::cout << "wrote " << out_file(g, "filters.pgm") << '\n';
            if (pooled_requested) {
                const scnn::RunConfig config = evaluation_config(g, archive);
                const auto test = scnn::load_test_set(config);
                if (pooled_index >= test.size()) {
                    throw scnn::InvalidParameter("--pooled index is past the end of the test set");
                }
                const auto pooled = scnn::encode_image(
                    test.images[pooled_index], archive.filters(), config,
                    scnn::stage_seed(config, scnn::SeedStream::evaluation_spikes, pooled_index));
                const std::string name = "pooled-" + std::to_string(pooled_index) + ".pgm";
                scnn::write_pgm(out_file(g, name), scnn::tile_pooled_counts(pooled), 0.0, 1.0);
                std::cout << "wrote " << out_file(g, name) << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

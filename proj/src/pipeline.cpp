#include "scnn/pipeline.hpp"

#include "scnn/report.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

namespace scnn {

namespace {

void say(std::ostream* log, const std::string& line) {
    if (log) *log << line << '\n' << std::flush;
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void check_geometry(const RunConfig& config, const LabeledDataset& data, const std::string& what) {
    for (const auto& img : data.images) {
        if (img.rows != static_cast<std::size_t>(config.r) ||
            img.cols != static_cast<std::size_t>(config.c)) {
            throw GeometryError(what + " images are " + std::to_string(img.rows) + "x" +
                                std::to_string(img.cols) + " but the config expects " +
                                std::to_string(config.r) + "x" + std::to_string(config.c));
        }
    }
}

// The parts of a config that do not affect trained weights.
RunConfig training_view(RunConfig config) {
    const RunConfig defaults;
    config.test_images = defaults.test_images;
    config.test_labels = defaults.test_labels;
    config.test_samples = defaults.test_samples;
    config.noise = defaults.noise;
    config.workers = defaults.workers;
    return config;
}

std::vector<double> features_for(const RunConfig& config, const FilterBank& bank,
                                 const DiscoveryLayer& layer, const IntensityImage& image,
                                 std::uint64_t seed) {
    return extract_features(layer, encode_image(image, bank, config, seed)).values;
}

} // namespace

std::uint64_t stage_seed(const RunConfig& config, SeedStream stream, std::uint64_t a,
                         std::uint64_t b) {
    return derive_seed(config.seed, static_cast<std::uint64_t>(stream), a, b);
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

LabeledDataset load_training_set(const RunConfig& config) {
    LabeledDataset data = load_idx(config.train_images, config.train_labels);
    if (!config.full_scale) {
        const auto needed = static_cast<std::size_t>(std::max(
            {config.filter_samples, config.discovery_samples, config.classifier_samples}));
        if (data.size() < needed) {
            throw InvalidParameter("training set has " + std::to_string(data.size()) +
                                   " images, config asks for " + std::to_string(needed));
        }
        data = data.head(needed);
    }
    check_geometry(config, data, "training");
    return data;
}

LabeledDataset load_test_set(const RunConfig& config) {
    LabeledDataset data = load_idx(config.test_images, config.test_labels);
    if (!config.full_scale) {
        const auto needed = static_cast<std::size_t>(config.test_samples);
        if (data.size() < needed) {
            throw InvalidParameter("test set has " + std::to_string(data.size()) +
                                   " images, config asks for " + std::to_string(needed));
        }
        data = data.head(needed);
    }
    check_geometry(config, data, "test");
    return data;
}

IntensityImage apply_noise(const IntensityImage& image, const NoiseSpec& noise, Rng& rng) {
    switch (noise.kind) {
    case NoiseSpec::Kind::gaussian: return add_gaussian_noise(image, noise.level, rng);
    case NoiseSpec::Kind::salt_pepper: return add_salt_pepper(image, noise.level, rng);
    default: return image;
    }
}

PooledMaps encode_image(const IntensityImage& image, const FilterBank& bank,
                        const RunConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    const SpikeTensor input = encode_poisson(image, static_cast<int>(config.T), rng);
    const FeatureMapSpikes maps =
        convolve_spiking(input, image.rows, image.cols, bank, config.conv());
    return max_pool(maps, static_cast<std::size_t>(config.l_p));
}

PooledMaps EncodedImages::get(int iteration, std::size_t index) const {
    return encode_image(images_[index], bank_, config_,
                        stage_seed(config_, stream_, static_cast<std::uint64_t>(iteration), index));
}

SailnetTraining train_filter_stage(const RunConfig& config, const LabeledDataset& train,
                                   std::ostream* log) {
    const LabeledDataset subset =
        config.full_scale ? train : train.head(static_cast<std::size_t>(config.filter_samples));
    const SailnetConfig sc = config.sailnet();
    const PatchSource patches = PatchSource::from_images(subset.images, sc.patch_size, sc.stride);
    say(log, "filters: " + std::to_string(subset.size()) + " images, " +
                 std::to_string(patches.size()) + " patches, D=" + std::to_string(sc.filters));
    Rng rng(stage_seed(config, SeedStream::filters));
    return train_filters(patches, sc, static_cast<int>(config.filter_iterations), rng,
                         [&](const SailnetDiagnostics& d) {
                             say(log, "  iteration " + std::to_string(d.iteration) +
                                          ": spikes/patch " + fixed(d.mean_spikes_per_patch) +
                                          ", mean |W_inh| " + fixed(d.mean_inh, 5));
                         });
}

DiscoveryStageResult train_discovery_stage(const RunConfig& config, const FilterBank& bank,
                                           const LabeledDataset& train, std::ostream* log) {
    const LabeledDataset subset =
        config.full_scale ? train
                          : train.head(static_cast<std::size_t>(config.discovery_samples));
    Rng init(stage_seed(config, SeedStream::discovery_init));
    DiscoveryStageResult result{
        DiscoveryLayer::random(config.discovery(), config.pooled_units(), init), {}};
    say(log, "discovery: " + std::to_string(subset.size()) + " images, H=" +
                 std::to_string(config.H) + ", N=" + std::to_string(config.pooled_units()) +
                 ", " + std::string(to_string(config.neuron_model)) + " neurons, " +
                 std::string(to_string(config.stdp_rule)) + " STDP");
    const EncodedImages source(subset.images, bank, config, SeedStream::discovery_spikes);
    Rng order(stage_seed(config, SeedStream::discovery_order));
    result.history = train_discovery(
        result.layer, source, static_cast<int>(config.discovery_iterations), order,
        [&](const DiscoveryIteration& it) {
            say(log, "  iteration " + std::to_string(it.iteration) + ": mean |corr| " +
                         fixed(it.correlation.average) + ", fires/image " +
                         fixed(it.fires_per_image, 2));
        });
    return result;
}

std::vector<std::vector<double>> compute_features(const RunConfig& config, const FilterBank& bank,
                                                  const DiscoveryLayer& layer,
                                                  std::span<const IntensityImage> images,
                                                  SeedStream stream, const NoiseSpec& noise,
                                                  std::size_t noise_index) {
    std::vector<std::vector<double>> out(images.size());
    parallel_for(images.size(), static_cast<std::size_t>(config.workers), [&](std::size_t i) {
        const std::uint64_t seed = stage_seed(config, stream, i);
        if (noise.kind == NoiseSpec::Kind::none) {
            out[i] = features_for(config, bank, layer, images[i], seed);
        } else {
            Rng noise_rng(stage_seed(config, SeedStream::evaluation_noise, noise_index, i));
            out[i] = features_for(config, bank, layer, apply_noise(images[i], noise, noise_rng),
                                  seed);
        }
    });
    return out;
}

ClassifierStageResult train_classifier_stage(const RunConfig& config, const FilterBank& bank,
                                             const DiscoveryLayer& layer,
                                             const LabeledDataset& train, std::ostream* log) {
    const LabeledDataset subset =
        config.full_scale ? train
                          : train.head(static_cast<std::size_t>(config.classifier_samples));
    say(log, "classifier: " + std::to_string(subset.size()) + " images, " +
                 std::string(to_string(config.feature_mode)) + " features");
    const auto features = compute_features(config, bank, layer, subset.images,
                                           SeedStream::classifier_spikes);
    const SvmConfig svm = config.svm();
    ClassifierStageResult result;
    if (config.cv_folds > 1) {
        Rng cv_rng(stage_seed(config, SeedStream::cross_validation));
        result.folds = cross_validate(features, subset.labels, svm,
                                      static_cast<std::size_t>(config.cv_folds), cv_rng);
        for (const auto& f : result.folds) {
            say(log, "  fold " + std::to_string(f.fold) + ": " + fixed(100.0 * f.accuracy, 2) +
                         "%");
        }
    }
    Rng rng(stage_seed(config, SeedStream::classifier_svm));
    result.model = train_svm(features, subset.labels, svm, rng);
    result.train_accuracy = accuracy(result.model, features, subset.labels);
    say(log, "  training accuracy " + fixed(100.0 * result.train_accuracy, 2) + "%");
    return result;
}

std::string archive_path(const std::string& out_dir) {
    return join(out_dir, "model.scnn");
}

ModelArchive run_stage(const RunConfig& config, Stage stage, const RunOptions& options) {
    config.validate();
    const bool on_disk = !options.out_dir.empty();
    const std::string path = on_disk ? archive_path(options.out_dir) : std::string();
    ModelArchive archive(config);
    if (on_disk) {
        std::filesystem::create_directories(options.out_dir);
        if (options.resume && std::filesystem::exists(path)) {
            archive = load_model(path);
            if (training_view(archive.config()) != training_view(config)) {
                throw ConfigError(path + " was trained with a different configuration");
            }
        }
    }
    if (archive.has(stage)) {
        say(options.log, std::string(to_string(stage)) + ": already trained, skipping");
        return archive;
    }
    if (stage != Stage::filters) {
        archive.require(stage == Stage::discovery ? Stage::filters : Stage::discovery);
    }

    const LabeledDataset train = load_training_set(config);
    switch (stage) {
    case Stage::filters: {
        SailnetTraining t = train_filter_stage(config, train, options.log);
        if (on_disk) {
            write_sailnet_csv(join(options.out_dir, "sailnet.csv"), t.diagnostics);
            write_filters_pgm(join(options.out_dir, "filters.pgm"), t.bank);
        }
        archive.set_filters(std::move(t.bank));
        break;
    }
    case Stage::discovery: {
        DiscoveryStageResult d = train_discovery_stage(config, archive.filters(), train,
                                                       options.log);
        if (on_disk) {
            write_correlation_history_csv(join(options.out_dir, "discovery.csv"), d.history);
            const CorrelationReport corr = weight_correlation(d.layer);
            write_correlation_matrix_csv(join(options.out_dir, "correlation.csv"), corr);
            write_correlation_pgm(join(options.out_dir, "correlation.pgm"), corr);
        }
        archive.set_discovery(std::move(d.layer));
        break;
    }
    case Stage::classifier: {
        ClassifierStageResult c = train_classifier_stage(config, archive.filters(),
                                                         archive.discovery(), train, options.log);
        if (on_disk && !c.folds.empty()) {
            write_folds_csv(join(options.out_dir, "folds.csv"), c.folds);
        }
        archive.set_classifier(std::move(c.model));
        break;
    }
    }
    if (on_disk) save_model(archive, path);
    return archive;
}

ModelArchive run_layerwise(const RunConfig& config, const RunOptions& options) {
    if (options.out_dir.empty()) {
        config.validate();
        const LabeledDataset train = load_training_set(config);
        ModelArchive archive(config);
        archive.set_filters(train_filter_stage(config, train, options.log).bank);
        archive.set_discovery(
            train_discovery_stage(config, archive.filters(), train, options.log).layer);
        archive.set_classifier(train_classifier_stage(config, archive.filters(),
                                                      archive.discovery(), train, options.log)
                                   .model);
        return archive;
    }
    ModelArchive archive;
    for (Stage s : {Stage::filters, Stage::discovery, Stage::classifier}) {
        archive = run_stage(config, s, options);
    }
    return archive;
}

EvalReport evaluate(const ModelArchive& archive, const LabeledDataset& dataset,
                    std::span<const NoiseSpec> noises, std::ostream* log,
                    std::size_t workers) {
    archive.require(Stage::classifier);
    RunConfig config = archive.config();
    if (workers > 0) config.workers = static_cast<std::int64_t>(workers);
    check_geometry(config, dataset, "evaluation");
    if (dataset.empty()) throw InvalidParameter("evaluation set is empty");

    EvalReport report;
    report.samples = dataset.size();
    const std::size_t hidden = archive.discovery().hidden();
    for (std::size_t n = 0; n < noises.size(); ++n) {
        const auto features =
            compute_features(config, archive.filters(), archive.discovery(), dataset.images,
                             SeedStream::evaluation_spikes, noises[n], n);
        EvalRow row;
        row.noise = noises[n];
        std::size_t correct = 0;
        for (std::size_t i = 0; i < features.size(); ++i) {
            const int predicted = predict(archive.classifier(), features[i]).label;
            ++row.confusion[dataset.labels[i]][static_cast<std::size_t>(predicted)];
            if (predicted == dataset.labels[i]) ++correct;
        }
        row.accuracy = static_cast<double>(correct) / static_cast<double>(features.size());
        say(log, "evaluate " + to_string(noises[n]) + ": " + fixed(100.0 * row.accuracy, 2) +
                     "% on " + std::to_string(features.size()) + " images");
        if (n == 0) {
            report.class_activity.assign(kClasses, std::vector<double>(hidden, 0.0));
            std::array<std::size_t, kClasses> seen{};
            for (std::size_t i = 0; i < features.size(); ++i) {
                auto& acc = report.class_activity[dataset.labels[i]];
                for (std::size_t h = 0; h < hidden; ++h) acc[h] += std::abs(features[i][h]);
                ++seen[dataset.labels[i]];
            }
            for (std::size_t c = 0; c < kClasses; ++c) {
                if (seen[c] == 0) continue;
                for (double& v : report.class_activity[c]) v /= static_cast<double>(seen[c]);
            }
        }
        report.rows.push_back(row);
    }
    return report;
}

const ControlRow& ControlReport::row(NeuronModel model, StdpRule rule) const {
    for (const auto& r : rows) {
        if (r.neuron_model == model && r.stdp_rule == rule) return r;
    }
    throw InvalidParameter("control matrix has no row for " + std::string(to_string(model)) +
                           "/" + std::string(to_string(rule)));
}

ControlReport control_matrix(const RunConfig& config, const FilterBank& bank,
                             const LabeledDataset& train, const LabeledDataset& test,
                             std::span<const NoiseSpec> noises, std::ostream* log) {
    ControlReport report;
    report.noises.assign(noises.begin(), noises.end());
    for (NeuronModel model : {NeuronModel::probabilistic, NeuronModel::plain_lif}) {
        for (StdpRule rule : {StdpRule::probabilistic, StdpRule::sigmoidal}) {
            RunConfig variant = config;
            variant.neuron_model = model;
            variant.stdp_rule = rule;
            variant.cv_folds = 0;
            variant.validate();
            say(log, "variant " + std::string(to_string(model)) + " neurons / " +
                         std::string(to_string(rule)) + " STDP");
            ModelArchive archive(variant);
            archive.set_filters(bank);
            DiscoveryStageResult d = train_discovery_stage(variant, bank, train, log);
            ControlRow row;
            row.neuron_model = model;
            row.stdp_rule = rule;
            for (const auto& it : d.history) row.correlation_history.push_back(it.correlation.average);
            archive.set_discovery(std::move(d.layer));
            archive.set_classifier(
                train_classifier_stage(variant, bank, archive.discovery(), train, log).model);
            for (const auto& r : evaluate(archive, test, noises, log,
                                          static_cast<std::size_t>(config.workers)).rows) {
                row.accuracy.push_back(r.accuracy);
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

} // namespace scnn

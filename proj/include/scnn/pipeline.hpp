#pragma once

#include "scnn/archive.hpp"
#include "scnn/classifier.hpp"
#include "scnn/config.hpp"
#include "scnn/convnet.hpp"
#include "scnn/dataio.hpp"
#include "scnn/discovery.hpp"
#include "scnn/sailnet.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace scnn {

// Sub-seed streams derived from the master seed, one per consumer of randomness.
enum class SeedStream : std::uint64_t {
    filters = 1,
    discovery_init = 2,
    discovery_spikes = 3,
    discovery_order = 4,
    classifier_spikes = 5,
    classifier_svm = 6,
    evaluation_spikes = 7,
    evaluation_noise = 8,
    cross_validation = 9,
};

std::uint64_t stage_seed(const RunConfig& config, SeedStream stream, std::uint64_t a = 0,
                         std::uint64_t b = 0);

// Runs fn(i) for i in [0, n) on `workers` threads. Exceptions are rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Training set truncated to the largest per-stage sample count (all of it at full scale).
LabeledDataset load_training_set(const RunConfig& config);
LabeledDataset load_test_set(const RunConfig& config);

IntensityImage apply_noise(const IntensityImage& image, const NoiseSpec& noise, Rng& rng);

// Poisson encoding -> spiking convolution -> max pooling for one image.
PooledMaps encode_image(const IntensityImage& image, const FilterBank& bank,
                        const RunConfig& config, std::uint64_t seed);

// Re-encodes image `index` with a fresh seed for every training iteration.
class EncodedImages final : public PooledSource {
public:
    EncodedImages(std::span<const IntensityImage> images, const FilterBank& bank,
                  const RunConfig& config, SeedStream stream)
        : images_(images), bank_(bank), config_(config), stream_(stream) {}

    std::size_t size() const override { return images_.size(); }
    PooledMaps get(int iteration, std::size_t index) const override;

private:
    std::span<const IntensityImage> images_;
    const FilterBank& bank_;
    const RunConfig& config_;
    SeedStream stream_;
};

SailnetTraining train_filter_stage(const RunConfig& config, const LabeledDataset& train,
                                   std::ostream* log = nullptr);

struct DiscoveryStageResult {
    DiscoveryLayer layer;
    std::vector<DiscoveryIteration> history;
};

DiscoveryStageResult train_discovery_stage(const RunConfig& config, const FilterBank& bank,
                                           const LabeledDataset& train,
                                           std::ostream* log = nullptr);

// Accumulated-potential features for every image. Image i is always encoded
// with seed (stream, i); `noise_index` only selects the noise draws, so noisy
// and clean passes share spike draws wherever the pixels agree.
std::vector<std::vector<double>> compute_features(const RunConfig& config, const FilterBank& bank,
                                                  const DiscoveryLayer& layer,
                                                  std::span<const IntensityImage> images,
                                                  SeedStream stream,
                                                  const NoiseSpec& noise = {},
                                                  std::size_t noise_index = 0);

struct ClassifierStageResult {
    SvmModel model;
    std::vector<FoldResult> folds;
    double train_accuracy = 0.0;
};

ClassifierStageResult train_classifier_stage(const RunConfig& config, const FilterBank& bank,
                                             const DiscoveryLayer& layer,
                                             const LabeledDataset& train,
                                             std::ostream* log = nullptr);

struct RunOptions {
    std::string out_dir;  // empty: keep everything in memory
    bool resume = true;
    std::ostream* log = nullptr;
};

std::string archive_path(const std::string& out_dir);

// Loads the archive under out_dir (or starts one), trains `stage` if it is not
// already present, saves, and writes that stage's reports.
ModelArchive run_stage(const RunConfig& config, Stage stage, const RunOptions& options);

// All stages in order, skipping any already in a resumed archive.
ModelArchive run_layerwise(const RunConfig& config, const RunOptions& options);

using Confusion = std::array<std::array<int, kClasses>, kClasses>;

struct EvalRow {
    NoiseSpec noise;
    double accuracy = 0.0;
    Confusion confusion{};  // [true][predicted]
};

struct EvalReport {
    std::size_t samples = 0;
    std::vector<EvalRow> rows;
    // Per class, mean |v_h| over the clean (first) row's features: kClasses x H.
    std::vector<std::vector<double>> class_activity;
};

// `workers` overrides the thread count stored in the archive's config when nonzero.
EvalReport evaluate(const ModelArchive& archive, const LabeledDataset& dataset,
                    std::span<const NoiseSpec> noises, std::ostream* log = nullptr,
                    std::size_t workers = 0);

struct ControlRow {
    NeuronModel neuron_model = NeuronModel::probabilistic;
    StdpRule stdp_rule = StdpRule::probabilistic;
    std::vector<double> accuracy;             // one per noise spec
    std::vector<double> correlation_history;  // per discovery iteration
};

struct ControlReport {
    std::vector<NoiseSpec> noises;
    std::vector<ControlRow> rows;

    const ControlRow& row(NeuronModel model, StdpRule rule) const;
};

// Trains the four {probabilistic, plain_lif} x {probabilistic, sigmoidal}
// discovery variants on shared filters and seeds and scores each.
ControlReport control_matrix(const RunConfig& config, const FilterBank& bank,
                             const LabeledDataset& train, const LabeledDataset& test,
                             std::span<const NoiseSpec> noises, std::ostream* log = nullptr);

} // namespace scnn

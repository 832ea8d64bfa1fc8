#pragma once

#include "scnn/rng.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace scnn {

enum class FeatureMode { linear, poly2 };

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view text);

inline constexpr std::size_t kClasses = 10;

struct SvmConfig {
    FeatureMode mode = FeatureMode::linear;
    double lambda = 1e-3;
    int epochs = 300;

    void validate() const;
};

// One-vs-rest linear SVM over (optionally poly-2 expanded) z-scored features.
// Row c of `weights` has dim + 1 entries; the last multiplies a constant 1.
struct SvmModel {
    FeatureMode mode = FeatureMode::linear;
    double lambda = 1e-3;
    int epochs = 0;
    std::size_t input_dim = 0;
    std::size_t dim = 0;  // after expansion
    std::vector<float> mean;
    std::vector<float> inv_std;  // 0 for zero-variance dimensions
    std::vector<float> weights;  // kClasses * (dim + 1)

    std::span<const float> class_weights(std::size_t c) const {
        return {weights.data() + c * (dim + 1), dim + 1};
    }

    bool operator==(const SvmModel&) const = default;
};

struct Prediction {
    int label = 0;
    std::array<double, kClasses> scores{};
};

// [v_i] followed by [v_i v_j] for i <= j.
std::vector<double> poly2_expand(std::span<const double> v);
std::size_t expanded_dim(std::size_t input_dim, FeatureMode mode);

// Expansion, standardization and the trailing bias input, as seen by the weights.
std::vector<double> prepare_features(const SvmModel& model, std::span<const double> feature);

SvmModel train_svm(const std::vector<std::vector<double>>& features,
                   std::span<const std::uint8_t> labels, const SvmConfig& config, Rng& rng);

Prediction predict(const SvmModel& model, std::span<const double> feature);

double accuracy(const SvmModel& model, const std::vector<std::vector<double>>& features,
                std::span<const std::uint8_t> labels);

// lambda/2 |w|^2 + mean hinge for the binary problem "class c vs rest", on
// already prepared inputs.
double binary_objective(std::span<const double> w, const std::vector<std::vector<double>>& prepared,
                        std::span<const std::uint8_t> labels, std::size_t c, double lambda);

// Splits [0, n) into k shuffled folds of near-equal size.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, Rng& rng);

struct FoldResult {
    std::size_t fold = 0;
    FeatureMode mode = FeatureMode::linear;
    double accuracy = 0.0;
};

std::vector<FoldResult> cross_validate(const std::vector<std::vector<double>>& features,
                                       std::span<const std::uint8_t> labels,
                                       const SvmConfig& config, std::size_t folds, Rng& rng);

} // namespace scnn

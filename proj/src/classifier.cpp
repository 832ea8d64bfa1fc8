#include "scnn/classifier.hpp"

#include "scnn/error.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>
#include <string>

namespace scnn {

std::string_view to_string(FeatureMode mode) {
    return mode == FeatureMode::linear ? "linear" : "poly2";
}

FeatureMode parse_feature_mode(std::string_view text) {
    if (text == "linear") return FeatureMode::linear;
    if (text == "poly2") return FeatureMode::poly2;
    throw InvalidParameter("unknown feature mode '" + std::string(text) + "'");
}

void SvmConfig::validate() const {
    if (!(lambda > 0)) throw InvalidParameter("svm: lambda must be > 0");
    if (epochs < 1) throw InvalidParameter("svm: epochs must be >= 1");
}

std::vector<double> poly2_expand(std::span<const double> v) {
    const std::size_t h = v.size();
    std::vector<double> out;
    out.reserve(h + h * (h + 1) / 2);
    out.insert(out.end(), v.begin(), v.end());
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = i; j < h; ++j) {
            out.push_back(v[i] * v[j]);
        }
    }
    return out;
}

std::size_t expanded_dim(std::size_t input_dim, FeatureMode mode) {
    return mode == FeatureMode::linear ? input_dim : input_dim + input_dim * (input_dim + 1) / 2;
}

namespace {

std::vector<double> expand(std::span<const double> v, FeatureMode mode) {
    return mode == FeatureMode::linear ? std::vector<double>(v.begin(), v.end()) : poly2_expand(v);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Pegasos with the iterate kept as scale * v so the shrink step is O(1). The
// returned weights average the iterates at the end of each epoch in the
// second half of training.
std::vector<double> train_binary(const std::vector<std::vector<double>>& x,
                                 std::span<const std::uint8_t> labels, std::size_t cls,
                                 double lambda, int epochs, Rng& rng) {
    const std::size_t dim = x.front().size();
    std::vector<double> v(dim, 0.0);
    double scale = 1.0;
    double v_norm2 = 0.0;
    const double radius2 = 1.0 / lambda;

    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> average(dim, 0.0);
    const int average_from = epochs / 2;
    std::uint64_t t = 0;
    for (int e = 0; e < epochs; ++e) {
        shuffle(std::span(order), rng);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double y = labels[i] == cls ? 1.0 : -1.0;
            const double vx = dot(v, x[i]);
            const double margin = y * scale * vx;
            const double shrink = 1.0 - eta * lambda;
            if (shrink <= 0.0) {
                std::fill(v.begin(), v.end(), 0.0);
                v_norm2 = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if (margin < 1.0) {
                // w += eta * y * x  <=>  v += (eta * y / scale) * x
                const double a = eta * y / scale;
                const double x2 = dot(x[i], x[i]);
                const double vx_now = (shrink <= 0.0) ? 0.0 : vx;
                for (std::size_t k = 0; k < dim; ++k) v[k] += a * x[i][k];
                v_norm2 += 2.0 * a * vx_now + a * a * x2;
            }
            const double w_norm2 = scale * scale * v_norm2;
            if (w_norm2 > radius2) {
                scale *= std::sqrt(radius2 / w_norm2);
            }
            if (scale < 1e-100) {
                for (double& vk : v) vk *= scale;
                v_norm2 *= scale * scale;
                scale = 1.0;
            }
        }
        if (e >= average_from) {
            for (std::size_t k = 0; k < dim; ++k) average[k] += scale * v[k];
        }
    }
    const double snapshots = static_cast<double>(epochs - average_from);
    for (double& a : average) a /= snapshots;
    return average;
}

} // namespace

std::vector<double> prepare_features(const SvmModel& model, std::span<const double> feature) {
    if (feature.size() != model.input_dim) {
        throw DimensionMismatch("svm: feature has " + std::to_string(feature.size()) +
                                " dimensions, model expects " + std::to_string(model.input_dim));
    }
    auto z = expand(feature, model.mode);
    for (std::size_t k = 0; k < model.dim; ++k) {
        z[k] = (z[k] - static_cast<double>(model.mean[k])) * static_cast<double>(model.inv_std[k]);
    }
    z.push_back(1.0);
    return z;
}

SvmModel train_svm(const std::vector<std::vector<double>>& features,
                   std::span<const std::uint8_t> labels, const SvmConfig& config, Rng& rng) {
    config.validate();
    if (features.empty() || features.size() != labels.size()) {
        throw InvalidParameter("train_svm: need one label per feature vector");
    }
    const std::size_t input_dim = features.front().size();
    for (const auto& f : features) {
        if (f.size() != input_dim) throw DimensionMismatch("train_svm: ragged feature vectors");
    }
    for (auto l : labels) {
        if (l >= kClasses) throw InvalidParameter("train_svm: label outside 0..9");
    }
    if (std::adjacent_find(labels.begin(), labels.end(), std::not_equal_to<>()) == labels.end()) {
        throw InvalidParameter("train_svm: training data contains a single class");
    }

    SvmModel model;
    model.mode = config.mode;
    model.lambda = config.lambda;
    model.epochs = config.epochs;
    model.input_dim = input_dim;
    model.dim = expanded_dim(input_dim, config.mode);

    std::vector<std::vector<double>> expanded;
    expanded.reserve(features.size());
    for (const auto& f : features) expanded.push_back(expand(f, config.mode));

    const double n = static_cast<double>(features.size());
    model.mean.assign(model.dim, 0.0f);
    model.inv_std.assign(model.dim, 0.0f);
    for (std::size_t k = 0; k < model.dim; ++k) {
        double mean = 0.0;
        for (const auto& e : expanded) mean += e[k];
        mean /= n;
        double var = 0.0;
        for (const auto& e : expanded) var += (e[k] - mean) * (e[k] - mean);
        const double sd = std::sqrt(var / n);
        model.mean[k] = static_cast<float>(mean);
        // Relative cutoff: dimensions that are constant up to rounding count as zero-variance.
        model.inv_std[k] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? static_cast<float>(1.0 / sd)
                                                                      : 0.0f;
    }

    std::vector<std::vector<double>> prepared;
    prepared.reserve(features.size());
    for (const auto& f : features) prepared.push_back(prepare_features(model, f));
    expanded.clear();

    model.weights.assign(kClasses * (model.dim + 1), 0.0f);
    for (std::size_t c = 0; c < kClasses; ++c) {
        Rng class_rng(derive_seed(rng(), c));
        const auto w = train_binary(prepared, labels, c, config.lambda, config.epochs, class_rng);
        std::transform(w.begin(), w.end(), model.weights.begin() + static_cast<std::ptrdiff_t>(c * (model.dim + 1)),
                       [](double x) { return static_cast<float>(x); });
    }
    return model;
}

Prediction predict(const SvmModel& model, std::span<const double> feature) {
    const auto z = prepare_features(model, feature);
    Prediction p;
    for (std::size_t c = 0; c < kClasses; ++c) {
        const auto w = model.class_weights(c);
        double s = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) s += static_cast<double>(w[k]) * z[k];
        p.scores[c] = s;
    }
    p.label = static_cast<int>(std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin());
    return p;
}

double accuracy(const SvmModel& model, const std::vector<std::vector<double>>& features,
                std::span<const std::uint8_t> labels) {
    if (features.empty() || features.size() != labels.size()) {
        throw InvalidParameter("accuracy: need one label per feature vector");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        hits += predict(model, features[i]).label == labels[i];
    }
    return static_cast<double>(hits) / static_cast<double>(features.size());
}

double binary_objective(std::span<const double> w, const std::vector<std::vector<double>>& prepared,
                        std::span<const std::uint8_t> labels, std::size_t c, double lambda) {
    double hinge = 0.0;
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        const double y = labels[i] == c ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - y * dot(w, prepared[i]));
    }
    return 0.5 * lambda * dot(w, w) + hinge / static_cast<double>(prepared.size());
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, Rng& rng) {
    if (k < 2 || k > n) {
        throw InvalidParameter("kfold_partition: need 2 <= k <= n");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span(order), rng);
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<FoldResult> cross_validate(const std::vector<std::vector<double>>& features,
                                       std::span<const std::uint8_t> labels,
                                       const SvmConfig& config, std::size_t folds, Rng& rng) {
    const auto parts = kfold_partition(features.size(), folds, rng);
    std::vector<FoldResult> results;
    for (std::size_t f = 0; f < parts.size(); ++f) {
        std::vector<bool> held(features.size(), false);
        for (std::size_t i : parts[f]) held[i] = true;
        std::vector<std::vector<double>> train_x, test_x;
        std::vector<std::uint8_t> train_y, test_y;
        for (std::size_t i = 0; i < features.size(); ++i) {
            (held[i] ? test_x : train_x).push_back(features[i]);
            (held[i] ? test_y : train_y).push_back(labels[i]);
        }
        const auto model = train_svm(train_x, train_y, config, rng);
        results.push_back({f, config.mode, accuracy(model, test_x, test_y)});
    }
    return results;
}

} // namespace scnn

#include "scnn/sailnet.hpp"

#include "scnn/error.hpp"
#include "scnn/spike.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scnn {

void SailnetConfig::validate() const {
    if (filters == 0) throw InvalidParameter("sailnet: filter count must be >= 1");
    if (patch_size == 0) throw InvalidParameter("sailnet: patch size must be >= 1");
    if (stride == 0) throw InvalidParameter("sailnet: stride must be >= 1");
    if (!(alpha > 0 && beta > 0 && gamma > 0)) {
        throw InvalidParameter("sailnet: learning rates must be > 0");
    }
    if (!(rho > 0 && rho < 1)) throw InvalidParameter("sailnet: rho must lie in (0, 1)");
    if (steps < 1) throw InvalidParameter("sailnet: presentation length must be >= 1");
    if (!(tau > 0)) throw InvalidParameter("sailnet: tau must be > 0");
}

SailnetState SailnetState::initial(const SailnetConfig& config, Rng& rng) {
    config.validate();
    SailnetState s;
    s.units = config.filters;
    s.inputs = config.patch_size * config.patch_size;
    s.w_ex.resize(s.units * s.inputs);
    for (double& w : s.w_ex) {
        w = uniform01(rng);
    }
    s.w_inh.assign(s.units * s.units, 0.0);
    s.thresholds.assign(s.units, config.initial_threshold);
    return s;
}

FilterBank FilterBank::freeze(const SailnetState& state, std::size_t patch_size) {
    if (patch_size * patch_size != state.inputs) {
        throw DimensionMismatch("filter bank: patch size does not match weight rows");
    }
    FilterBank bank;
    bank.count = state.units;
    bank.size = patch_size;
    bank.weights.assign(state.w_ex.begin(), state.w_ex.end());
    return bank;
}

std::vector<int> sailnet_present(std::span<const double> patch, const SailnetState& state,
                                 int steps, double tau) {
    if (patch.size() != state.inputs) {
        throw DimensionMismatch("sailnet_present: patch length does not match inputs");
    }
    const std::size_t d = state.units;
    const double decay = std::exp(-1.0 / tau);

    std::vector<double> drive(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double* w = &state.w_ex[i * state.inputs];
        double sum = 0.0;
        for (std::size_t k = 0; k < state.inputs; ++k) {
            sum += w[k] * patch[k];
        }
        drive[i] = sum;
    }

    std::vector<int> counts(d, 0);
    std::vector<double> potential(d, 0.0);
    std::vector<std::size_t> fired_prev;
    std::vector<std::size_t> fired_now;
    fired_prev.reserve(d);
    fired_now.reserve(d);

    for (int t = 0; t < steps; ++t) {
        fired_now.clear();
        for (std::size_t i = 0; i < d; ++i) {
            double current = drive[i];
            for (std::size_t m : fired_prev) {
                current -= state.inh(i, m);  // diagonal is zero
            }
            if (lif_integrate(potential[i], current, decay, state.thresholds[i])) {
                fired_now.push_back(i);
                ++counts[i];
            }
        }
        std::swap(fired_prev, fired_now);
    }
    return counts;
}

void sailnet_update(SailnetState& state, std::span<const double> patch,
                    std::span<const int> counts, const SailnetConfig& config) {
    const std::size_t d = state.units;
    if (patch.size() != state.inputs || counts.size() != d) {
        throw DimensionMismatch("sailnet_update: patch or count length mismatch");
    }
    const double rho2 = config.rho * config.rho;

    for (std::size_t i = 0; i < d; ++i) {
        const double ni = counts[i];
        double* row = &state.w_inh[i * d];
        for (std::size_t m = 0; m < d; ++m) {
            if (m == i) continue;
            const double w = row[m] + config.alpha * (ni * counts[m] - rho2);
            row[m] = w > 0.0 ? w : 0.0;
        }
    }

    for (std::size_t i = 0; i < d; ++i) {
        const double ni = counts[i];
        if (ni == 0.0) continue;
        double* w = &state.w_ex[i * state.inputs];
        for (std::size_t k = 0; k < state.inputs; ++k) {
            w[k] += config.beta * ni * (patch[k] - ni * w[k]);
        }
    }

    for (std::size_t i = 0; i < d; ++i) {
        state.thresholds[i] += config.gamma * (counts[i] - config.rho);
    }
}

PatchSource::PatchSource(std::vector<Grid<double>> normalized_images, std::size_t patch_size,
                         std::size_t stride)
    : images_(std::move(normalized_images)), patch_size_(patch_size), stride_(stride) {
    if (images_.empty()) {
        return;
    }
    const std::size_t rows = images_.front().rows;
    cols_ = images_.front().cols;
    for (const auto& img : images_) {
        if (img.rows != rows || img.cols != cols_) {
            throw GeometryError("patch source: images differ in shape");
        }
    }
    per_image_ = patch_positions(rows, patch_size, stride) *
                 patch_positions(cols_, patch_size, stride);
}

PatchSource PatchSource::from_images(std::span<const IntensityImage> images,
                                     std::size_t patch_size, std::size_t stride) {
    std::vector<Grid<double>> normalized;
    normalized.reserve(images.size());
    for (const auto& img : images) {
        normalized.push_back(normalize_zero_mean_unit_std(img));
    }
    return PatchSource(std::move(normalized), patch_size, stride);
}

void PatchSource::copy(std::size_t index, std::span<double> out) const {
    const std::size_t image = index / per_image_;
    const std::size_t pos = index % per_image_;
    const std::size_t across = patch_positions(cols_, patch_size_, stride_);
    copy_patch(images_[image], (pos / across) * stride_, (pos % across) * stride_, patch_size_,
               out);
    standardize_patch(out);
}

void standardize_patch(std::span<double> patch) {
    if (patch.empty()) return;
    const double n = static_cast<double>(patch.size());
    double mean = 0.0;
    for (double v : patch) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : patch) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    if (sd < 1e-12) {
        std::fill(patch.begin(), patch.end(), 0.0);
        return;
    }
    for (double& v : patch) v = (v - mean) / sd;
}

namespace {

double mean_offdiag_inh(const SailnetState& s) {
    if (s.units < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < s.units; ++i) {
        for (std::size_t m = 0; m < s.units; ++m) {
            if (i != m) sum += std::abs(s.inh(i, m));
        }
    }
    return sum / static_cast<double>(s.units * (s.units - 1));
}

} // namespace

SailnetTraining train_filters(const PatchSource& patches, const SailnetConfig& config,
                              int iterations, Rng& rng, const SailnetProgress& progress) {
    config.validate();
    if (iterations < 1) {
        throw InvalidParameter("train_filters: iterations must be >= 1");
    }
    if (patches.size() == 0) {
        throw InvalidParameter("train_filters: empty patch stream");
    }
    if (patches.patch_size() != config.patch_size) {
        throw DimensionMismatch("train_filters: patch size differs from config");
    }

    SailnetTraining out{SailnetState::initial(config, rng), {}, {}};
    std::vector<std::uint32_t> order(patches.size());
    std::iota(order.begin(), order.end(), 0u);
    std::vector<double> patch(config.patch_size * config.patch_size);

    for (int it = 1; it <= iterations; ++it) {
        shuffle(std::span(order), rng);
        std::uint64_t spikes = 0;
        for (std::uint32_t idx : order) {
            patches.copy(idx, patch);
            const auto counts = sailnet_present(patch, out.state, config.steps, config.tau);
            sailnet_update(out.state, patch, counts, config);
            spikes += static_cast<std::uint64_t>(std::accumulate(counts.begin(), counts.end(), 0));
        }
        SailnetDiagnostics diag;
        diag.iteration = it;
        diag.mean_spikes_per_patch = static_cast<double>(spikes) / static_cast<double>(order.size());
        diag.mean_rate = diag.mean_spikes_per_patch / static_cast<double>(config.filters);
        diag.mean_inh = mean_offdiag_inh(out.state);
        out.diagnostics.push_back(diag);
        if (progress) progress(diag);
    }
    out.bank = FilterBank::freeze(out.state, config.patch_size);
    return out;
}

double mean_spikes_per_patch(const SailnetState& state, const PatchSource& patches,
                             std::size_t samples, int steps, double tau, Rng& rng) {
    if (patches.size() == 0 || samples == 0) {
        throw InvalidParameter("mean_spikes_per_patch: nothing to sample");
    }
    std::vector<double> patch(state.inputs);
    std::uint64_t spikes = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        patches.copy(static_cast<std::size_t>(uniform_index(rng, patches.size())), patch);
        const auto counts = sailnet_present(patch, state, steps, tau);
        spikes += static_cast<std::uint64_t>(std::accumulate(counts.begin(), counts.end(), 0));
    }
    return static_cast<double>(spikes) / static_cast<double>(samples);
}

} // namespace scnn

#pragma once

#include "scnn/dataio.hpp"
#include "scnn/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace scnn {

struct SailnetConfig {
    std::size_t filters = 32;    // D
    std::size_t patch_size = 5;  // p
    std::size_t stride = 1;
    double alpha = 0.01;   // inhibitory (anti-Hebbian) rate
    double beta = 0.0001;  // excitatory (Hebbian) rate
    double gamma = 0.02;   // threshold adaptation rate
    double rho = 0.05;     // target spikes per unit per presentation
    int steps = 20;        // T
    double tau = 1.0;
    double initial_threshold = 5.0;

    void validate() const;
};

// Excitatory weights are D x p^2, inhibitory D x D with a zero diagonal.
struct SailnetState {
    std::size_t units = 0;
    std::size_t inputs = 0;
    std::vector<double> w_ex;
    std::vector<double> w_inh;
    std::vector<double> thresholds;

    static SailnetState initial(const SailnetConfig& config, Rng& rng);

    double& ex(std::size_t i, std::size_t k) { return w_ex[i * inputs + k]; }
    double ex(std::size_t i, std::size_t k) const { return w_ex[i * inputs + k]; }
    double& inh(std::size_t i, std::size_t m) { return w_inh[i * units + m]; }
    double inh(std::size_t i, std::size_t m) const { return w_inh[i * units + m]; }
};

// Trained excitatory weights, frozen as float32.
struct FilterBank {
    std::size_t count = 0;  // D
    std::size_t size = 0;   // p
    std::vector<float> weights;  // count * size * size

    std::span<const float> filter(std::size_t k) const {
        return {weights.data() + k * size * size, size * size};
    }
    std::span<float> filter(std::size_t k) {
        return {weights.data() + k * size * size, size * size};
    }

    static FilterBank freeze(const SailnetState& state, std::size_t patch_size);

    bool operator==(const FilterBank&) const = default;
};

// Runs one presentation of `patch` (length p^2) for `steps` steps and returns the
// per-unit spike counts. Potentials start at zero; inhibition at step t comes
// from the spikes of step t-1.
std::vector<int> sailnet_present(std::span<const double> patch, const SailnetState& state,
                                 int steps, double tau = 1.0);

void sailnet_update(SailnetState& state, std::span<const double> patch,
                    std::span<const int> counts, const SailnetConfig& config);

// Rescales a patch to zero mean and unit (population) standard deviation. A
// constant patch becomes all zeros.
void standardize_patch(std::span<double> patch);

// Every overlapping p x p window of a set of normalized images, addressable by
// a flat index so that an iteration can visit them in shuffled order.
class PatchSource {
public:
    PatchSource(std::vector<Grid<double>> normalized_images, std::size_t patch_size,
                std::size_t stride);

    // Normalizes every image before indexing it.
    static PatchSource from_images(std::span<const IntensityImage> images,
                                   std::size_t patch_size, std::size_t stride);

    std::size_t size() const { return images_.size() * per_image_; }
    std::size_t patch_size() const { return patch_size_; }
    // Writes patch `index`, standardized on its own.
    void copy(std::size_t index, std::span<double> out) const;

private:
    std::vector<Grid<double>> images_;
    std::size_t patch_size_;
    std::size_t stride_;
    std::size_t cols_ = 0;
    std::size_t per_image_ = 0;
};

struct SailnetDiagnostics {
    int iteration = 0;
    double mean_spikes_per_patch = 0.0;  // sum over units, averaged over presentations
    double mean_rate = 0.0;              // per unit per presentation
    double mean_inh = 0.0;               // mean |W_inh| off the diagonal
};

using SailnetProgress = std::function<void(const SailnetDiagnostics&)>;

struct SailnetTraining {
    SailnetState state;
    FilterBank bank;
    std::vector<SailnetDiagnostics> diagnostics;
};

// Online training: weights are updated after every patch, patches are visited in
// a fresh random order each iteration.
SailnetTraining train_filters(const PatchSource& patches, const SailnetConfig& config,
                              int iterations, Rng& rng, const SailnetProgress& progress = {});

// Mean summed spike count per presentation with learning frozen.
double mean_spikes_per_patch(const SailnetState& state, const PatchSource& patches,
                             std::size_t samples, int steps, double tau, Rng& rng);

} // namespace scnn

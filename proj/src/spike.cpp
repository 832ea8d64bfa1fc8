#include "scnn/spike.hpp"

#include "scnn/error.hpp"

#include <algorithm>
#include <numeric>

namespace scnn {

int SpikeTensor::count(std::size_t unit) const {
    int n = 0;
    for (int t = 0; t < steps_; ++t) {
        n += bits_[index(unit, t)];
    }
    return n;
}

std::vector<int> SpikeTensor::counts() const {
    std::vector<int> out(units_, 0);
    for (int t = 0; t < steps_; ++t) {
        const auto row = step(t);
        for (std::size_t u = 0; u < units_; ++u) {
            out[u] += row[u];
        }
    }
    return out;
}

std::size_t SpikeTensor::total() const {
    return std::accumulate(bits_.begin(), bits_.end(), std::size_t{0});
}

LifStepResult lif_step(const LifState& state, double input_current, const LifParams& params,
                       int step) {
    LifStepResult result{state, false};
    result.spiked =
        lif_integrate(result.state.potential, input_current, params.decay(), params.threshold);
    if (result.spiked) {
        result.state.last_spike_step = step;
    }
    return result;
}

SpikeTensor encode_poisson(const IntensityImage& image, int steps, Rng& rng) {
    if (steps < 1) {
        throw InvalidParameter("presentation length must be >= 1 step");
    }
    SpikeTensor out(image.size(), steps);
    for (int t = 0; t < steps; ++t) {
        auto row = out.step(t);
        for (std::size_t u = 0; u < image.size(); ++u) {
            const double rate = std::clamp(image.data[u], 0.0, 1.0);
            // Silent pixels consume no draws.
            if (rate > 0.0) {
                row[u] = uniform01(rng) < rate ? 1 : 0;
            }
        }
    }
    return out;
}

} // namespace scnn

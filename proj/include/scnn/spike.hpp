#pragma once

#include "scnn/dataio.hpp"
#include "scnn/rng.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace scnn {

// Binary spike raster over (units x steps), stored step-major so that one
// time step is a contiguous span.
class SpikeTensor {
public:
    SpikeTensor() = default;
    SpikeTensor(std::size_t units, int steps)
        : units_(units), steps_(steps), bits_(units * static_cast<std::size_t>(steps), 0) {}

    std::size_t units() const { return units_; }
    int steps() const { return steps_; }

    bool spiked(std::size_t unit, int t) const { return bits_[index(unit, t)] != 0; }
    void set(std::size_t unit, int t, bool value = true) { bits_[index(unit, t)] = value ? 1 : 0; }

    std::span<const std::uint8_t> step(int t) const {
        return {bits_.data() + static_cast<std::size_t>(t) * units_, units_};
    }
    std::span<std::uint8_t> step(int t) {
        return {bits_.data() + static_cast<std::size_t>(t) * units_, units_};
    }

    int count(std::size_t unit) const;
    std::vector<int> counts() const;
    std::size_t total() const;

    bool operator==(const SpikeTensor&) const = default;

private:
    std::size_t index(std::size_t unit, int t) const {
        return static_cast<std::size_t>(t) * units_ + unit;
    }

    std::size_t units_ = 0;
    int steps_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct LifParams {
    double tau = 1.0;        // ms
    double threshold = 1.0;  // dimensionless potential
    double dt = 1.0;         // ms

    double decay() const { return std::exp(-dt / tau); }
};

struct LifState {
    double potential = 0.0;
    std::optional<int> last_spike_step;
};

struct LifStepResult {
    LifState state;
    bool spiked = false;
};

// U(t) = exp(-dt/tau) U(t-1) + I(t); fire and reset to 0 once U >= threshold.
// Hot loops call this overload directly with a precomputed decay factor.
inline bool lif_integrate(double& potential, double current, double decay, double threshold) {
    potential = decay * potential + current;
    if (potential >= threshold) {
        potential = 0.0;
        return true;
    }
    return false;
}

LifStepResult lif_step(const LifState& state, double input_current, const LifParams& params,
                       int step);

// Per-step Bernoulli spikes with probability equal to the pixel intensity.
SpikeTensor encode_poisson(const IntensityImage& image, int steps, Rng& rng);

} // namespace scnn

#pragma once

#include "scnn/sailnet.hpp"
#include "scnn/spike.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace scnn {

// D feature maps of LIF units. Unit (k, r, c) is spike row k*rows*cols + r*cols + c.
struct FeatureMapSpikes {
    std::size_t maps = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t patch_size = 0;
    std::size_t stride = 1;
    SpikeTensor spikes;

    std::size_t map_units() const { return rows * cols; }
    std::size_t unit(std::size_t k, std::size_t r, std::size_t c) const {
        return k * rows * cols + r * cols + c;
    }
};

// Pooled maps use the same unit layout. `winners` holds, per pooled cell, the
// row-major index of the selected unit inside its l_p x l_p block.
struct PooledMaps {
    std::size_t maps = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    SpikeTensor spikes;
    std::vector<std::uint32_t> winners;

    std::size_t units() const { return maps * rows * cols; }
    int steps() const { return spikes.steps(); }
};

struct ConvParams {
    std::size_t stride = 1;   // l_c
    double threshold = 1.0;   // theta_conv
    double tau = 1.0;
};

// Drives one LIF unit per (filter, position) with the current sum_ij W_k(i,j) s(i,j,t).
// `input` covers an in_rows x in_cols pixel grid. Borders are ignored.
FeatureMapSpikes convolve_spiking(const SpikeTensor& input, std::size_t in_rows,
                                  std::size_t in_cols, const FilterBank& bank,
                                  const ConvParams& params);

// Mean injected current for a filter given per-pixel spike probabilities.
double expected_current(std::span<const float> filter, std::span<const double> rates);

// Non-overlapping l_p x l_p max pooling on spike counts; the winner's full train
// is forwarded. Ties go to the smallest row-major index in the block.
PooledMaps max_pool(const FeatureMapSpikes& maps, std::size_t pool);

} // namespace scnn

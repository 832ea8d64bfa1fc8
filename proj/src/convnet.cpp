#include "scnn/convnet.hpp"

#include "scnn/error.hpp"

#include <cmath>

namespace scnn {

FeatureMapSpikes convolve_spiking(const SpikeTensor& input, std::size_t in_rows,
                                  std::size_t in_cols, const FilterBank& bank,
                                  const ConvParams& params) {
    if (input.units() != in_rows * in_cols) {
        throw DimensionMismatch("convolve_spiking: spike tensor does not cover the image grid");
    }
    if (!(params.threshold > 0.0)) {
        throw InvalidParameter("convolve_spiking: threshold must be > 0");
    }
    const std::size_t p = bank.size;
    const std::size_t d = bank.count;
    const std::size_t stride = params.stride;
    if (p > in_rows || p > in_cols) {
        throw GeometryError("convolve_spiking: filter of size " + std::to_string(p) +
                            " exceeds the " + std::to_string(in_rows) + "x" +
                            std::to_string(in_cols) + " input");
    }

    FeatureMapSpikes out;
    out.maps = d;
    out.rows = patch_positions(in_rows, p, stride);
    out.cols = patch_positions(in_cols, p, stride);
    out.patch_size = p;
    out.stride = stride;
    const std::size_t positions = out.rows * out.cols;
    const int steps = input.steps();
    out.spikes = SpikeTensor(d * positions, steps);

    // Tap-major weights and position-major state keep the per-filter loop contiguous.
    std::vector<double> taps(p * p * d);
    for (std::size_t k = 0; k < d; ++k) {
        const auto f = bank.filter(k);
        for (std::size_t tap = 0; tap < p * p; ++tap) {
            taps[tap * d + k] = f[tap];
        }
    }
    std::vector<double> current(positions * d);
    std::vector<double> potential(positions * d, 0.0);
    const double decay = std::exp(-1.0 / params.tau);

    for (int t = 0; t < steps; ++t) {
        std::fill(current.begin(), current.end(), 0.0);
        const auto in = input.step(t);
        for (std::size_t px = 0; px < in.size(); ++px) {
            if (!in[px]) continue;
            const std::size_t y = px / in_cols;
            const std::size_t x = px % in_cols;
            for (std::size_t i = 0; i < p && i <= y; ++i) {
                const std::size_t oy_off = y - i;
                if (oy_off % stride) continue;
                const std::size_t oy = oy_off / stride;
                if (oy >= out.rows) continue;
                for (std::size_t j = 0; j < p && j <= x; ++j) {
                    const std::size_t ox_off = x - j;
                    if (ox_off % stride) continue;
                    const std::size_t ox = ox_off / stride;
                    if (ox >= out.cols) continue;
                    double* cur = &current[(oy * out.cols + ox) * d];
                    const double* w = &taps[(i * p + j) * d];
                    for (std::size_t k = 0; k < d; ++k) {
                        cur[k] += w[k];
                    }
                }
            }
        }
        auto row = out.spikes.step(t);
        for (std::size_t pos = 0; pos < positions; ++pos) {
            for (std::size_t k = 0; k < d; ++k) {
                const std::size_t s = pos * d + k;
                if (lif_integrate(potential[s], current[s], decay, params.threshold)) {
                    row[k * positions + pos] = 1;
                }
            }
        }
    }
    return out;
}

double expected_current(std::span<const float> filter, std::span<const double> rates) {
    if (filter.size() != rates.size()) {
        throw DimensionMismatch("expected_current: filter and rate sizes differ");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < filter.size(); ++i) {
        sum += static_cast<double>(filter[i]) * rates[i];
    }
    return sum;
}

PooledMaps max_pool(const FeatureMapSpikes& maps, std::size_t pool) {
    if (pool == 0) {
        throw InvalidParameter("max_pool: pool size must be >= 1");
    }
    if (maps.rows % pool || maps.cols % pool) {
        throw GeometryError("max_pool: " + std::to_string(maps.rows) + "x" +
                            std::to_string(maps.cols) + " map is not divisible by " +
                            std::to_string(pool));
    }
    PooledMaps out;
    out.maps = maps.maps;
    out.rows = maps.rows / pool;
    out.cols = maps.cols / pool;
    const int steps = maps.spikes.steps();
    out.spikes = SpikeTensor(out.units(), steps);
    out.winners.resize(out.units());

    const auto counts = maps.spikes.counts();
    for (std::size_t k = 0; k < maps.maps; ++k) {
        for (std::size_t pr = 0; pr < out.rows; ++pr) {
            for (std::size_t pc = 0; pc < out.cols; ++pc) {
                std::size_t best_unit = maps.unit(k, pr * pool, pc * pool);
                std::uint32_t best_index = 0;
                int best_count = counts[best_unit];
                for (std::size_t i = 0; i < pool; ++i) {
                    for (std::size_t j = 0; j < pool; ++j) {
                        const std::size_t u = maps.unit(k, pr * pool + i, pc * pool + j);
                        if (counts[u] > best_count) {
                            best_count = counts[u];
                            best_unit = u;
                            best_index = static_cast<std::uint32_t>(i * pool + j);
                        }
                    }
                }
                const std::size_t cell = k * out.rows * out.cols + pr * out.cols + pc;
                out.winners[cell] = best_index;
                for (int t = 0; t < steps; ++t) {
                    out.spikes.step(t)[cell] = maps.spikes.step(t)[best_unit];
                }
            }
        }
    }
    return out;
}

} // namespace scnn

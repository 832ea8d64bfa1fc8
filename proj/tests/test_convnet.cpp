#include "scnn/convnet.hpp"
#include "scnn/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace scnn;

namespace {

FilterBank random_bank(std::size_t d, std::size_t p, Rng& rng) {
    FilterBank bank;
    bank.count = d;
    bank.size = p;
    bank.weights.resize(d * p * p);
    for (float& w : bank.weights) w = static_cast<float>(uniform(rng, -0.6, 0.9));
    return bank;
}

// Direct evaluation of the per-position currents and LIF updates.
SpikeTensor reference_convolve(const SpikeTensor& in, std::size_t rows, std::size_t cols,
                               const FilterBank& bank, std::size_t stride, double threshold,
                               double tau) {
    const std::size_t p = bank.size;
    const std::size_t orows = (rows - p) / stride + 1, ocols = (cols - p) / stride + 1;
    SpikeTensor out(bank.count * orows * ocols, in.steps());
    std::vector<double> u(out.units(), 0.0);
    for (int t = 0; t < in.steps(); ++t) {
        for (std::size_t k = 0; k < bank.count; ++k) {
            for (std::size_t r = 0; r < orows; ++r) {
                for (std::size_t c = 0; c < ocols; ++c) {
                    double current = 0.0;
                    for (std::size_t i = 0; i < p; ++i)
                        for (std::size_t j = 0; j < p; ++j)
                            if (in.spiked((r * stride + i) * cols + c * stride + j, t))
                                current += bank.filter(k)[i * p + j];
                    const std::size_t unit = (k * orows + r) * ocols + c;
                    u[unit] = std::exp(-1.0 / tau) * u[unit] + current;
                    if (u[unit] >= threshold) {
                        out.set(unit, t);
                        u[unit] = 0.0;
                    }
                }
            }
        }
    }
    return out;
}

FeatureMapSpikes block_maps(const std::vector<std::vector<int>>& trains, std::size_t rows,
                            std::size_t cols) {
    FeatureMapSpikes m;
    m.maps = trains.size() / (rows * cols);
    m.rows = rows;
    m.cols = cols;
    m.patch_size = 1;
    const int steps = static_cast<int>(trains.front().size());
    m.spikes = SpikeTensor(trains.size(), steps);
    for (std::size_t u = 0; u < trains.size(); ++u)
        for (int t = 0; t < steps; ++t) m.spikes.set(u, t, trains[u][t] != 0);
    return m;
}

std::vector<int> train_with_count(int count, int steps, Rng& rng) {
    std::vector<int> train(steps, 0);
    std::fill(train.begin(), train.begin() + count, 1);
    shuffle(std::span(train), rng);
    return train;
}

} // namespace

TEST_SUITE("convnet") {

TEST_CASE("28x28 input with p=5 gives 24x24 maps") {
    Rng rng(1);
    const auto bank = random_bank(4, 5, rng);
    const auto maps = convolve_spiking(SpikeTensor(784, 20), 28, 28, bank, {});
    CHECK(maps.rows == 24);
    CHECK(maps.cols == 24);
    CHECK(maps.maps == 4);
    CHECK(maps.spikes.units() == 4 * 576);
}

TEST_CASE("silent input gives silent maps") {
    Rng rng(2);
    const auto bank = random_bank(8, 5, rng);
    const auto maps = convolve_spiking(SpikeTensor(784, 20), 28, 28, bank, {});
    CHECK(maps.spikes.total() == 0);
}

TEST_CASE("a single tap follows a single spiking pixel") {
    FilterBank bank;
    bank.count = 1;
    bank.size = 5;
    bank.weights.assign(25, 0.0f);
    bank.weights[0] = 1.0f;  // top-left tap
    SpikeTensor in(784, 20);
    for (int t = 0; t < 20; ++t) in.set(10 * 28 + 12, t);
    const auto maps = convolve_spiking(in, 28, 28, bank, {});
    const std::size_t aligned = maps.unit(0, 10, 12);
    CHECK(maps.spikes.count(aligned) == 20);
    CHECK(maps.spikes.total() == 20);
}

TEST_CASE("convolution matches a naive per-position simulation") {
    Rng rng(3);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t rows = 6 + uniform_index(rng, 10), cols = 6 + uniform_index(rng, 10);
        const std::size_t p = 1 + uniform_index(rng, 5);
        const std::size_t stride = 1 + uniform_index(rng, 2);
        const auto bank = random_bank(1 + uniform_index(rng, 5), p, rng);
        const auto img = testing::random_image(rows, cols, rng);
        const auto in = encode_poisson(img, 20, rng);
        const double threshold = uniform(rng, 0.3, 2.0), tau = uniform(rng, 0.5, 3.0);
        const auto maps = convolve_spiking(in, rows, cols, bank, {stride, threshold, tau});
        REQUIRE(maps.spikes == reference_convolve(in, rows, cols, bank, stride, threshold, tau));
    }
}

TEST_CASE("expected current closed forms") {
    const std::vector<float> ones(25, 1.0f);
    CHECK(expected_current(ones, std::vector<double>(25, 0.5)) == 12.5);
    CHECK(expected_current(ones, std::vector<double>(25, 0.0)) == 0.0);
}

TEST_CASE("mean injected current matches the expected current within 3 sigma") {
    // 50 random filter/rate pairs, 1e5 Poisson encodings each.
    Rng rng(4);
    const std::size_t n = 100000;
    int failures = 0;
    for (int pair = 0; pair < 50; ++pair) {
        const auto bank = random_bank(1, 5, rng);
        const auto rates = testing::random_image(5, 5, rng);
        const auto spikes = encode_poisson(rates, static_cast<int>(n), rng);
        const auto filter = bank.filter(0);
        double sum = 0.0;
        for (std::size_t e = 0; e < n; ++e) {
            const auto s = spikes.step(static_cast<int>(e));
            for (std::size_t k = 0; k < 25; ++k) if (s[k]) sum += filter[k];
        }
        double var = 0.0;
        for (std::size_t k = 0; k < 25; ++k)
            var += double(filter[k]) * filter[k] * rates.data[k] * (1 - rates.data[k]);
        const double expect = expected_current(filter, rates.data);
        const double sigma = std::sqrt(var / static_cast<double>(n));
        if (std::abs(sum / static_cast<double>(n) - expect) > 3.0 * sigma) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("output rate is non-decreasing in expected current") {
    FilterBank bank;
    bank.count = 1;
    bank.size = 5;
    bank.weights.assign(25, 0.2f);
    Rng rng(5);
    double previous = -1.0;
    for (int level = 0; level <= 10; ++level) {
        const IntensityImage img(5, 5, level / 10.0);
        double total = 0.0;
        for (int trial = 0; trial < 2000; ++trial) {
            total += static_cast<double>(
                convolve_spiking(encode_poisson(img, 20, rng), 5, 5, bank, {}).spikes.total());
        }
        const double mean = total / 2000.0;
        CHECK(mean >= previous);
        previous = mean;
    }
    CHECK(previous == 20.0);
}

TEST_CASE("permuting filters permutes maps") {
    Rng rng(6);
    const auto bank = random_bank(6, 5, rng);
    const auto in = encode_poisson(testing::random_image(28, 28, rng), 20, rng);
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    FilterBank permuted = bank;
    for (std::size_t k = 0; k < 6; ++k) {
        std::copy(bank.filter(perm[k]).begin(), bank.filter(perm[k]).end(), permuted.filter(k).begin());
    }
    const auto a = convolve_spiking(in, 28, 28, bank, {});
    const auto b = convolve_spiking(in, 28, 28, permuted, {});
    for (std::size_t k = 0; k < 6; ++k)
        for (std::size_t pos = 0; pos < a.map_units(); ++pos)
            for (int t = 0; t < 20; ++t)
                REQUIRE(b.spikes.spiked(k * 576 + pos, t) == a.spikes.spiked(perm[k] * 576 + pos, t));
}

TEST_CASE("convolution is deterministic and geometry is checked") {
    Rng rng(7);
    const auto bank = random_bank(3, 5, rng);
    const auto img = testing::random_image(28, 28, rng);
    Rng a(9), b(9);
    CHECK(convolve_spiking(encode_poisson(img, 20, a), 28, 28, bank, {}).spikes ==
          convolve_spiking(encode_poisson(img, 20, b), 28, 28, bank, {}).spikes);
    CHECK_THROWS_AS(convolve_spiking(SpikeTensor(16, 20), 4, 4, bank, {}), GeometryError);
    CHECK_THROWS_AS(convolve_spiking(SpikeTensor(15, 20), 4, 4, bank, {}), DimensionMismatch);
}

TEST_CASE("max pooling picks the busiest unit") {
    Rng rng(8);
    const std::vector<std::vector<int>> trains{train_with_count(3, 20, rng), train_with_count(7, 20, rng),
                                               train_with_count(2, 20, rng), train_with_count(5, 20, rng)};
    const auto pooled = max_pool(block_maps(trains, 2, 2), 2);
    REQUIRE(pooled.units() == 1);
    CHECK(pooled.winners[0] == 1);
    for (int t = 0; t < 20; ++t) CHECK(pooled.spikes.spiked(0, t) == (trains[1][t] != 0));
}

TEST_CASE("ties go to the first unit of the block") {
    Rng rng(9);
    const auto train = train_with_count(6, 20, rng);
    const auto pooled = max_pool(block_maps({train, train, train, train}, 2, 2), 2);
    CHECK(pooled.winners[0] == 0);
    for (int t = 0; t < 20; ++t) CHECK(pooled.spikes.spiked(0, t) == (train[t] != 0));
    // Equal counts with different timing still resolve to index 0.
    auto other = train;
    std::rotate(other.begin(), other.begin() + 1, other.end());
    CHECK(max_pool(block_maps({train, other, train, other}, 2, 2), 2).winners[0] == 0);
    CHECK(max_pool(block_maps({train_with_count(1, 20, rng), other, train, other}, 2, 2), 2).winners[0] == 1);
}

TEST_CASE("pooled trains are verbatim copies of winners, shapes follow l_p") {
    Rng rng(10);
    const auto bank = random_bank(32, 5, rng);
    const auto maps =
        convolve_spiking(encode_poisson(testing::random_image(28, 28, rng), 20, rng), 28, 28, bank, {});
    const auto pooled = max_pool(maps, 2);
    CHECK(pooled.rows == 12);
    CHECK(pooled.cols == 12);
    CHECK(pooled.units() == 4608);
    for (std::size_t k = 0; k < 32; ++k) {
        for (std::size_t r = 0; r < 12; ++r) {
            for (std::size_t c = 0; c < 12; ++c) {
                const std::size_t cell = (k * 12 + r) * 12 + c;
                const std::uint32_t w = pooled.winners[cell];
                REQUIRE(w < 4);
                const std::size_t src = maps.unit(k, 2 * r + w / 2, 2 * c + w % 2);
                int best = 0;
                for (std::size_t b = 0; b < 4; ++b)
                    best = std::max(best, maps.spikes.count(maps.unit(k, 2 * r + b / 2, 2 * c + b % 2)));
                REQUIRE(maps.spikes.count(src) == best);
                for (int t = 0; t < 20; ++t) REQUIRE(pooled.spikes.spiked(cell, t) == maps.spikes.spiked(src, t));
            }
        }
    }
    CHECK_THROWS_AS(max_pool(maps, 5), GeometryError);
}

} // TEST_SUITE

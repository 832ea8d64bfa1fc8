#include "scnn/error.hpp"
#include "scnn/sailnet.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace scnn;

namespace {

SailnetConfig small_config(std::size_t d) {
    SailnetConfig c;
    c.filters = d;
    c.patch_size = 5;
    return c;
}

// Straightforward re-statement of the dynamics, one step at a time.
std::vector<int> reference_present(const std::vector<double>& x, const SailnetState& s, int steps,
                                   double tau) {
    std::vector<double> u(s.units, 0.0);
    std::vector<int> z_prev(s.units, 0), counts(s.units, 0);
    for (int t = 0; t < steps; ++t) {
        std::vector<int> z(s.units, 0);
        for (std::size_t i = 0; i < s.units; ++i) {
            double current = 0.0;
            for (std::size_t k = 0; k < s.inputs; ++k) current += s.ex(i, k) * x[k];
            for (std::size_t m = 0; m < s.units; ++m) {
                if (m != i) current -= s.inh(i, m) * z_prev[m];
            }
            u[i] = std::exp(-1.0 / tau) * u[i] + current;
            if (u[i] >= s.thresholds[i]) {
                z[i] = 1;
                u[i] = 0.0;
                ++counts[i];
            }
        }
        z_prev = z;
    }
    return counts;
}

SailnetState random_state(std::size_t d, Rng& rng) {
    auto s = SailnetState::initial(small_config(d), rng);
    for (std::size_t i = 0; i < d; ++i) {
        s.thresholds[i] = uniform(rng, 0.5, 3.0);
        for (std::size_t m = 0; m < d; ++m) {
            if (m != i) s.inh(i, m) = uniform(rng, 0.0, 2.0);
        }
    }
    for (double& w : s.w_ex) w = uniform(rng, -1.0, 1.0);
    return s;
}

std::vector<double> random_patch(Rng& rng) {
    std::vector<double> x(25);
    for (double& v : x) v = standard_normal(rng);
    standardize_patch(x);
    return x;
}

PatchSource mnist_patches(std::size_t images) {
    const auto train = load_idx(std::string(SCNN_MNIST_DIR) + "/train-images-idx3-ubyte.gz",
                                std::string(SCNN_MNIST_DIR) + "/train-labels-idx1-ubyte.gz");
    const auto head = train.head(images);
    return PatchSource::from_images(head.images, 5, 1);
}

} // namespace

TEST_SUITE("sailnet") {

TEST_CASE("initial state follows the stated initialization") {
    Rng rng(1);
    const auto s = SailnetState::initial(small_config(16), rng);
    CHECK(s.w_ex.size() == 16 * 25);
    for (double w : s.w_ex) {
        CHECK(w >= 0.0);
        CHECK(w < 1.0);
    }
    for (double w : s.w_inh) CHECK(w == 0.0);
    for (double th : s.thresholds) CHECK(th == 5.0);
}

TEST_CASE("an all-zero patch produces no spikes") {
    Rng rng(2);
    const auto s = SailnetState::initial(small_config(16), rng);
    const auto counts = sailnet_present(std::vector<double>(25, 0.0), s, 20);
    for (int n : counts) CHECK(n == 0);
}

TEST_CASE("a single unit driven above threshold spikes every step") {
    Rng rng(3);
    auto s = SailnetState::initial(small_config(1), rng);
    std::fill(s.w_ex.begin(), s.w_ex.end(), 0.1);
    s.thresholds[0] = 1.0;
    // drive = 25 * 0.1 * 0.5 = 1.25 >= 1
    const auto counts = sailnet_present(std::vector<double>(25, 0.5), s, 20);
    CHECK(counts == std::vector<int>{20});
}

TEST_CASE("presentation matches a naive simulation with previous-step inhibition") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + uniform_index(rng, 12);
        const auto s = random_state(d, rng);
        const auto x = random_patch(rng);
        const double tau = uniform(rng, 0.5, 4.0);
        REQUIRE(sailnet_present(x, s, 20, tau) == reference_present(x, s, 20, tau));
    }
}

TEST_CASE("update applies the three rules entrywise") {
    Rng rng(5);
    auto s = random_state(4, rng);
    const auto x = random_patch(rng);
    auto cfg = small_config(4);
    cfg.rho = 0.5;
    const auto before = s;
    const std::vector<int> counts{1, 0, 2, 1};
    sailnet_update(s, x, counts, cfg);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(s.thresholds[i] == doctest::Approx(before.thresholds[i] + cfg.gamma * (counts[i] - cfg.rho)));
        for (std::size_t m = 0; m < 4; ++m) {
            const double expect = i == m ? 0.0
                : std::max(0.0, before.inh(i, m) + cfg.alpha * (counts[i] * counts[m] - cfg.rho * cfg.rho));
            CHECK(s.inh(i, m) == doctest::Approx(expect).epsilon(1e-14));
        }
        for (std::size_t k = 0; k < 25; ++k) {
            const double expect = before.ex(i, k) + cfg.beta * counts[i] * (x[k] - counts[i] * before.ex(i, k));
            CHECK(s.ex(i, k) == doctest::Approx(expect).epsilon(1e-14));
        }
    }
}

TEST_CASE("fixed point of the inhibitory and threshold rules at n = rho") {
    // Counts are integers, so n = rho is reached with one spike per unit and rho
    // just below 1.
    Rng rng(6);
    auto s = random_state(5, rng);
    auto cfg = small_config(5);
    cfg.rho = 1.0 - 1e-16;  // validate() requires rho < 1; the rule itself is what is tested
    const auto before = s;
    const std::vector<int> counts(5, 1);
    sailnet_update(s, random_patch(rng), counts, cfg);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(s.thresholds[i] == doctest::Approx(before.thresholds[i]).epsilon(1e-14));
        for (std::size_t m = 0; m < 5; ++m) {
            CHECK(s.inh(i, m) == doctest::Approx(before.inh(i, m)).epsilon(1e-14));
        }
    }
}

TEST_CASE("silent units keep their excitatory row") {
    Rng rng(7);
    auto s = random_state(3, rng);
    const auto before = s;
    sailnet_update(s, random_patch(rng), std::vector<int>{0, 2, 0}, small_config(3));
    for (std::size_t k = 0; k < 25; ++k) {
        CHECK(s.ex(0, k) == before.ex(0, k));
        CHECK(s.ex(2, k) == before.ex(2, k));
    }
}

TEST_CASE("Hebbian equilibrium x = n w gives no change") {
    SailnetState s;
    s.units = 1;
    s.inputs = 1;
    s.w_ex = {0.5};
    s.w_inh = {0.0};
    s.thresholds = {1.0};
    SailnetConfig cfg;
    cfg.filters = 1;
    cfg.patch_size = 1;
    cfg.beta = 0.0001;
    sailnet_update(s, std::vector<double>{0.5}, std::vector<int>{1}, cfg);
    CHECK(s.w_ex[0] == 0.5);
}

TEST_CASE("inhibitory change is linear in alpha") {
    Rng rng(8);
    const auto base = random_state(6, rng);
    const auto x = random_patch(rng);
    const std::vector<int> counts{3, 1, 0, 2, 1, 4};
    auto cfg = small_config(6);
    auto a = base, b = base;
    // Raise the starting weights so that no entry is clamped.
    for (auto* st : {&a, &b}) {
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t m = 0; m < 6; ++m)
                if (i != m) st->inh(i, m) += 10.0;
    }
    const auto start = a;
    sailnet_update(a, x, counts, cfg);
    cfg.alpha *= 2.0;
    sailnet_update(b, x, counts, cfg);
    for (std::size_t k = 0; k < a.w_inh.size(); ++k) {
        const double da = a.w_inh[k] - start.w_inh[k];
        const double db = b.w_inh[k] - start.w_inh[k];
        CHECK(db == doctest::Approx(2.0 * da).epsilon(1e-9));
    }
}

TEST_CASE("inhibition stays non-negative with a zero diagonal") {
    Rng rng(9);
    auto s = SailnetState::initial(small_config(8), rng);
    const auto cfg = small_config(8);
    for (int n = 0; n < 2000; ++n) {
        const auto x = random_patch(rng);
        const auto counts = sailnet_present(x, s, 20);
        sailnet_update(s, x, counts, cfg);
        for (std::size_t i = 0; i < 8; ++i) {
            REQUIRE(s.inh(i, i) == 0.0);
            for (std::size_t m = 0; m < 8; ++m) REQUIRE(s.inh(i, m) >= 0.0);
            REQUIRE(std::isfinite(s.thresholds[i]));
        }
    }
}

TEST_CASE("patch standardization") {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    standardize_patch(x);
    CHECK(std::abs(testing::mean_of(x)) < 1e-12);
    CHECK(testing::population_std(x) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> flat(25, 0.3);
    standardize_patch(flat);
    for (double v : flat) CHECK(v == 0.0);
}

TEST_CASE("patch source enumerates every window of every image") {
    Rng rng(10);
    std::vector<IntensityImage> images;
    for (int i = 0; i < 3; ++i) images.push_back(testing::random_image(9, 7, rng));
    const auto source = PatchSource::from_images(images, 5, 1);
    REQUIRE(source.size() == 3 * 5 * 3);
    std::vector<double> out(25);
    source.copy(3 * 5 * 3 - 1, out);
    auto expect = extract_patches(normalize_zero_mean_unit_std(images[2]), 5, 1).back().values;
    standardize_patch(expect);
    for (std::size_t k = 0; k < 25; ++k) CHECK(out[k] == doctest::Approx(expect[k]).epsilon(1e-12));
}

TEST_CASE("training contract errors") {
    Rng rng(11);
    const auto source = mnist_patches(2);
    CHECK_THROWS_AS(train_filters(source, small_config(4), 0, rng), InvalidParameter);
    const PatchSource empty(std::vector<Grid<double>>{}, 5, 1);
    CHECK_THROWS_AS(train_filters(empty, small_config(4), 1, rng), InvalidParameter);
}

TEST_CASE("training is deterministic under a seed") {
    const auto source = mnist_patches(3);
    Rng a(12), b(12);
    const auto ta = train_filters(source, small_config(8), 2, a);
    const auto tb = train_filters(source, small_config(8), 2, b);
    CHECK(ta.bank == tb.bank);
    CHECK(ta.state.w_inh == tb.state.w_inh);
    CHECK(ta.bank.count == 8);
    CHECK(ta.bank.size == 5);
    CHECK(ta.diagnostics.size() == 2);
}

TEST_CASE("homeostasis pulls the spike count toward its target") {
    // Thresholds start at 5, far above the drive of a standardized patch, so
    // early presentations are nearly silent and the rules must raise activity.
    const auto source = mnist_patches(30);
    auto cfg = small_config(16);
    Rng rng(13);
    const auto t = train_filters(source, cfg, 4, rng);
    const double target = static_cast<double>(cfg.filters) * cfg.rho;
    const double first = std::abs(t.diagnostics.front().mean_spikes_per_patch - target);
    const double last = std::abs(t.diagnostics.back().mean_spikes_per_patch - target);
    CHECK(last < first);
    CHECK(last < 0.1 * target);
}

} // TEST_SUITE

#pragma once

#include "scnn/convnet.hpp"
#include "scnn/rng.hpp"
#include "scnn/spike.hpp"

#include <climits>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace scnn {

enum class NeuronModel { probabilistic, plain_lif };
enum class StdpRule { probabilistic, sigmoidal };

std::string_view to_string(NeuronModel model);
std::string_view to_string(StdpRule rule);
NeuronModel parse_neuron_model(std::string_view text);
StdpRule parse_stdp_rule(std::string_view text);

struct DiscoveryParams {
    std::size_t hidden = 128;  // H
    NeuronModel neuron_model = NeuronModel::probabilistic;
    StdpRule stdp_rule = StdpRule::probabilistic;
    double theta_h = 0.5;  // membrane threshold
    double theta_p = 0.5;  // softmax threshold
    double a_plus = 0.001;
    double a_minus = 0.00075;
    int ltp_window = 5;  // steps, current step included
    double tau = 1.0;
    // Fire with probability p_h instead of comparing p_h against theta_p.
    bool stochastic_gate = false;

    void validate() const;
    bool operator==(const DiscoveryParams&) const = default;
};

// Fully connected H x N weights in [0, 1].
struct DiscoveryLayer {
    DiscoveryParams params;
    std::size_t inputs = 0;
    std::vector<float> weights;

    static DiscoveryLayer random(const DiscoveryParams& params, std::size_t inputs, Rng& rng);

    std::size_t hidden() const { return params.hidden; }
    std::span<float> row(std::size_t h) { return {weights.data() + h * inputs, inputs}; }
    std::span<const float> row(std::size_t h) const {
        return {weights.data() + h * inputs, inputs};
    }

    bool operator==(const DiscoveryLayer&) const = default;
};

struct DiscoveryState {
    static constexpr int kNever = INT_MIN / 2;

    std::vector<double> potentials;  // U_h
    std::vector<int> last_presyn;    // step of the latest spike per input
    SpikeTensor spikes_out;          // z_h over the presentation

    static DiscoveryState for_layer(const DiscoveryLayer& layer, int steps);
    void reset();
};

struct FeatureVector {
    std::vector<double> values;
};

// H x H Pearson correlations between weight rows. `average` is the mean
// absolute off-diagonal entry.
struct CorrelationReport {
    std::size_t size = 0;
    std::vector<double> matrix;
    double average = 0.0;

    double at(std::size_t a, std::size_t b) const { return matrix[a * size + b]; }
};

std::vector<double> softmax_fire_prob(std::span<const double> potentials);

// Probability that every unit in `subset` fires at once, given all potentials.
double joint_fire_prob(std::span<const double> potentials, std::span<const std::size_t> subset);

// Single-synapse weight change for an LTP (pre spike inside the window) or LTD event.
double stdp_delta(double w, bool ltp, StdpRule rule, double a_plus, double a_minus);

// LTP probability at which the probabilistic rule is in equilibrium at weight w,
// and its inverse w = ln(a+/a-) + ln(P / (1 - P)).
double ltp_probability(double w, double a_plus, double a_minus);
double weight_for_ltp_probability(double probability, double a_plus, double a_minus);

// Updates row h after neuron h fired at `step`; inputs whose latest spike lies
// within the LTP window are potentiated, all others depressed. Result clamped to [0, 1].
void apply_stdp(DiscoveryLayer& layer, std::size_t h, std::span<const int> last_presyn, int step);

// One simulation step with input spike vector y (length N). Returns fired neurons.
std::vector<std::size_t> discovery_step(DiscoveryLayer& layer, DiscoveryState& state,
                                        std::span<const std::uint8_t> y, int step, bool training,
                                        Rng& rng);

// Accumulated net input sum_t W_h . y_t, no leak, reset or threshold.
FeatureVector extract_features(const DiscoveryLayer& layer, const PooledMaps& pooled);

CorrelationReport weight_correlation(const DiscoveryLayer& layer);

// Supplies pooled spike trains for training. `iteration` lets implementations
// re-encode each image with fresh spikes per pass.
class PooledSource {
public:
    virtual ~PooledSource() = default;
    virtual std::size_t size() const = 0;
    virtual PooledMaps get(int iteration, std::size_t index) const = 0;
};

class PooledVector final : public PooledSource {
public:
    explicit PooledVector(std::vector<PooledMaps> items) : items_(std::move(items)) {}
    std::size_t size() const override { return items_.size(); }
    PooledMaps get(int, std::size_t index) const override { return items_[index]; }

private:
    std::vector<PooledMaps> items_;
};

struct DiscoveryIteration {
    int iteration = 0;
    CorrelationReport correlation;
    double fires_per_image = 0.0;
};

using DiscoveryProgress = std::function<void(const DiscoveryIteration&)>;

// Online STDP over the source, `iterations` passes in shuffled order. State is
// cleared between images. Returns one report per iteration.
std::vector<DiscoveryIteration> train_discovery(DiscoveryLayer& layer, const PooledSource& source,
                                                int iterations, Rng& rng,
                                                const DiscoveryProgress& progress = {});

} // namespace scnn

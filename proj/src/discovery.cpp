#include "scnn/discovery.hpp"

#include "scnn/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace scnn {

std::string_view to_string(NeuronModel model) {
    return model == NeuronModel::probabilistic ? "probabilistic" : "plain_lif";
}

std::string_view to_string(StdpRule rule) {
    return rule == StdpRule::probabilistic ? "probabilistic" : "sigmoidal";
}

NeuronModel parse_neuron_model(std::string_view text) {
    if (text == "probabilistic") return NeuronModel::probabilistic;
    if (text == "plain_lif") return NeuronModel::plain_lif;
    throw InvalidParameter("unknown neuron model '" + std::string(text) + "'");
}

StdpRule parse_stdp_rule(std::string_view text) {
    if (text == "probabilistic") return StdpRule::probabilistic;
    if (text == "sigmoidal") return StdpRule::sigmoidal;
    throw InvalidParameter("unknown STDP rule '" + std::string(text) + "'");
}

void DiscoveryParams::validate() const {
    if (hidden == 0) throw InvalidParameter("discovery: H must be >= 1");
    if (!(a_plus >= 0 && a_minus >= 0)) {
        throw InvalidParameter("discovery: learning rates must be >= 0");
    }
    if (ltp_window < 1) throw InvalidParameter("discovery: LTP window must be >= 1 step");
    if (!(tau > 0)) throw InvalidParameter("discovery: tau must be > 0");
    if (!(theta_p >= 0 && theta_p <= 1)) {
        throw InvalidParameter("discovery: softmax threshold must lie in [0, 1]");
    }
}

DiscoveryLayer DiscoveryLayer::random(const DiscoveryParams& params, std::size_t inputs,
                                      Rng& rng) {
    params.validate();
    DiscoveryLayer layer{params, inputs, std::vector<float>(params.hidden * inputs)};
    for (float& w : layer.weights) {
        w = static_cast<float>(uniform01(rng));
    }
    return layer;
}

DiscoveryState DiscoveryState::for_layer(const DiscoveryLayer& layer, int steps) {
    DiscoveryState s;
    s.potentials.assign(layer.hidden(), 0.0);
    s.last_presyn.assign(layer.inputs, kNever);
    s.spikes_out = SpikeTensor(layer.hidden(), steps);
    return s;
}

void DiscoveryState::reset() {
    std::fill(potentials.begin(), potentials.end(), 0.0);
    std::fill(last_presyn.begin(), last_presyn.end(), kNever);
    spikes_out = SpikeTensor(spikes_out.units(), spikes_out.steps());
}

std::vector<double> softmax_fire_prob(std::span<const double> potentials) {
    std::vector<double> p(potentials.size());
    if (potentials.empty()) return p;
    const double m = *std::max_element(potentials.begin(), potentials.end());
    double sum = 0.0;
    for (std::size_t h = 0; h < p.size(); ++h) {
        p[h] = std::exp(potentials[h] - m);
        sum += p[h];
    }
    for (double& v : p) v /= sum;
    return p;
}

double joint_fire_prob(std::span<const double> potentials, std::span<const std::size_t> subset) {
    if (subset.empty()) {
        throw InvalidParameter("joint_fire_prob: subset must not be empty");
    }
    if (subset.size() > potentials.size()) {
        throw InvalidParameter("joint_fire_prob: subset larger than the layer");
    }
    std::vector<bool> seen(potentials.size(), false);
    const double m = *std::max_element(potentials.begin(), potentials.end());
    double numer = 0.0;
    for (std::size_t j : subset) {
        if (j >= potentials.size() || seen[j]) {
            throw InvalidParameter("joint_fire_prob: subset indices must be distinct and in range");
        }
        seen[j] = true;
        numer += potentials[j] - m;
    }
    double denom = 0.0;
    for (double u : potentials) denom += std::exp(u - m);
    return std::exp(numer - static_cast<double>(subset.size()) * std::log(denom));
}

double stdp_delta(double w, bool ltp, StdpRule rule, double a_plus, double a_minus) {
    if (rule == StdpRule::probabilistic) {
        return ltp ? a_plus * std::exp(-w) : -a_minus;
    }
    const double gate = w * (1.0 - w);
    return ltp ? a_plus * gate : -a_minus * gate;
}

double ltp_probability(double w, double a_plus, double a_minus) {
    return 1.0 / (1.0 + std::exp(-(w - std::log(a_plus / a_minus))));
}

double weight_for_ltp_probability(double probability, double a_plus, double a_minus) {
    if (!(probability > 0.0 && probability < 1.0)) {
        throw InvalidParameter("LTP probability must lie in (0, 1)");
    }
    return std::log(a_plus / a_minus) + std::log(probability / (1.0 - probability));
}

namespace {

// e^{-w} for w in [0, 1] by linear interpolation over 4096 intervals. The
// relative error (< 1e-8) is well below the resolution of float weights.
class NegExpTable {
public:
    static constexpr int kIntervals = 4096;

    NegExpTable() {
        for (int k = 0; k <= kIntervals; ++k) {
            values_[k] = std::exp(-static_cast<double>(k) / kIntervals);
        }
    }

    double operator()(double w) const {
        const double x = std::clamp(w, 0.0, 1.0) * kIntervals;
        const int k = std::min(static_cast<int>(x), kIntervals - 1);
        const double f = x - k;
        return values_[k] + f * (values_[k + 1] - values_[k]);
    }

private:
    std::array<double, kIntervals + 1> values_{};
};

const NegExpTable& neg_exp() {
    static const NegExpTable table;
    return table;
}

// LTP values are computed from the pre-update weights, then the depression pass
// runs over the whole row, then the LTP entries are written back.
void update_row(std::span<float> row, std::span<const std::uint32_t> recent,
                const DiscoveryParams& params, std::vector<float>& scratch) {
    scratch.resize(recent.size());
    if (params.stdp_rule == StdpRule::probabilistic) {
        const NegExpTable& table = neg_exp();
        for (std::size_t n = 0; n < recent.size(); ++n) {
            const double w = row[recent[n]];
            scratch[n] = static_cast<float>(std::min(1.0, w + params.a_plus * table(w)));
        }
    } else {
        for (std::size_t n = 0; n < recent.size(); ++n) {
            const double w = row[recent[n]];
            const double next = w + stdp_delta(w, true, params.stdp_rule, params.a_plus,
                                               params.a_minus);
            scratch[n] = static_cast<float>(std::clamp(next, 0.0, 1.0));
        }
    }
    if (params.stdp_rule == StdpRule::probabilistic) {
        const float a_minus = static_cast<float>(params.a_minus);
        for (float& w : row) {
            const float next = w - a_minus;
            w = next > 0.0f ? next : 0.0f;
        }
    } else {
        const float a_minus = static_cast<float>(params.a_minus);
        for (float& w : row) {
            const float next = w - a_minus * w * (1.0f - w);
            w = std::clamp(next, 0.0f, 1.0f);
        }
    }
    for (std::size_t n = 0; n < recent.size(); ++n) {
        row[recent[n]] = scratch[n];
    }
}

void recent_inputs(std::span<const int> last_presyn, int step, int window,
                   std::vector<std::uint32_t>& out) {
    out.clear();
    for (std::size_t i = 0; i < last_presyn.size(); ++i) {
        if (step - last_presyn[i] < window) {
            out.push_back(static_cast<std::uint32_t>(i));
        }
    }
}

} // namespace

void apply_stdp(DiscoveryLayer& layer, std::size_t h, std::span<const int> last_presyn,
                int step) {
    if (last_presyn.size() != layer.inputs) {
        throw DimensionMismatch("apply_stdp: presynaptic record length mismatch");
    }
    std::vector<std::uint32_t> recent;
    std::vector<float> scratch;
    recent_inputs(last_presyn, step, layer.params.ltp_window, recent);
    update_row(layer.row(h), recent, layer.params, scratch);
}

std::vector<std::size_t> discovery_step(DiscoveryLayer& layer, DiscoveryState& state,
                                        std::span<const std::uint8_t> y, int step, bool training,
                                        Rng& rng) {
    const auto& params = layer.params;
    const std::size_t hidden = layer.hidden();
    if (y.size() != layer.inputs || state.potentials.size() != hidden ||
        state.last_presyn.size() != layer.inputs) {
        throw DimensionMismatch("discovery_step: input or state size does not match the layer");
    }

    std::vector<std::uint32_t> active;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i]) {
            active.push_back(static_cast<std::uint32_t>(i));
            state.last_presyn[i] = step;
        }
    }

    const double decay = std::exp(-1.0 / params.tau);
    for (std::size_t h = 0; h < hidden; ++h) {
        const float* w = layer.weights.data() + h * layer.inputs;
        double current = 0.0;
        for (std::uint32_t i : active) {
            current += w[i];
        }
        state.potentials[h] = decay * state.potentials[h] + current;
    }

    std::vector<std::size_t> fired;
    if (params.neuron_model == NeuronModel::plain_lif) {
        for (std::size_t h = 0; h < hidden; ++h) {
            if (state.potentials[h] >= params.theta_h) fired.push_back(h);
        }
    } else {
        const auto prob = softmax_fire_prob(state.potentials);
        for (std::size_t h = 0; h < hidden; ++h) {
            if (state.potentials[h] < params.theta_h) continue;
            const bool gate = params.stochastic_gate ? uniform01(rng) < prob[h]
                                                     : prob[h] > params.theta_p;
            if (gate) fired.push_back(h);
        }
    }

    if (fired.empty()) {
        return fired;
    }
    std::vector<std::uint32_t> recent;
    std::vector<float> scratch;
    if (training) {
        recent_inputs(state.last_presyn, step, params.ltp_window, recent);
    }
    for (std::size_t h : fired) {
        state.potentials[h] = 0.0;
        if (step >= 0 && step < state.spikes_out.steps()) {
            state.spikes_out.set(h, step);
        }
        if (training) {
            update_row(layer.row(h), recent, params, scratch);
        }
    }
    return fired;
}

FeatureVector extract_features(const DiscoveryLayer& layer, const PooledMaps& pooled) {
    if (pooled.units() != layer.inputs) {
        throw DimensionMismatch("extract_features: pooled map size " +
                                std::to_string(pooled.units()) + " does not match layer inputs " +
                                std::to_string(layer.inputs));
    }
    const auto counts = pooled.spikes.counts();
    FeatureVector v{std::vector<double>(layer.hidden(), 0.0)};
    for (std::size_t h = 0; h < layer.hidden(); ++h) {
        const auto w = layer.row(h);
        double sum = 0.0;
        for (std::size_t i = 0; i < layer.inputs; ++i) {
            if (counts[i]) sum += static_cast<double>(w[i]) * counts[i];
        }
        v.values[h] = sum;
    }
    return v;
}

CorrelationReport weight_correlation(const DiscoveryLayer& layer) {
    const std::size_t hn = layer.hidden();
    const std::size_t n = layer.inputs;
    if (hn < 2) {
        throw InvalidParameter("weight_correlation: needs at least two neurons");
    }
    std::vector<double> centered(hn * n);
    std::vector<double> norm(hn);
    for (std::size_t h = 0; h < hn; ++h) {
        const auto w = layer.row(h);
        const double mean =
            std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = w[i] - mean;
            centered[h * n + i] = c;
            ss += c * c;
        }
        norm[h] = std::sqrt(ss);
    }

    CorrelationReport report{hn, std::vector<double>(hn * hn, 0.0), 0.0};
    double total = 0.0;
    for (std::size_t a = 0; a < hn; ++a) {
        report.matrix[a * hn + a] = 1.0;
        for (std::size_t b = a + 1; b < hn; ++b) {
            double r = 0.0;
            if (norm[a] > 0.0 && norm[b] > 0.0) {
                double dot = 0.0;
                const double* x = &centered[a * n];
                const double* y = &centered[b * n];
                for (std::size_t i = 0; i < n; ++i) dot += x[i] * y[i];
                r = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
            }
            report.matrix[a * hn + b] = r;
            report.matrix[b * hn + a] = r;
            total += 2.0 * std::abs(r);
        }
    }
    report.average = total / static_cast<double>(hn * (hn - 1));
    return report;
}

std::vector<DiscoveryIteration> train_discovery(DiscoveryLayer& layer, const PooledSource& source,
                                                int iterations, Rng& rng,
                                                const DiscoveryProgress& progress) {
    if (source.size() == 0) {
        throw InvalidParameter("train_discovery: empty spike stream");
    }
    if (iterations < 1) {
        throw InvalidParameter("train_discovery: iterations must be >= 1");
    }
    layer.params.validate();

    std::vector<std::size_t> order(source.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<DiscoveryIteration> history;

    for (int it = 1; it <= iterations; ++it) {
        shuffle(std::span(order), rng);
        std::uint64_t fires = 0;
        for (std::size_t index : order) {
            const PooledMaps pooled = source.get(it, index);
            if (pooled.units() != layer.inputs) {
                throw DimensionMismatch("train_discovery: pooled maps do not match layer inputs");
            }
            auto state = DiscoveryState::for_layer(layer, pooled.steps());
            for (int t = 0; t < pooled.steps(); ++t) {
                fires += discovery_step(layer, state, pooled.spikes.step(t), t, true, rng).size();
            }
        }
        DiscoveryIteration record{it, weight_correlation(layer),
                                  static_cast<double>(fires) / static_cast<double>(order.size())};
        if (progress) progress(record);
        history.push_back(std::move(record));
    }
    return history;
}

} // namespace scnn

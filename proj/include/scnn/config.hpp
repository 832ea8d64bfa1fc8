#pragma once

#include "scnn/classifier.hpp"
#include "scnn/convnet.hpp"
#include "scnn/discovery.hpp"
#include "scnn/error.hpp"
#include "scnn/sailnet.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace scnn {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct NoiseSpec {
    enum class Kind { none, gaussian, salt_pepper };
    Kind kind = Kind::none;
    double level = 0.0;  // variance for gaussian, density for salt-and-pepper

    bool operator==(const NoiseSpec&) const = default;
};

// "none", "gauss:0.04", "sp:0.25".
NoiseSpec parse_noise(std::string_view text);
std::string to_string(const NoiseSpec& noise);
// Comma-separated list of the above.
std::vector<NoiseSpec> parse_noise_list(std::string_view text);

// Every tunable of a run. Keys in the config file match the member names.
struct RunConfig {
    // Network geometry and dynamics.
    std::int64_t D = 32;
    std::int64_t T = 20;
    std::int64_t p = 5;
    std::int64_t r = 28;
    std::int64_t c = 28;
    double alpha = 0.01;
    double beta = 0.0001;
    double gamma = 0.02;
    double rho = 0.05;
    std::int64_t l_c = 1;
    std::int64_t l_p = 2;
    double theta_conv = 1.0;
    std::int64_t H = 128;
    double a_plus = 0.001;
    double a_minus = 0.00075;
    double theta_h = 0.5;
    double theta_p = 0.5;
    double tau = 1.0;
    std::int64_t epsilon = 5;  // LTP window in steps
    NeuronModel neuron_model = NeuronModel::probabilistic;
    StdpRule stdp_rule = StdpRule::probabilistic;
    bool stochastic_gate = false;

    // Run control.
    std::uint64_t seed = 1;
    std::string train_images = "data/mnist-subset/train-images-idx3-ubyte.gz";
    std::string train_labels = "data/mnist-subset/train-labels-idx1-ubyte.gz";
    std::string test_images = "data/mnist-subset/test-images-idx3-ubyte.gz";
    std::string test_labels = "data/mnist-subset/test-labels-idx1-ubyte.gz";
    std::int64_t filter_samples = 3000;
    std::int64_t filter_iterations = 10;
    std::int64_t discovery_samples = 3000;
    std::int64_t discovery_iterations = 10;
    std::int64_t classifier_samples = 3000;
    std::int64_t test_samples = 1000;
    bool full_scale = false;  // use every image in both files, ignoring the sample counts
    FeatureMode feature_mode = FeatureMode::poly2;
    double svm_lambda = 1e-3;
    std::int64_t svm_epochs = 300;
    std::int64_t cv_folds = 5;  // 0 disables cross-validation
    std::string noise = "none";
    std::int64_t workers = 1;

    // Throws ConfigError naming the offending key.
    void validate() const;

    SailnetConfig sailnet() const;
    ConvParams conv() const;
    DiscoveryParams discovery() const;
    SvmConfig svm() const;

    std::size_t map_rows() const;
    std::size_t map_cols() const;
    std::size_t pooled_units() const;  // D * pooled rows * pooled cols

    bool operator==(const RunConfig&) const = default;
};

// Flat "key = value" text, '#' starts a comment. Unknown or repeated keys are errors.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
// Applies one "key=value" override on top of an existing config.
void apply_override(RunConfig& config, std::string_view assignment);
// Canonical form: every key, fixed order, shortest round-trip numbers.
std::string serialize_config(const RunConfig& config);
std::vector<std::string_view> config_keys();

} // namespace scnn

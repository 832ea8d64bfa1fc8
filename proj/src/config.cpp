#include "scnn/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

namespace scnn {

namespace {

using Member = std::variant<std::int64_t RunConfig::*, std::uint64_t RunConfig::*,
                            double RunConfig::*, bool RunConfig::*, std::string RunConfig::*,
                            NeuronModel RunConfig::*, StdpRule RunConfig::*,
                            FeatureMode RunConfig::*>;

struct Field {
    std::string_view key;
    Member member;
};

const std::array kFields = {
    Field{"D", &RunConfig::D},
    Field{"T", &RunConfig::T},
    Field{"p", &RunConfig::p},
    Field{"r", &RunConfig::r},
    Field{"c", &RunConfig::c},
    Field{"alpha", &RunConfig::alpha},
    Field{"beta", &RunConfig::beta},
    Field{"gamma", &RunConfig::gamma},
    Field{"rho", &RunConfig::rho},
    Field{"l_c", &RunConfig::l_c},
    Field{"l_p", &RunConfig::l_p},
    Field{"theta_conv", &RunConfig::theta_conv},
    Field{"H", &RunConfig::H},
    Field{"a_plus", &RunConfig::a_plus},
    Field{"a_minus", &RunConfig::a_minus},
    Field{"theta_h", &RunConfig::theta_h},
    Field{"theta_p", &RunConfig::theta_p},
    Field{"tau", &RunConfig::tau},
    Field{"epsilon", &RunConfig::epsilon},
    Field{"neuron_model", &RunConfig::neuron_model},
    Field{"stdp_rule", &RunConfig::stdp_rule},
    Field{"stochastic_gate", &RunConfig::stochastic_gate},
    Field{"seed", &RunConfig::seed},
    Field{"train_images", &RunConfig::train_images},
    Field{"train_labels", &RunConfig::train_labels},
    Field{"test_images", &RunConfig::test_images},
    Field{"test_labels", &RunConfig::test_labels},
    Field{"filter_samples", &RunConfig::filter_samples},
    Field{"filter_iterations", &RunConfig::filter_iterations},
    Field{"discovery_samples", &RunConfig::discovery_samples},
    Field{"discovery_iterations", &RunConfig::discovery_iterations},
    Field{"classifier_samples", &RunConfig::classifier_samples},
    Field{"test_samples", &RunConfig::test_samples},
    Field{"full_scale", &RunConfig::full_scale},
    Field{"feature_mode", &RunConfig::feature_mode},
    Field{"svm_lambda", &RunConfig::svm_lambda},
    Field{"svm_epochs", &RunConfig::svm_epochs},
    Field{"cv_folds", &RunConfig::cv_folds},
    Field{"noise", &RunConfig::noise},
    Field{"workers", &RunConfig::workers},
};

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" +
                          std::string(text) + "'");
    }
    return value;
}

template <class T>
std::string format_number(T value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

void assign(RunConfig& config, const Field& field, std::string_view text) {
    const auto key = field.key;
    try {
        std::visit(
            [&](auto member) {
                using T = std::remove_cvref_t<decltype(config.*member)>;
                if constexpr (std::is_same_v<T, std::string>) {
                    config.*member = std::string(text);
                } else if constexpr (std::is_same_v<T, bool>) {
                    if (text == "true" || text == "1") config.*member = true;
                    else if (text == "false" || text == "0") config.*member = false;
                    else throw ConfigError("config key '" + std::string(key) + "': expected true/false");
                } else if constexpr (std::is_same_v<T, NeuronModel>) {
                    config.*member = parse_neuron_model(text);
                } else if constexpr (std::is_same_v<T, StdpRule>) {
                    config.*member = parse_stdp_rule(text);
                } else if constexpr (std::is_same_v<T, FeatureMode>) {
                    config.*member = parse_feature_mode(text);
                } else {
                    config.*member = parse_number<T>(key, text);
                }
            },
            field.member);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("config key '" + std::string(key) + "': " + e.what());
    }
}

std::string format(const RunConfig& config, const Field& field) {
    return std::visit(
        [&](auto member) -> std::string {
            using T = std::remove_cvref_t<decltype(config.*member)>;
            const auto& v = config.*member;
            if constexpr (std::is_same_v<T, std::string>) return v;
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else if constexpr (std::is_enum_v<T>) return std::string(to_string(v));
            else return format_number(v);
        },
        field.member);
}

const Field& find_field(std::string_view key) {
    for (const auto& f : kFields) {
        if (f.key == key) return f;
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void require(bool ok, std::string_view key, std::string_view what) {
    if (!ok) throw ConfigError("config key '" + std::string(key) + "': " + std::string(what));
}

} // namespace

NoiseSpec parse_noise(std::string_view text) {
    text = trim(text);
    if (text == "none" || text.empty()) return {};
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw ConfigError("noise spec '" + std::string(text) + "': expected kind:level");
    }
    const auto kind = text.substr(0, colon);
    NoiseSpec spec;
    spec.level = parse_number<double>("noise", trim(text.substr(colon + 1)));
    if (kind == "gauss") {
        spec.kind = NoiseSpec::Kind::gaussian;
        require(spec.level >= 0, "noise", "gaussian variance must be >= 0");
    } else if (kind == "sp") {
        spec.kind = NoiseSpec::Kind::salt_pepper;
        require(spec.level >= 0 && spec.level <= 1, "noise", "salt-and-pepper density must lie in [0, 1]");
    } else {
        throw ConfigError("noise spec: unknown kind '" + std::string(kind) + "'");
    }
    return spec;
}

std::string to_string(const NoiseSpec& noise) {
    switch (noise.kind) {
    case NoiseSpec::Kind::gaussian: return "gauss:" + format_number(noise.level);
    case NoiseSpec::Kind::salt_pepper: return "sp:" + format_number(noise.level);
    default: return "none";
    }
}

std::vector<NoiseSpec> parse_noise_list(std::string_view text) {
    std::vector<NoiseSpec> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                              : comma - start);
        out.push_back(parse_noise(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::size_t RunConfig::map_rows() const {
    return patch_positions(static_cast<std::size_t>(r), static_cast<std::size_t>(p),
                           static_cast<std::size_t>(l_c));
}

std::size_t RunConfig::map_cols() const {
    return patch_positions(static_cast<std::size_t>(c), static_cast<std::size_t>(p),
                           static_cast<std::size_t>(l_c));
}

std::size_t RunConfig::pooled_units() const {
    return static_cast<std::size_t>(D) * (map_rows() / static_cast<std::size_t>(l_p)) *
           (map_cols() / static_cast<std::size_t>(l_p));
}

void RunConfig::validate() const {
    require(D == 16 || D == 32 || D == 64, "D", "must be 16, 32 or 64");
    require(T >= 1, "T", "must be >= 1");
    require(p >= 1, "p", "must be >= 1");
    require(r >= p, "r", "must be >= p");
    require(c >= p, "c", "must be >= p");
    require(alpha > 0, "alpha", "must be > 0");
    require(beta > 0, "beta", "must be > 0");
    require(gamma > 0, "gamma", "must be > 0");
    require(rho > 0 && rho < 1, "rho", "must lie in (0, 1)");
    require(l_c >= 1, "l_c", "must be >= 1");
    require(l_p >= 1, "l_p", "must be >= 1");
    require(map_rows() % static_cast<std::size_t>(l_p) == 0 &&
                map_cols() % static_cast<std::size_t>(l_p) == 0,
            "l_p", "must divide the feature map size");
    require(theta_conv > 0, "theta_conv", "must be > 0");
    require(H >= 8 && H <= 512 && (H & (H - 1)) == 0, "H", "must be a power of two in [8, 512]");
    require(a_plus >= 0, "a_plus", "must be >= 0");
    require(a_minus >= 0, "a_minus", "must be >= 0");
    require(theta_h > 0, "theta_h", "must be > 0");
    require(theta_p >= 0 && theta_p <= 1, "theta_p", "must lie in [0, 1]");
    require(tau > 0, "tau", "must be > 0");
    require(epsilon >= 1, "epsilon", "must be >= 1");
    require(filter_samples >= 1, "filter_samples", "must be >= 1");
    require(filter_iterations >= 1, "filter_iterations", "must be >= 1");
    require(discovery_samples >= 1, "discovery_samples", "must be >= 1");
    require(discovery_iterations >= 1, "discovery_iterations", "must be >= 1");
    require(classifier_samples >= 1, "classifier_samples", "must be >= 1");
    require(test_samples >= 1, "test_samples", "must be >= 1");
    require(svm_lambda > 0, "svm_lambda", "must be > 0");
    require(svm_epochs >= 1, "svm_epochs", "must be >= 1");
    require(cv_folds == 0 || cv_folds >= 2, "cv_folds", "must be 0 or >= 2");
    require(workers >= 1, "workers", "must be >= 1");
    parse_noise_list(noise);
}

SailnetConfig RunConfig::sailnet() const {
    SailnetConfig s;
    s.filters = static_cast<std::size_t>(D);
    s.patch_size = static_cast<std::size_t>(p);
    s.stride = 1;
    s.alpha = alpha;
    s.beta = beta;
    s.gamma = gamma;
    s.rho = rho;
    s.steps = static_cast<int>(T);
    s.tau = tau;
    return s;
}

ConvParams RunConfig::conv() const {
    return {static_cast<std::size_t>(l_c), theta_conv, tau};
}

DiscoveryParams RunConfig::discovery() const {
    DiscoveryParams d;
    d.hidden = static_cast<std::size_t>(H);
    d.neuron_model = neuron_model;
    d.stdp_rule = stdp_rule;
    d.theta_h = theta_h;
    d.theta_p = theta_p;
    d.a_plus = a_plus;
    d.a_minus = a_minus;
    d.ltp_window = static_cast<int>(epsilon);
    d.tau = tau;
    d.stochastic_gate = stochastic_gate;
    return d;
}

SvmConfig RunConfig::svm() const {
    return {feature_mode, svm_lambda, static_cast<int>(svm_epochs)};
}

RunConfig parse_config(std::string_view text) {
    RunConfig config;
    std::set<std::string_view> seen;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto& field = find_field(key);
        if (!seen.insert(field.key).second) {
            throw ConfigError("config key '" + std::string(key) + "' given twice");
        }
        assign(config, field, trim(line.substr(eq + 1)));
    }
    config.validate();
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_override(RunConfig& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
    }
    assign(config, find_field(trim(assignment.substr(0, eq))), trim(assignment.substr(eq + 1)));
}

std::string serialize_config(const RunConfig& config) {
    std::string out;
    for (const auto& field : kFields) {
        out += field.key;
        out += " = ";
        out += format(config, field);
        out += '\n';
    }
    return out;
}

std::vector<std::string_view> config_keys() {
    std::vector<std::string_view> keys;
    for (const auto& f : kFields) keys.push_back(f.key);
    return keys;
}

} // namespace scnn

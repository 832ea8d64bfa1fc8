#include "scnn/archive.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace scnn {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'C', 'N', 'N'};

constexpr std::uint32_t kStageFilters = 1;
constexpr std::uint32_t kStageDiscovery = 2;
constexpr std::uint32_t kStageClassifier = 4;

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f32s(std::span<const float> vs) {
        for (float v : vs) f32(v);
    }
    void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::string section)
        : bytes_(bytes), section_(std::move(section)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::vector<float> f32s(std::size_t n) {
        need(4 * n);
        std::vector<float> out(n);
        for (auto& v : out) v = f32();
        return out;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    void expect_done() const {
        if (!done()) {
            throw ArchiveError(ArchiveError::Kind::malformed, section_, "trailing bytes in payload");
        }
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw ArchiveError(ArchiveError::Kind::truncated, section_, "unexpected end of data");
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::string section_;
};

void put_section(Writer& out, std::string_view tag, const std::vector<std::uint8_t>& payload) {
    out.raw(tag);
    out.u32(static_cast<std::uint32_t>(payload.size()));
    out.u32(static_cast<std::uint32_t>(crc32(0L, payload.data(), static_cast<uInt>(payload.size()))));
    out.bytes().insert(out.bytes().end(), payload.begin(), payload.end());
}

} // namespace

std::string_view to_string(Stage stage) {
    switch (stage) {
    case Stage::filters: return "filters";
    case Stage::discovery: return "discovery";
    default: return "classifier";
    }
}

bool ModelArchive::has(Stage stage) const {
    switch (stage) {
    case Stage::filters: return filters_.has_value();
    case Stage::discovery: return discovery_.has_value();
    default: return classifier_.has_value();
    }
}

void ModelArchive::require(Stage stage) const {
    for (Stage s : {Stage::filters, Stage::discovery, Stage::classifier}) {
        if (!has(s)) {
            throw StageError("stage '" + std::string(to_string(s)) + "' has not been trained");
        }
        if (s == stage) return;
    }
}

const FilterBank& ModelArchive::filters() const {
    require(Stage::filters);
    return *filters_;
}

const DiscoveryLayer& ModelArchive::discovery() const {
    require(Stage::discovery);
    return *discovery_;
}

const SvmModel& ModelArchive::classifier() const {
    require(Stage::classifier);
    return *classifier_;
}

void ModelArchive::set_filters(FilterBank bank) {
    if (discovery_ || classifier_) {
        throw StageError("filters are frozen once later stages exist");
    }
    if (bank.count != static_cast<std::size_t>(config_.D) ||
        bank.size != static_cast<std::size_t>(config_.p)) {
        throw DimensionMismatch("filter bank shape does not match the run config");
    }
    filters_ = std::move(bank);
}

void ModelArchive::set_discovery(DiscoveryLayer layer) {
    require(Stage::filters);
    if (classifier_) {
        throw StageError("discovery layer is frozen once the classifier exists");
    }
    if (layer.hidden() != static_cast<std::size_t>(config_.H) ||
        layer.inputs != config_.pooled_units()) {
        throw DimensionMismatch("discovery layer shape does not match the run config");
    }
    discovery_ = std::move(layer);
}

void ModelArchive::set_classifier(SvmModel model) {
    require(Stage::discovery);
    if (model.input_dim != static_cast<std::size_t>(config_.H)) {
        throw DimensionMismatch("classifier input size does not match H");
    }
    classifier_ = std::move(model);
}

std::vector<std::uint8_t> ModelArchive::serialize() const {
    Writer out;
    out.raw({kMagic.data(), kMagic.size()});
    out.u32(kFormatVersion);

    {
        Writer s;
        s.raw(serialize_config(config_));
        put_section(out, "CONF", s.bytes());
    }
    {
        Writer s;
        s.u32((filters_ ? kStageFilters : 0) | (discovery_ ? kStageDiscovery : 0) |
              (classifier_ ? kStageClassifier : 0));
        put_section(out, "STAG", s.bytes());
    }
    if (filters_) {
        Writer s;
        s.u32(static_cast<std::uint32_t>(filters_->count));
        s.u32(static_cast<std::uint32_t>(filters_->size));
        s.u32(static_cast<std::uint32_t>(filters_->size));
        s.f32s(filters_->weights);
        put_section(out, "FILT", s.bytes());
    }
    if (discovery_) {
        Writer s;
        s.u32(static_cast<std::uint32_t>(discovery_->hidden()));
        s.u32(static_cast<std::uint32_t>(discovery_->inputs));
        s.f32s(discovery_->weights);
        put_section(out, "DISC", s.bytes());
    }
    if (classifier_) {
        Writer s;
        s.u32(classifier_->mode == FeatureMode::linear ? 0 : 1);
        s.u32(static_cast<std::uint32_t>(kClasses));
        s.u32(static_cast<std::uint32_t>(classifier_->input_dim));
        s.u32(static_cast<std::uint32_t>(classifier_->dim));
        s.f32s(classifier_->mean);
        s.f32s(classifier_->inv_std);
        s.f32s(classifier_->weights);
        put_section(out, "SVMW", s.bytes());
    }
    return std::move(out.bytes());
}

ModelArchive ModelArchive::deserialize(const std::vector<std::uint8_t>& bytes) {
    Reader in(bytes, "header");
    const auto magic = in.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
        throw ArchiveError(ArchiveError::Kind::bad_magic, "header", "not a model archive");
    }
    const std::uint32_t version = in.u32();
    if (version != kFormatVersion) {
        throw ArchiveError(ArchiveError::Kind::version, "header",
                           "format version " + std::to_string(version) +
                               " is not supported (expected " + std::to_string(kFormatVersion) +
                               ")");
    }

    ModelArchive archive;
    bool have_config = false;
    std::optional<std::uint32_t> stage_flags;
    while (!in.done()) {
        const auto tag_bytes = in.take(4);
        const std::string tag(tag_bytes.begin(), tag_bytes.end());
        Reader header_reader(in.take(8), tag);
        const std::uint32_t length = header_reader.u32();
        const std::uint32_t crc = header_reader.u32();
        if (in.remaining() < length) {
            throw ArchiveError(ArchiveError::Kind::truncated, tag, "payload cut short");
        }
        const auto payload = in.take(length);
        if (crc32(0L, payload.data(), static_cast<uInt>(payload.size())) != crc) {
            throw ArchiveError(ArchiveError::Kind::checksum, tag, "CRC32 mismatch");
        }
        Reader s(payload, tag);

        if (tag != "CONF" && !have_config) {
            throw ArchiveError(ArchiveError::Kind::malformed, tag, "appears before CONF");
        }
        try {
            if (tag == "CONF") {
                archive.config_ = parse_config(std::string_view(
                    reinterpret_cast<const char*>(payload.data()), payload.size()));
                have_config = true;
            } else if (tag == "STAG") {
                stage_flags = s.u32();
                s.expect_done();
            } else if (tag == "FILT") {
                FilterBank bank;
                bank.count = s.u32();
                bank.size = s.u32();
                if (s.u32() != bank.size) {
                    throw ArchiveError(ArchiveError::Kind::malformed, tag, "filters must be square");
                }
                bank.weights = s.f32s(bank.count * bank.size * bank.size);
                s.expect_done();
                archive.set_filters(std::move(bank));
            } else if (tag == "DISC") {
                DiscoveryLayer layer;
                layer.params = archive.config_.discovery();
                const std::size_t hidden = s.u32();
                layer.inputs = s.u32();
                if (hidden != layer.params.hidden) {
                    throw ArchiveError(ArchiveError::Kind::malformed, tag, "H differs from config");
                }
                layer.weights = s.f32s(hidden * layer.inputs);
                s.expect_done();
                archive.set_discovery(std::move(layer));
            } else if (tag == "SVMW") {
                SvmModel model;
                const std::uint32_t mode = s.u32();
                if (mode > 1) {
                    throw ArchiveError(ArchiveError::Kind::malformed, tag, "unknown feature mode");
                }
                model.mode = mode == 0 ? FeatureMode::linear : FeatureMode::poly2;
                if (s.u32() != kClasses) {
                    throw ArchiveError(ArchiveError::Kind::malformed, tag, "class count must be 10");
                }
                model.input_dim = s.u32();
                model.dim = s.u32();
                if (model.dim != expanded_dim(model.input_dim, model.mode)) {
                    throw ArchiveError(ArchiveError::Kind::malformed, tag, "inconsistent dimensions");
                }
                model.lambda = archive.config_.svm_lambda;
                model.epochs = static_cast<int>(archive.config_.svm_epochs);
                model.mean = s.f32s(model.dim);
                model.inv_std = s.f32s(model.dim);
                model.weights = s.f32s(kClasses * (model.dim + 1));
                s.expect_done();
                archive.set_classifier(std::move(model));
            } else {
                throw ArchiveError(ArchiveError::Kind::malformed, tag, "unknown section");
            }
        } catch (const ArchiveError&) {
            throw;
        } catch (const Error& e) {
            throw ArchiveError(ArchiveError::Kind::malformed, tag, e.what());
        }
    }
    if (!have_config) {
        throw ArchiveError(ArchiveError::Kind::malformed, "CONF", "missing");
    }
    if (!stage_flags) {
        throw ArchiveError(ArchiveError::Kind::malformed, "STAG", "missing");
    }
    const std::uint32_t present = (archive.filters_ ? kStageFilters : 0) |
                                  (archive.discovery_ ? kStageDiscovery : 0) |
                                  (archive.classifier_ ? kStageClassifier : 0);
    if (present != *stage_flags) {
        throw ArchiveError(ArchiveError::Kind::malformed, "STAG",
                           "stage flags do not match the sections present");
    }
    return archive;
}

void save_model(const ModelArchive& archive, const std::string& path) {
    const auto bytes = archive.serialize();
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ArchiveError(ArchiveError::Kind::io, "", "cannot create " + tmp);
        }
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw ArchiveError(ArchiveError::Kind::io, "", "write failed for " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw ArchiveError(ArchiveError::Kind::io, "", "cannot move " + tmp + " to " + path);
    }
}

ModelArchive load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArchiveError(ArchiveError::Kind::io, "", "cannot open " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return ModelArchive::deserialize(bytes);
}

} // namespace scnn

#pragma once

#include "scnn/classifier.hpp"
#include "scnn/config.hpp"
#include "scnn/discovery.hpp"
#include "scnn/error.hpp"
#include "scnn/sailnet.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scnn {

class ArchiveError : public Error {
public:
    enum class Kind { io, bad_magic, version, checksum, truncated, malformed };

    ArchiveError(Kind kind, std::string section, const std::string& what)
        : Error(section.empty() ? what : "section " + section + ": " + what),
          kind_(kind),
          section_(std::move(section)) {}

    Kind kind() const noexcept { return kind_; }
    const std::string& section() const noexcept { return section_; }

private:
    Kind kind_;
    std::string section_;
};

// Raised when a stage is requested before the stage it depends on.
class StageError : public Error {
public:
    using Error::Error;
};

enum class Stage { filters, discovery, classifier };

std::string_view to_string(Stage stage);

// Trained artifacts of a run. Layers are filled strictly in order:
// filters -> discovery -> classifier.
class ModelArchive {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    ModelArchive() = default;
    explicit ModelArchive(RunConfig config) : config_(std::move(config)) {}

    const RunConfig& config() const { return config_; }

    bool has(Stage stage) const;
    bool complete() const { return has(Stage::classifier); }
    // Throws StageError naming the first missing stage up to and including `stage`.
    void require(Stage stage) const;

    const FilterBank& filters() const;
    const DiscoveryLayer& discovery() const;
    const SvmModel& classifier() const;

    void set_filters(FilterBank bank);
    void set_discovery(DiscoveryLayer layer);
    void set_classifier(SvmModel model);

    std::vector<std::uint8_t> serialize() const;
    static ModelArchive deserialize(const std::vector<std::uint8_t>& bytes);

    bool operator==(const ModelArchive&) const = default;

private:
    RunConfig config_;
    std::optional<FilterBank> filters_;
    std::optional<DiscoveryLayer> discovery_;
    std::optional<SvmModel> classifier_;
};

// Writes through a temporary file and renames it into place.
void save_model(const ModelArchive& archive, const std::string& path);
ModelArchive load_model(const std::string& path);

} // namespace scnn

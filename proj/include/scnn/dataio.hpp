#pragma once

#include "scnn/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scnn {

// Row-major 2-D grid.
template <class T>
struct Grid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }

    bool operator==(const Grid&) const = default;
};

using RawImage = Grid<std::uint8_t>;
// Intensities in [0, 1].
using IntensityImage = Grid<double>;

struct Patch {
    std::size_t size = 0;  // p
    std::size_t row = 0;   // origin in the source image
    std::size_t col = 0;
    std::vector<double> values;  // p*p, row-major
};

struct LabeledDataset {
    std::vector<IntensityImage> images;
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return images.size(); }
    bool empty() const { return images.empty(); }
    // First `n` samples (or all of them if fewer).
    LabeledDataset head(std::size_t n) const;
    // Samples [begin, begin + n).
    LabeledDataset slice(std::size_t begin, std::size_t n) const;
};

// IDX ingestion. Gzip-compressed files are accepted transparently.
std::vector<RawImage> read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes uncompressed IDX (or gzip when the path ends in ".gz"). Intensities are
// mapped back to bytes with round(255 * v).
void write_idx(const LabeledDataset& dataset, const std::string& images_path,
               const std::string& labels_path);

IntensityImage to_intensity(const RawImage& image);

// Zero mean, unit population standard deviation. Throws DegenerateInput for a
// constant image.
Grid<double> normalize_zero_mean_unit_std(const RawImage& image);
Grid<double> normalize_zero_mean_unit_std(const Grid<double>& image);

// Number of valid origins along one axis for a border-ignoring window.
std::size_t patch_positions(std::size_t extent, std::size_t p, std::size_t stride);

// Row-major enumeration of every p x p window at the given stride, borders ignored.
std::vector<Patch> extract_patches(const Grid<double>& image, std::size_t p, std::size_t stride,
                                   bool ignore_borders = true);

// Copies one p x p window into `out` without allocating.
void copy_patch(const Grid<double>& image, std::size_t row, std::size_t col, std::size_t p,
                std::span<double> out);

IntensityImage add_gaussian_noise(const IntensityImage& image, double variance, Rng& rng);
IntensityImage add_salt_pepper(const IntensityImage& image, double density, Rng& rng);

} // namespace scnn

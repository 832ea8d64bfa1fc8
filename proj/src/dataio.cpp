#include "scnn/dataio.hpp"

#include "scnn/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <memory>

namespace scnn {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

// gzread passes uncompressed files through unchanged, so one reader covers both.
std::vector<std::uint8_t> read_all(const std::string& path) {
    std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.c_str(), "rb"), &gzclose);
    if (!file) {
        throw IdxError(IdxError::Kind::io, "cannot open " + path);
    }
    std::vector<std::uint8_t> bytes;
    std::uint8_t buffer[1 << 16];
    for (;;) {
        const int n = gzread(file.get(), buffer, sizeof buffer);
        if (n < 0) {
            throw IdxError(IdxError::Kind::io, "read error in " + path);
        }
        if (n == 0) {
            break;
        }
        bytes.insert(bytes.end(), buffer, buffer + n);
    }
    return bytes;
}

void write_all(const std::string& path, std::span<const std::uint8_t> bytes) {
    const bool gz = path.size() > 3 && path.ends_with(".gz");
    std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.c_str(), gz ? "wb9" : "wbT"),
                                                       &gzclose);
    if (!file) {
        throw IdxError(IdxError::Kind::io, "cannot create " + path);
    }
    if (!bytes.empty() &&
        gzwrite(file.get(), bytes.data(), static_cast<unsigned>(bytes.size())) !=
            static_cast<int>(bytes.size())) {
        throw IdxError(IdxError::Kind::io, "write error in " + path);
    }
}

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
           (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void check_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected,
                 const std::string& path) {
    if (bytes.size() < 4) {
        throw IdxError(IdxError::Kind::truncated, path + ": truncated header");
    }
    if (be32(bytes, 0) != expected) {
        throw IdxError(IdxError::Kind::bad_magic, path + ": bad magic number");
    }
}

} // namespace

LabeledDataset LabeledDataset::head(std::size_t n) const {
    return slice(0, n);
}

LabeledDataset LabeledDataset::slice(std::size_t begin, std::size_t n) const {
    LabeledDataset out;
    begin = std::min(begin, size());
    const std::size_t end = std::min(size(), begin + n);
    out.images.assign(images.begin() + begin, images.begin() + end);
    out.labels.assign(labels.begin() + begin, labels.begin() + end);
    return out;
}

std::vector<RawImage> read_idx_images(const std::string& path) {
    const auto bytes = read_all(path);
    check_magic(bytes, kImageMagic, path);
    if (bytes.size() < 16) {
        throw IdxError(IdxError::Kind::truncated, path + ": truncated header");
    }
    const std::size_t count = be32(bytes, 4);
    const std::size_t rows = be32(bytes, 8);
    const std::size_t cols = be32(bytes, 12);
    if (bytes.size() - 16 < count * rows * cols) {
        throw IdxError(IdxError::Kind::truncated,
                       path + ": expected " + std::to_string(count) + " images, data ends early");
    }
    std::vector<RawImage> images(count, RawImage(rows, cols));
    auto it = bytes.begin() + 16;
    for (auto& img : images) {
        std::copy_n(it, rows * cols, img.data.begin());
        it += static_cast<std::ptrdiff_t>(rows * cols);
    }
    return images;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
    const auto bytes = read_all(path);
    check_magic(bytes, kLabelMagic, path);
    if (bytes.size() < 8) {
        throw IdxError(IdxError::Kind::truncated, path + ": truncated header");
    }
    const std::size_t count = be32(bytes, 4);
    if (bytes.size() - 8 < count) {
        throw IdxError(IdxError::Kind::truncated,
                       path + ": expected " + std::to_string(count) + " labels, data ends early");
    }
    return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto raw = read_idx_images(images_path);
    auto labels = read_idx_labels(labels_path);
    if (raw.size() != labels.size()) {
        throw IdxError(IdxError::Kind::count_mismatch,
                       "image/label count mismatch: " + std::to_string(raw.size()) + " vs " +
                           std::to_string(labels.size()));
    }
    LabeledDataset ds;
    ds.images.reserve(raw.size());
    for (const auto& img : raw) {
        ds.images.push_back(to_intensity(img));
    }
    ds.labels = std::move(labels);
    return ds;
}

void write_idx(const LabeledDataset& dataset, const std::string& images_path,
               const std::string& labels_path) {
    if (dataset.images.size() != dataset.labels.size()) {
        throw IdxError(IdxError::Kind::count_mismatch, "image/label count mismatch");
    }
    const std::size_t rows = dataset.empty() ? 0 : dataset.images.front().rows;
    const std::size_t cols = dataset.empty() ? 0 : dataset.images.front().cols;

    std::vector<std::uint8_t> out;
    out.reserve(16 + dataset.size() * rows * cols);
    put_be32(out, kImageMagic);
    put_be32(out, static_cast<std::uint32_t>(dataset.size()));
    put_be32(out, static_cast<std::uint32_t>(rows));
    put_be32(out, static_cast<std::uint32_t>(cols));
    for (const auto& img : dataset.images) {
        if (img.rows != rows || img.cols != cols) {
            throw GeometryError("write_idx: images differ in shape");
        }
        for (double v : img.data) {
            out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
        }
    }
    write_all(images_path, out);

    out.clear();
    put_be32(out, kLabelMagic);
    put_be32(out, static_cast<std::uint32_t>(dataset.size()));
    out.insert(out.end(), dataset.labels.begin(), dataset.labels.end());
    write_all(labels_path, out);
}

IntensityImage to_intensity(const RawImage& image) {
    IntensityImage out(image.rows, image.cols);
    std::transform(image.data.begin(), image.data.end(), out.data.begin(),
                   [](std::uint8_t b) { return static_cast<double>(b) / 255.0; });
    return out;
}

Grid<double> normalize_zero_mean_unit_std(const Grid<double>& image) {
    if (image.data.empty()) {
        throw DegenerateInput("normalize: empty image");
    }
    const double n = static_cast<double>(image.size());
    double mean = 0.0;
    for (double v : image.data) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : image.data) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 0.0)) {
        throw DegenerateInput("normalize: constant image has zero standard deviation");
    }
    Grid<double> out(image.rows, image.cols);
    for (std::size_t i = 0; i < image.size(); ++i) {
        out.data[i] = (image.data[i] - mean) / sd;
    }
    return out;
}

Grid<double> normalize_zero_mean_unit_std(const RawImage& image) {
    Grid<double> g(image.rows, image.cols);
    std::copy(image.data.begin(), image.data.end(), g.data.begin());
    return normalize_zero_mean_unit_std(g);
}

std::size_t patch_positions(std::size_t extent, std::size_t p, std::size_t stride) {
    if (stride == 0) {
        throw InvalidParameter("stride must be >= 1");
    }
    if (p == 0 || p > extent) {
        throw GeometryError("window of size " + std::to_string(p) + " does not fit extent " +
                            std::to_string(extent));
    }
    return (extent - p) / stride + 1;
}

void copy_patch(const Grid<double>& image, std::size_t row, std::size_t col, std::size_t p,
                std::span<double> out) {
    for (std::size_t i = 0; i < p; ++i) {
        const double* src = &image(row + i, col);
        std::copy(src, src + p, out.begin() + static_cast<std::ptrdiff_t>(i * p));
    }
}

std::vector<Patch> extract_patches(const Grid<double>& image, std::size_t p, std::size_t stride,
                                   bool ignore_borders) {
    if (!ignore_borders) {
        throw InvalidParameter("border-inclusive patch extraction is not supported");
    }
    const std::size_t nr = patch_positions(image.rows, p, stride);
    const std::size_t nc = patch_positions(image.cols, p, stride);
    std::vector<Patch> patches;
    patches.reserve(nr * nc);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) {
            Patch patch{p, r * stride, c * stride, std::vector<double>(p * p)};
            copy_patch(image, patch.row, patch.col, p, patch.values);
            patches.push_back(std::move(patch));
        }
    }
    return patches;
}

IntensityImage add_gaussian_noise(const IntensityImage& image, double variance, Rng& rng) {
    if (!(variance >= 0.0) || !std::isfinite(variance)) {
        throw InvalidParameter("gaussian noise variance must be >= 0");
    }
    IntensityImage out = image;
    if (variance == 0.0) {
        return out;
    }
    const double sd = std::sqrt(variance);
    for (double& v : out.data) {
        v = std::clamp(v + sd * standard_normal(rng), 0.0, 1.0);
    }
    return out;
}

IntensityImage add_salt_pepper(const IntensityImage& image, double density, Rng& rng) {
    if (!(density >= 0.0 && density <= 1.0)) {
        throw InvalidParameter("salt-and-pepper density must lie in [0, 1]");
    }
    IntensityImage out = image;
    if (density == 0.0) {
        return out;
    }
    for (double& v : out.data) {
        if (uniform01(rng) < density) {
            v = uniform01(rng) < 0.5 ? 1.0 : 0.0;
        }
    }
    return out;
}

} // namespace scnn

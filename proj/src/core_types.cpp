#include "bmi/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bmi {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::IndivisibleGrid: return "IndivisibleGrid";
        case ErrorCode::ZeroArea: return "ZeroArea";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::SingularProjection: return "SingularProjection";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::TooSmall: return "TooSmall";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Malformed: return "Malformed";
        case ErrorCode::UnsupportedDepth: return "UnsupportedDepth";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::uint64_t> offset)
    : std::runtime_error(offset ? message + " (at byte " + std::to_string(*offset) + ")" : message),
      code_(code),
      offset_(offset) {}

void Image::check_normalized() const {
    for (std::size_t i = 0; i < data.size(); ++i) {
        const float v = data[i];
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
            throw Error(ErrorCode::InvariantViolation,
                        "image value " + std::to_string(v) + " at index " + std::to_string(i) +
                            " outside [0,1]");
    }
}

Mask::Mask(std::size_t h, std::size_t w, std::vector<std::uint8_t> bits, MaskOrigin o)
    : Grid2<std::uint8_t>(h, w, std::move(bits)), origin(o) {
    for (auto b : data)
        if (b > 1) throw Error(ErrorCode::InvariantViolation, "mask value not in {0,1}");
}

std::size_t Mask::popcount() const noexcept {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

BlockGrid::BlockGrid(std::uint32_t r, std::uint32_t c) : rows(r), cols(c) {
    if (r < 1 || c < 1) throw Error(ErrorCode::InvalidArgument, "block grid needs rows >= 1 and cols >= 1");
}

void Measurement::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::InvariantViolation, field + ": " + why);
    };
    if (grid.rows < 1 || grid.cols < 1) fail("grid", "rows and cols must be >= 1");
    if (data.size() != data.height * data.width) fail("data", "length != block_height*block_width");
    if (data.height == 0 || data.width == 0) fail("block", "zero-sized block");
    if (original_height == 0 || original_width == 0) fail("original", "zero-sized image");
    if (round_up(original_height, grid.rows) != padded_height())
        fail("block_height", "block_height*rows does not match padded height");
    if (round_up(original_width, grid.cols) != padded_width())
        fail("block_width", "block_width*cols does not match padded width");

    if (const auto* seeded = std::get_if<SeededMask>(&mask_provenance)) {
        if (!(seeded->density > 0.0f && seeded->density < 1.0f)) fail("mask_density", "outside (0,1)");
    } else {
        const auto& m = std::get<Mask>(mask_provenance);
        if (m.height != original_height || m.width != original_width)
            fail("mask", "embedded mask dimensions differ from original image");
    }

    const float n = static_cast<float>(grid.count());
    for (std::size_t j = 0; j < data.size(); ++j) {
        const float v = data.data[j];
        if (!std::isfinite(v) || v < 0.0f || v > n)
            fail("payload", "value " + std::to_string(v) + " at index " + std::to_string(j) +
                                " outside [0," + std::to_string(grid.count()) + "]");
    }
}

void validate_pair(const Image& image, const Mask& mask, const BlockGrid& grid) {
    if (image.height != mask.height || image.width != mask.width)
        throw Error(ErrorCode::DimensionMismatch,
                    "image is " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                        " but mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width));
    if (!grid.divides(image.height, image.width))
        throw Error(ErrorCode::IndivisibleGrid,
                    "grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                        " does not divide " + std::to_string(image.height) + "x" +
                        std::to_string(image.width));
}

Cube partition(const Image& image, const BlockGrid& grid) {
    const std::size_t bh = round_up(image.height, grid.rows) / grid.rows;
    const std::size_t bw = round_up(image.width, grid.cols) / grid.cols;
    Cube cube(grid.count(), bh, bw);
    for (std::size_t r = 0; r < image.height; ++r) {
        const std::size_t br = r / bh, i = r % bh;
        for (std::size_t c = 0; c < image.width; ++c) {
            const std::size_t block = br * grid.cols + c / bw;
            cube.data[block * cube.plane() + i * bw + c % bw] = image.at(r, c);
        }
    }
    return cube;
}

Image assemble(const Cube& cube, const BlockGrid& grid, std::size_t height, std::size_t width) {
    if (cube.blocks != grid.count() || cube.height * grid.rows < height || cube.width * grid.cols < width)
        throw Error(ErrorCode::ShapeMismatch, "cube does not cover requested image size");
    Image image(height, width);
    const std::size_t bh = cube.height, bw = cube.width;
    for (std::size_t r = 0; r < height; ++r) {
        const std::size_t br = r / bh, i = r % bh;
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t block = br * grid.cols + c / bw;
            image.at(r, c) = cube.data[block * cube.plane() + i * bw + c % bw];
        }
    }
    return image;
}

}  // namespace bmi

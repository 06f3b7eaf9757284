#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "bmi/error.hpp"

namespace bmi {

/// Dense row-major 2D grid.
template <class T>
struct Grid2 {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> data;

    Grid2() = default;
    Grid2(std::size_t h, std::size_t w) : height(h), width(w), data(h * w, T{}) {}
    Grid2(std::size_t h, std::size_t w, std::vector<T> values)
        : height(h), width(w), data(std::move(values)) {
        if (data.size() != h * w)
            throw Error(ErrorCode::ShapeMismatch, "grid data length does not match height*width");
    }

    std::size_t size() const noexcept { return data.size(); }
    T& at(std::size_t r, std::size_t c) { return data[r * width + c]; }
    const T& at(std::size_t r, std::size_t c) const { return data[r * width + c]; }
    std::span<T> row(std::size_t r) { return {data.data() + r * width, width}; }
    std::span<const T> row(std::size_t r) const { return {data.data() + r * width, width}; }

    bool same_shape(const Grid2<T>& o) const noexcept {
        return height == o.height && width == o.width;
    }
    bool operator==(const Grid2&) const = default;
};

/// Single-channel intensity image. Loaded images are normalized to [0,1];
/// solver iterates may leave that range before the final clamp.
struct Image : Grid2<float> {
    using Grid2<float>::Grid2;
    Image() = default;
    explicit Image(Grid2<float> g) : Grid2<float>(std::move(g)) {}

    /// Throws InvariantViolation if any value is non-finite or outside [0,1].
    void check_normalized() const;
};

/// Where a mask came from. prng_id 0 means externally supplied (hardware
/// calibration, hand-made); any other id names a pinned generator.
struct MaskOrigin {
    std::uint16_t prng_id = 0;
    std::uint64_t seed = 0;
    float density = 0.0f;
    bool operator==(const MaskOrigin&) const = default;
};

/// Binary photomask; 1 = transparent, 0 = opaque.
struct Mask : Grid2<std::uint8_t> {
    MaskOrigin origin;

    Mask() = default;
    Mask(std::size_t h, std::size_t w) : Grid2<std::uint8_t>(h, w) {}
    Mask(std::size_t h, std::size_t w, std::vector<std::uint8_t> bits, MaskOrigin o = {});

    std::size_t popcount() const noexcept;
    bool operator==(const Mask&) const = default;
};

struct BlockGrid {
    std::uint32_t rows = 1;
    std::uint32_t cols = 1;

    BlockGrid() = default;
    BlockGrid(std::uint32_t r, std::uint32_t c);

    /// Number of blocks, which is also the compression ratio.
    std::uint32_t count() const noexcept { return rows * cols; }
    bool divides(std::size_t height, std::size_t width) const noexcept {
        return height % rows == 0 && width % cols == 0;
    }
    bool operator==(const BlockGrid&) const = default;
};

struct SeededMask {
    std::uint64_t seed = 0;
    float density = 0.5f;
    bool operator==(const SeededMask&) const = default;
};

using MaskProvenance = std::variant<SeededMask, Mask>;

/// One summed block plus everything needed to decode it.
struct Measurement {
    BlockGrid grid;
    std::size_t original_height = 0;
    std::size_t original_width = 0;
    MaskProvenance mask_provenance;
    Grid2<float> data;  // block_height x block_width

    std::size_t block_height() const noexcept { return data.height; }
    std::size_t block_width() const noexcept { return data.width; }
    std::size_t padded_height() const noexcept { return data.height * grid.rows; }
    std::size_t padded_width() const noexcept { return data.width * grid.cols; }
    bool padded() const noexcept {
        return padded_height() != original_height || padded_width() != original_width;
    }

    /// Throws InvariantViolation naming the offending field.
    void validate() const;
};

/// N x h x w stack of blocks (the data cube).
template <class T>
struct BasicCube {
    std::size_t blocks = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> data;

    BasicCube() = default;
    BasicCube(std::size_t n, std::size_t h, std::size_t w)
        : blocks(n), height(h), width(w), data(n * h * w, T{}) {}

    std::size_t plane() const noexcept { return height * width; }
    std::span<T> block(std::size_t i) { return {data.data() + i * plane(), plane()}; }
    std::span<const T> block(std::size_t i) const { return {data.data() + i * plane(), plane()}; }
    bool same_shape(const BasicCube& o) const noexcept {
        return blocks == o.blocks && height == o.height && width == o.width;
    }
    bool operator==(const BasicCube&) const = default;
};

using Cube = BasicCube<float>;
using CubeD = BasicCube<double>;

struct ReconState {
    Cube x;
    Cube v;
    std::size_t stage = 0;
    double eta = 0.0;
    double residual_norm = 0.0;
};

/// Checks image/mask/grid compatibility. Depends only on shapes.
void validate_pair(const Image& image, const Mask& mask, const BlockGrid& grid);

/// Cuts a (padded) image into the row-major stack of grid blocks.
/// Dimensions that the grid does not divide are zero-padded on the bottom/right.
Cube partition(const Image& image, const BlockGrid& grid);

/// Inverse of partition; crops back to (height, width).
Image assemble(const Cube& cube, const BlockGrid& grid, std::size_t height, std::size_t width);

/// Smallest dimension >= size that is a multiple of parts.
inline std::size_t round_up(std::size_t size, std::size_t parts) {
    return (size + parts - 1) / parts * parts;
}

}  // namespace bmi

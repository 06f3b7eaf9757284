#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "bmi/core_types.hpp"

namespace bmi {

struct EncodeOptions {
    /// Zero-pad bottom/right edges when the grid does not divide the image.
    bool pad = false;
    /// Accumulate in double and round once at the end. Worth it for large N.
    bool wide_accumulator = false;
    /// Store the mask bitmap in the measurement even if it has a seed.
    bool embed_mask = false;
};

/// Elementwise product of mask and image.
Image modulate(const Image& image, const Mask& mask);

/// Accumulates the block sum one image row at a time, so arbitrarily tall
/// images can be encoded without holding them in memory. Blocks are summed
/// in row-major block order, identical to SensingOperator::forward.
class StreamingEncoder {
public:
    StreamingEncoder(std::size_t height, std::size_t width, BlockGrid grid, EncodeOptions options = {});

    void push_row(std::span<const float> pixels, std::span<const std::uint8_t> mask_bits);
    std::size_t rows_pushed() const noexcept { return next_row_; }

    /// Returns the accumulated block; all rows must have been pushed.
    Grid2<float> finish();

    std::size_t block_height() const noexcept { return block_h_; }
    std::size_t block_width() const noexcept { return block_w_; }

private:
    std::size_t height_, width_;
    BlockGrid grid_;
    bool wide_;
    std::size_t block_h_, block_w_;
    std::size_t next_row_ = 0;
    std::vector<float> acc_;
    std::vector<double> acc_wide_;
};

/// Modulate, partition into grid.count() blocks, and sum them.
Measurement encode(const Image& image, const Mask& mask, const BlockGrid& grid, EncodeOptions options = {});

struct Resolution {
    std::size_t height = 0;
    std::size_t width = 0;
};

struct BenchRow {
    Resolution resolution;
    std::size_t repeats = 0;
    double mean_ms = 0.0;
    double stddev_ms = 0.0;
};

inline constexpr std::size_t kBenchEvictBytes = std::size_t{64} << 20;

/// Times `encode` on fresh random inputs for each resolution. Input
/// generation is excluded from the timing; each run is single-threaded.
/// After generation `evict_bytes` of unrelated memory are read so that
/// every resolution starts from inputs that are not cache resident, like
/// data arriving from a sensor or disk (0 skips this). Reported stddev is
/// the population standard deviation (0 for one repeat).
std::vector<BenchRow> bench_encode(std::span<const Resolution> resolutions, const BlockGrid& grid,
                                   std::size_t repeats, std::uint64_t seed = 0,
                                   std::size_t evict_bytes = kBenchEvictBytes);

/// `resolution,pixels,mean_ms,stddev_ms`, resolution written as HxW.
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

}  // namespace bmi

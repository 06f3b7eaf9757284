#include "bmi/encoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>

#include "bmi/mask_gen.hpp"

namespace bmi {

namespace {

std::pair<std::size_t, std::size_t> block_shape(std::size_t height, std::size_t width, const BlockGrid& grid,
                                                bool pad) {
    if (height == 0 || width == 0) throw Error(ErrorCode::ZeroArea, "cannot encode an empty image");
    if (!pad && !grid.divides(height, width))
        throw Error(ErrorCode::IndivisibleGrid,
                    "grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                        " does not divide " + std::to_string(height) + "x" + std::to_string(width));
    return {round_up(height, grid.rows) / grid.rows, round_up(width, grid.cols) / grid.cols};
}

}  // namespace

Image modulate(const Image& image, const Mask& mask) {
    if (image.height != mask.height || image.width != mask.width)
        throw Error(ErrorCode::DimensionMismatch, "image and mask dimensions differ");
    Image out(image.height, image.width);
    for (std::size_t i = 0; i < image.size(); ++i)
        out.data[i] = mask.data[i] ? image.data[i] : 0.0f;
    return out;
}

StreamingEncoder::StreamingEncoder(std::size_t height, std::size_t width, BlockGrid grid,
                                   EncodeOptions options)
    : height_(height), width_(width), grid_(grid), wide_(options.wide_accumulator) {
    std::tie(block_h_, block_w_) = block_shape(height, width, grid, options.pad);
    if (wide_)
        acc_wide_.assign(block_h_ * block_w_, 0.0);
    else
        acc_.assign(block_h_ * block_w_, 0.0f);
}

namespace {

template <class Acc>
void accumulate_row(Acc* out, std::span<const float> px, std::span<const std::uint8_t> bits,
                    std::size_t block_w) {
    const std::size_t width = px.size();
    std::size_t c = 0;
    while (c < width) {
        const std::size_t run = std::min(block_w, width - c);
        for (std::size_t k = 0; k < run; ++k)
            out[k] += static_cast<Acc>(static_cast<float>(bits[c + k]) * px[c + k]);
        c += run;
    }
}

}  // namespace

void StreamingEncoder::push_row(std::span<const float> pixels, std::span<const std::uint8_t> mask_bits) {
    if (next_row_ >= height_) throw Error(ErrorCode::ShapeMismatch, "more rows pushed than image height");
    if (pixels.size() != width_ || mask_bits.size() != width_)
        throw Error(ErrorCode::DimensionMismatch, "row length differs from image width");
    const std::size_t offset = (next_row_ % block_h_) * block_w_;
    if (wide_)
        accumulate_row(acc_wide_.data() + offset, pixels, mask_bits, block_w_);
    else
        accumulate_row(acc_.data() + offset, pixels, mask_bits, block_w_);
    ++next_row_;
}

Grid2<float> StreamingEncoder::finish() {
    if (next_row_ != height_)
        throw Error(ErrorCode::ShapeMismatch, "only " + std::to_string(next_row_) + " of " +
                                                  std::to_string(height_) + " rows pushed");
    if (wide_) {
        std::vector<float> out(acc_wide_.size());
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = static_cast<float>(acc_wide_[j]);
        return Grid2<float>(block_h_, block_w_, std::move(out));
    }
    return Grid2<float>(block_h_, block_w_, std::move(acc_));
}

Measurement encode(const Image& image, const Mask& mask, const BlockGrid& grid, EncodeOptions options) {
    if (image.height != mask.height || image.width != mask.width)
        throw Error(ErrorCode::DimensionMismatch,
                    "image is " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                        " but mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width));
    const auto [bh, bw] = block_shape(image.height, image.width, grid, options.pad);
    std::vector<float> acc(options.wide_accumulator ? 0 : bh * bw, 0.0f);
    std::vector<double> acc_wide(options.wide_accumulator ? bh * bw : 0, 0.0);
    // All image rows that land on accumulator row i are visited together so
    // that row stays in cache. Each position still sees its blocks in
    // row-major order, so the sums match StreamingEncoder bit for bit.
    for (std::size_t i = 0; i < bh; ++i) {
        for (std::size_t r = i; r < image.height; r += bh) {
            if (options.wide_accumulator)
                accumulate_row(acc_wide.data() + i * bw, image.row(r), mask.row(r), bw);
            else
                accumulate_row(acc.data() + i * bw, image.row(r), mask.row(r), bw);
        }
    }

    Measurement m;
    m.grid = grid;
    m.original_height = image.height;
    m.original_width = image.width;
    if (mask.origin.prng_id != 0 && !options.embed_mask)
        m.mask_provenance = SeededMask{mask.origin.seed, mask.origin.density};
    else
        m.mask_provenance = mask;
    if (options.wide_accumulator) {
        acc.resize(acc_wide.size());
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = static_cast<float>(acc_wide[j]);
    }
    m.data = Grid2<float>(bh, bw, std::move(acc));
    return m;
}

std::vector<BenchRow> bench_encode(std::span<const Resolution> resolutions, const BlockGrid& grid,
                                   std::size_t repeats, std::uint64_t seed, std::size_t evict_bytes) {
    if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
    std::vector<BenchRow> rows;
    Xoshiro256ss rng(seed);
    std::vector<std::uint8_t> evict(evict_bytes, 1);
    volatile std::uint64_t sink = 0;
    for (const auto& res : resolutions) {
        std::vector<double> times;
        times.reserve(repeats);
        for (std::size_t k = 0; k < repeats; ++k) {
            Image image(res.height, res.width);
            for (auto& v : image.data) v = static_cast<float>(rng.uniform());
            const Mask mask = generate({res.height, res.width, 0.5f, rng.next()});
            std::uint64_t touched = 0;
            for (std::size_t i = 0; i < evict.size(); i += 64) touched += evict[i]++;
            sink = sink + touched;

            const auto t0 = std::chrono::steady_clock::now();
            const Measurement m = encode(image, mask, grid);
            const auto t1 = std::chrono::steady_clock::now();
            // Keep the result observable so the call cannot be elided.
            if (m.data.data.empty()) throw Error(ErrorCode::ShapeMismatch, "empty measurement");
            times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        double mean = 0.0;
        for (double t : times) mean += t;
        mean /= static_cast<double>(times.size());
        double var = 0.0;
        for (double t : times) var += (t - mean) * (t - mean);
        var /= static_cast<double>(times.size());
        rows.push_back({res, repeats, mean, std::sqrt(var)});
    }
    return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
    out << "resolution,pixels,mean_ms,stddev_ms\n";
    for (const auto& r : rows) {
        out << r.resolution.height << 'x' << r.resolution.width << ','
            << r.resolution.height * r.resolution.width << ',' << r.mean_ms << ',' << r.stddev_ms << '\n';
    }
}

}  // namespace bmi

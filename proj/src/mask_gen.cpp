#include "bmi/mask_gen.hpp"

#include <string>

namespace bmi {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Xoshiro256ss::Xoshiro256ss(std::uint64_t seed) noexcept {
    for (auto& word : s_) word = splitmix64(seed);
}

std::uint64_t Xoshiro256ss::next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

Mask generate(const MaskSpec& spec) {
    if (spec.height == 0 || spec.width == 0)
        throw Error(ErrorCode::ZeroArea, "mask height and width must be positive");
    if (!(spec.density > 0.0f && spec.density < 1.0f))
        throw Error(ErrorCode::InvalidArgument,
                    "mask density " + std::to_string(spec.density) + " outside (0,1)");

    Mask mask(spec.height, spec.width);
    mask.origin = {kPrngXoshiro256ss, spec.seed, spec.density};
    Xoshiro256ss rng(spec.seed);
    const double p = spec.density;
    for (auto& bit : mask.data) bit = rng.uniform() < p ? 1 : 0;
    return mask;
}

Grid2<std::uint32_t> coverage_per_position(const Mask& mask, const BlockGrid& grid) {
    if (!grid.divides(mask.height, mask.width))
        throw Error(ErrorCode::IndivisibleGrid, "grid does not divide mask dimensions");
    const std::size_t bh = mask.height / grid.rows, bw = mask.width / grid.cols;
    Grid2<std::uint32_t> cov(bh, bw);
    for (std::size_t r = 0; r < mask.height; ++r) {
        auto out = cov.row(r % bh);
        auto in = mask.row(r);
        for (std::size_t c = 0; c < mask.width; ++c) out[c % bw] += in[c];
    }
    return cov;
}

}  // namespace bmi

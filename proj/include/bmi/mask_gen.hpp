#pragma once

#include <array>
#include <cstdint>

#include "bmi/core_types.hpp"

namespace bmi {

/// Generator id stamped into mask files for masks produced by `generate`.
inline constexpr std::uint16_t kPrngXoshiro256ss = 1;

/// xoshiro256** 1.0 (Blackman & Vigna), state seeded by four successive
/// splitmix64 outputs starting from the user seed. Output is fully
/// specified by the algorithm, so masks reproduce on every platform.
class Xoshiro256ss {
public:
    explicit Xoshiro256ss(std::uint64_t seed) noexcept;
    std::uint64_t next() noexcept;
    /// Uniform double in [0,1) from the top 53 bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::array<std::uint64_t, 4> s_;
};

struct MaskSpec {
    std::size_t height = 0;
    std::size_t width = 0;
    float density = 0.5f;
    std::uint64_t seed = 0;
};

/// Bernoulli(density) mask. Pixels are drawn in row-major order, one
/// generator output each: bit = uniform() < density.
Mask generate(const MaskSpec& spec);

/// Entry j counts the blocks whose mask bit at within-block position j is 1,
/// i.e. the diagonal of the Gram matrix of the sensing operator.
Grid2<std::uint32_t> coverage_per_position(const Mask& mask, const BlockGrid& grid);

}  // namespace bmi

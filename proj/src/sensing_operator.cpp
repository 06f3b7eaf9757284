#include "bmi/sensing_operator.hpp"

#include <algorithm>

namespace bmi {

SensingOperator::SensingOperator(const Mask& mask, const BlockGrid& grid, bool pad)
    : grid_(grid), original_h_(mask.height), original_w_(mask.width) {
    if (mask.height == 0 || mask.width == 0) throw Error(ErrorCode::ZeroArea, "empty mask");
    if (!pad && !grid.divides(mask.height, mask.width))
        throw Error(ErrorCode::IndivisibleGrid,
                    "grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                        " does not divide mask " + std::to_string(mask.height) + "x" +
                        std::to_string(mask.width));
    const std::size_t bh = round_up(mask.height, grid.rows) / grid.rows;
    const std::size_t bw = round_up(mask.width, grid.cols) / grid.cols;
    mask_blocks_ = BasicCube<std::uint8_t>(grid.count(), bh, bw);
    gram_diag_ = Grid2<std::uint32_t>(bh, bw);

    for (std::size_t r = 0; r < mask.height; ++r) {
        const std::size_t br = r / bh, i = r % bh;
        for (std::size_t c = 0; c < mask.width; ++c) {
            const std::uint8_t bit = mask.at(r, c);
            const std::size_t block = br * grid.cols + c / bw;
            const std::size_t j = i * bw + c % bw;
            mask_blocks_.data[block * bh * bw + j] = bit;
            gram_diag_.data[j] += bit;
        }
    }
}

void SensingOperator::projection_step(ReconState& state, const Grid2<float>& y, double eta,
                                      ZeroCoverage policy) const {
    state.v = project(state.x, y, eta, policy);
    state.eta = eta;
    state.residual_norm = residual_norm(state.x, y);
}

Cube SensingOperator::init_estimate(const Grid2<float>& y) const {
    check_block(y);
    Cube x(blocks(), block_height(), block_width());
    const std::size_t plane = x.plane();
    std::vector<float> scaled(plane);
    for (std::size_t j = 0; j < plane; ++j)
        scaled[j] = y.data[j] / static_cast<float>(std::max<std::uint32_t>(gram_diag_.data[j], 1));
    for (std::size_t i = 0; i < blocks(); ++i) {
        const std::uint8_t* m = mask_blocks_.data.data() + i * plane;
        float* xi = x.data.data() + i * plane;
        for (std::size_t j = 0; j < plane; ++j) xi[j] = m[j] ? scaled[j] : 0.0f;
    }
    return x;
}

}  // namespace bmi

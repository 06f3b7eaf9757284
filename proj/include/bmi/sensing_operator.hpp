#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "bmi/core_types.hpp"

namespace bmi {

/// What to do when a within-block position is covered by no mask bit and
/// eta is zero, making the projection denominator vanish.
enum class ZeroCoverage {
    Error,     ///< throw SingularProjection
    Tolerant,  ///< use max(eta, kTolerantEta) at those positions only
};

inline constexpr double kTolerantEta = 1e-6;

/// Phi = [D_1, ..., D_N] with D_i = diag(vec(M_i)), held as the stack of
/// mask blocks. Everything is computed on the N x h x w cube; Phi is never
/// materialized. Phi Phi^T is diagonal and equals diag(gram_diag).
class SensingOperator {
public:
    /// `mask` has the original image size. With `pad` the mask is extended
    /// by opaque pixels on the bottom/right to the next grid multiple.
    SensingOperator(const Mask& mask, const BlockGrid& grid, bool pad = false);

    std::size_t blocks() const noexcept { return mask_blocks_.blocks; }
    std::size_t block_height() const noexcept { return mask_blocks_.height; }
    std::size_t block_width() const noexcept { return mask_blocks_.width; }
    const BlockGrid& grid() const noexcept { return grid_; }
    /// Size of the mask before padding, i.e. of the images this operator encodes.
    std::size_t original_height() const noexcept { return original_h_; }
    std::size_t original_width() const noexcept { return original_w_; }
    const BasicCube<std::uint8_t>& mask_blocks() const noexcept { return mask_blocks_; }
    const Grid2<std::uint32_t>& gram_diag() const noexcept { return gram_diag_; }

    /// (Phi x)[j] = sum_i M_i[j] x_i[j], summed in block order i = 0..N-1.
    template <class T>
    Grid2<T> forward(const BasicCube<T>& x) const;

    /// (Phi^T y)_i[j] = M_i[j] y[j].
    template <class T>
    BasicCube<T> adjoint(const Grid2<T>& y) const;

    /// v = x + Phi^T (Phi Phi^T + eta I)^{-1} (y - Phi x), elementwise.
    template <class T>
    BasicCube<T> project(const BasicCube<T>& x, const Grid2<T>& y, double eta,
                         ZeroCoverage policy = ZeroCoverage::Error) const;

    /// Sets state.v from state.x and records eta and the residual of x.
    void projection_step(ReconState& state, const Grid2<float>& y, double eta,
                         ZeroCoverage policy = ZeroCoverage::Error) const;

    /// x_i[j] = M_i[j] y[j] / max(gram_diag[j], 1).
    Cube init_estimate(const Grid2<float>& y) const;

    /// ||y - Phi x||_2, accumulated in double.
    template <class T>
    double residual_norm(const BasicCube<T>& x, const Grid2<T>& y) const;

private:
    template <class T>
    void check_cube(const BasicCube<T>& x) const;
    template <class T>
    void check_block(const Grid2<T>& y) const;

    BlockGrid grid_;
    std::size_t original_h_ = 0;
    std::size_t original_w_ = 0;
    BasicCube<std::uint8_t> mask_blocks_;
    Grid2<std::uint32_t> gram_diag_;
};

template <class T>
void SensingOperator::check_cube(const BasicCube<T>& x) const {
    if (x.blocks != blocks() || x.height != block_height() || x.width != block_width())
        throw Error(ErrorCode::ShapeMismatch,
                    "cube " + std::to_string(x.blocks) + "x" + std::to_string(x.height) + "x" +
                        std::to_string(x.width) + " does not match operator " + std::to_string(blocks()) +
                        "x" + std::to_string(block_height()) + "x" + std::to_string(block_width()));
}

template <class T>
void SensingOperator::check_block(const Grid2<T>& y) const {
    if (y.height != block_height() || y.width != block_width() || y.data.size() != y.height * y.width)
        throw Error(ErrorCode::ShapeMismatch, "measurement block does not match operator block size");
}

template <class T>
Grid2<T> SensingOperator::forward(const BasicCube<T>& x) const {
    check_cube(x);
    Grid2<T> y(block_height(), block_width());
    const std::size_t plane = x.plane();
    for (std::size_t i = 0; i < blocks(); ++i) {
        const std::uint8_t* m = mask_blocks_.data.data() + i * plane;
        const T* xi = x.data.data() + i * plane;
        for (std::size_t j = 0; j < plane; ++j) y.data[j] += static_cast<T>(m[j]) * xi[j];
    }
    return y;
}

template <class T>
BasicCube<T> SensingOperator::adjoint(const Grid2<T>& y) const {
    check_block(y);
    BasicCube<T> x(blocks(), block_height(), block_width());
    const std::size_t plane = x.plane();
    for (std::size_t i = 0; i < blocks(); ++i) {
        const std::uint8_t* m = mask_blocks_.data.data() + i * plane;
        T* xi = x.data.data() + i * plane;
        for (std::size_t j = 0; j < plane; ++j) xi[j] = m[j] ? y.data[j] : T{0};
    }
    return x;
}

template <class T>
BasicCube<T> SensingOperator::project(const BasicCube<T>& x, const Grid2<T>& y, double eta,
                                      ZeroCoverage policy) const {
    check_cube(x);
    check_block(y);
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw Error(ErrorCode::InvalidArgument, "eta must be finite and >= 0");

    const Grid2<T> phix = forward(x);
    const std::size_t plane = x.plane();
    std::vector<T> step(plane);
    for (std::size_t j = 0; j < plane; ++j) {
        const std::uint32_t g = gram_diag_.data[j];
        double denom = static_cast<double>(g) + eta;
        if (g == 0) {
            if (policy == ZeroCoverage::Tolerant)
                denom = std::max(eta, kTolerantEta);
            else if (eta == 0.0)
                throw Error(ErrorCode::SingularProjection,
                            "eta is 0 and position " + std::to_string(j) + " is covered by no block");
        }
        step[j] = (y.data[j] - phix.data[j]) / static_cast<T>(denom);
    }

    BasicCube<T> v = x;
    for (std::size_t i = 0; i < blocks(); ++i) {
        const std::uint8_t* m = mask_blocks_.data.data() + i * plane;
        T* vi = v.data.data() + i * plane;
        for (std::size_t j = 0; j < plane; ++j)
            if (m[j]) vi[j] += step[j];
    }
    return v;
}

template <class T>
double SensingOperator::residual_norm(const BasicCube<T>& x, const Grid2<T>& y) const {
    check_block(y);
    const Grid2<T> phix = forward(x);
    double acc = 0.0;
    for (std::size_t j = 0; j < phix.size(); ++j) {
        const double r = static_cast<double>(y.data[j]) - static_cast<double>(phix.data[j]);
        acc += r * r;
    }
    return std::sqrt(acc);
}

}  // namespace bmi

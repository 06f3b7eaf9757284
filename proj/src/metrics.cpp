#include "bmi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace bmi {

namespace {

void require_same_shape(const Image& a, const Image& b) {
    if (a.height != b.height || a.width != b.width)
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                        std::to_string(b.height) + "x" + std::to_string(b.width));
}

std::vector<double> gaussian_1d(int radius, double sigma) {
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    for (auto& v : k) v /= sum;
    return k;
}

// 'valid' separable filtering: output is (h - 2r) x (w - 2r).
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& k) {
    const std::size_t taps = k.size();
    const std::size_t ow = w - taps + 1, oh = h - taps + 1;
    std::vector<double> tmp(h * ow);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (std::size_t t = 0; t < taps; ++t) acc += k[t] * src[r * w + c + t];
            tmp[r * ow + c] = acc;
        }
    std::vector<double> out(oh * ow);
    for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (std::size_t t = 0; t < taps; ++t) acc += k[t] * tmp[(r + t) * ow + c];
            out[r * ow + c] = acc;
        }
    return out;
}

}  // namespace

double psnr(const Image& reference, const Image& test) {
    require_same_shape(reference, test);
    if (reference.size() == 0) throw Error(ErrorCode::ZeroArea, "empty image");
    double sse = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = double(reference.data[i]) - test.data[i];
        sse += d * d;
    }
    const double mse = sse / static_cast<double>(reference.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& reference, const Image& test, const SsimParams& p) {
    require_same_shape(reference, test);
    const std::size_t window = static_cast<std::size_t>(2 * p.radius + 1);
    if (reference.height < window || reference.width < window)
        throw Error(ErrorCode::TooSmall, "SSIM needs both dimensions >= " + std::to_string(window));

    const std::size_t h = reference.height, w = reference.width, n = h * w;
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = reference.data[i];
        b[i] = test.data[i];
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto k = gaussian_1d(p.radius, p.sigma);
    const auto mu_a = filter_valid(a, h, w, k);
    const auto mu_b = filter_valid(b, h, w, k);
    const auto e_aa = filter_valid(aa, h, w, k);
    const auto e_bb = filter_valid(bb, h, w, k);
    const auto e_ab = filter_valid(ab, h, w, k);

    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = e_aa[i] - ma * ma;
        const double vb = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

}  // namespace bmi

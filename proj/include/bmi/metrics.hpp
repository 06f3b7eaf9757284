#pragma once

#include "bmi/core_types.hpp"

namespace bmi {

/// Returned by psnr for identical images.
inline constexpr double kPsnrCapDb = 100.0;

/// 10 log10(1 / MSE) for intensities in [0,1], capped at kPsnrCapDb.
double psnr(const Image& reference, const Image& test);

/// SSIM parameters: 11x11 Gaussian window with sigma 1.5 (normalized to
/// unit sum), K1 = 0.01, K2 = 0.03, dynamic range 1. The score is the mean
/// of the local SSIM map over all windows fully inside the image.
struct SsimParams {
    int radius = 5;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

double ssim(const Image& reference, const Image& test, const SsimParams& params = {});

}  // namespace bmi

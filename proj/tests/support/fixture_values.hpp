#pragma once

// Values produced once by tests/oracle/dense_gap_tv.cpp (dense Phi,
// Gram pseudo-inverse, independent Chambolle TV in double) and frozen here.
//
// Fixture: 64x64 center crop of support/chart.hpp, grid 2x2, Bernoulli(0.5)
// mask seed 42, solver defaults (60 iters, eta 0, TV weight 0.1 with 5 inner
// iterations, rho 0.01) in tolerant zero-coverage mode.

#include "bmi/encoder.hpp"
#include "bmi/mask_gen.hpp"
#include "bmi/solvers.hpp"
#include "support/chart.hpp"

namespace bmi::testing {

inline constexpr double kFixtureGapPsnrDb = 14.9433;
inline constexpr double kFixtureAdmmPsnrDb = 17.0268;
inline constexpr double kFixtureWrongMaskPsnrDb = 9.2015;  // GAP decoded with seed 43
inline constexpr double kTvImpulsePeak = 0.669004;         // 8x8, impulse at (4,4), weight 0.1, 5 iters

inline constexpr std::uint64_t kFixtureSeed = 42;
inline const BlockGrid kFixtureGrid{2, 2};

inline SolverConfig fixture_config(Algorithm algorithm = Algorithm::Gap) {
    SolverConfig cfg;
    cfg.algorithm = algorithm;
    cfg.zero_coverage = ZeroCoverage::Tolerant;
    return cfg;
}

inline Mask fixture_mask(std::uint64_t seed = kFixtureSeed) { return generate({64, 64, 0.5f, seed}); }

}  // namespace bmi::testing

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "bmi/core_types.hpp"
#include "bmi/sensing_operator.hpp"

namespace bmi {

enum class Algorithm { Gap, Admm };

enum class InitMode {
    NormalizedAdjoint,  ///< SensingOperator::init_estimate
    Zero,
};

struct SolverConfig {
    Algorithm algorithm = Algorithm::Gap;
    std::size_t max_iters = 60;
    /// eta for iteration k (1-based) is eta_schedule[min(k, size) - 1].
    std::vector<double> eta_schedule{0.0};
    double rho = 0.01;
    double tv_weight = 0.1;
    std::size_t tv_inner_iters = 5;
    double stop_tol = 1e-5;
    bool clamp_final = true;
    ZeroCoverage zero_coverage = ZeroCoverage::Error;
    InitMode init = InitMode::NormalizedAdjoint;

    /// Ten fixed stages, mirroring a ten-stage unfolded network.
    static SolverConfig stages10();

    double eta_at(std::size_t iter) const;
    void validate() const;
};

/// D^(k) of the iteration: a shape-preserving cube transform.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Cube denoise(const Cube& v) const = 0;
    virtual double strength() const = 0;
};

class IdentityDenoiser final : public Denoiser {
public:
    Cube denoise(const Cube& v) const override { return v; }
    double strength() const override { return 0.0; }
};

/// Isotropic TV proximal operator, applied to each block independently.
class TvDenoiser final : public Denoiser {
public:
    TvDenoiser(double weight, std::size_t inner_iters);
    Cube denoise(const Cube& v) const override;
    double strength() const override { return weight_; }

private:
    double weight_;
    std::size_t inner_iters_;
};

/// Chambolle's dual projection for argmin_u 1/2||u - f||^2 + weight*TV(u),
/// step 1/8, forward differences with Neumann boundary, started from p = 0.
/// weight == 0 returns the input unchanged.
Cube tv_denoise(const Cube& cube, double weight, std::size_t inner_iters);

/// Isotropic total variation of one block.
double total_variation(std::span<const float> block, std::size_t height, std::size_t width);

struct TraceRow {
    std::size_t iter = 0;
    double residual_l2 = 0.0;  ///< ||y - Phi x^(k)||_2
    double change_l2 = 0.0;    ///< ||x^(k) - x^(k-1)||_2
    bool operator==(const TraceRow&) const = default;
};

struct SolveResult {
    Image image;  ///< reassembled, cropped, optionally clamped
    std::vector<TraceRow> trace;
    ReconState state;
    bool converged = false;
};

SolveResult gap_solve(const Grid2<float>& y, const SensingOperator& op, const SolverConfig& cfg,
                      const Denoiser& denoiser);

/// Scaled-form ADMM: x = project(z - u, eta = rho); z = D(x + u); u += x - z.
/// The denoised iterate z is returned.
SolveResult admm_solve(const Grid2<float>& y, const SensingOperator& op, const SolverConfig& cfg,
                       const Denoiser& denoiser);

/// Dispatches on cfg.algorithm.
SolveResult solve(const Grid2<float>& y, const SensingOperator& op, const SolverConfig& cfg,
                  const Denoiser& denoiser);

/// Builds the operator for `m` from `mask` and runs the configured solver
/// with a TV denoiser.
SolveResult decode(const Measurement& m, const Mask& mask, const SolverConfig& cfg);

/// Mask for a measurement: the embedded bitmap, or regenerated from its seed.
Mask resolve_mask(const Measurement& m);

/// `iter,residual_l2,change_l2`
void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace);

}  // namespace bmi

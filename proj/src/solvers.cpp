#include "bmi/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "bmi/mask_gen.hpp"

namespace bmi {

SolverConfig SolverConfig::stages10() {
    SolverConfig cfg;
    cfg.max_iters = 10;
    cfg.stop_tol = 0.0;
    return cfg;
}

double SolverConfig::eta_at(std::size_t iter) const {
    if (eta_schedule.empty()) return 0.0;
    const std::size_t k = std::clamp<std::size_t>(iter, 1, eta_schedule.size());
    return eta_schedule[k - 1];
}

void SolverConfig::validate() const {
    if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    if (!(tv_weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tv_weight must be >= 0");
    if (!(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be > 0");
    if (!(stop_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "stop_tol must be >= 0");
    for (double e : eta_schedule)
        if (!(e >= 0.0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidArgument, "eta values must be >= 0");
}

// ---------------------------------------------------------------------------
// Total variation

namespace {

// Chambolle (2004) on a single h x w block. Scratch buffers are reused
// across blocks by the caller.
struct TvScratch {
    std::vector<double> px, py, d;
};

void tv_block(std::span<const float> f, std::span<float> out, std::size_t h, std::size_t w,
              double lambda, std::size_t iters, TvScratch& s) {
    const std::size_t n = h * w;
    s.px.assign(n, 0.0);
    s.py.assign(n, 0.0);
    s.d.assign(n, 0.0);
    constexpr double tau = 0.125;

    auto divergence = [&](std::size_t r, std::size_t c) {
        const std::size_t k = r * w + c;
        double dx = (c + 1 < w ? s.px[k] : 0.0) - (c > 0 ? s.px[k - 1] : 0.0);
        double dy = (r + 1 < h ? s.py[k] : 0.0) - (r > 0 ? s.py[k - w] : 0.0);
        return dx + dy;
    };

    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c)
                s.d[r * w + c] = divergence(r, c) - static_cast<double>(f[r * w + c]) / lambda;
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                const std::size_t k = r * w + c;
                const double gx = c + 1 < w ? s.d[k + 1] - s.d[k] : 0.0;
                const double gy = r + 1 < h ? s.d[k + w] - s.d[k] : 0.0;
                const double norm = 1.0 + tau * std::sqrt(gx * gx + gy * gy);
                s.px[k] = (s.px[k] + tau * gx) / norm;
                s.py[k] = (s.py[k] + tau * gy) / norm;
            }
        }
    }
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            out[r * w + c] = static_cast<float>(static_cast<double>(f[r * w + c]) - lambda * divergence(r, c));
}

}  // namespace

Cube tv_denoise(const Cube& cube, double weight, std::size_t inner_iters) {
    if (!(weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "TV weight must be >= 0");
    if (weight == 0.0 || inner_iters == 0) return cube;
    Cube out(cube.blocks, cube.height, cube.width);
    TvScratch scratch;
    for (std::size_t i = 0; i < cube.blocks; ++i)
        tv_block(cube.block(i), out.block(i), cube.height, cube.width, weight, inner_iters, scratch);
    return out;
}

double total_variation(std::span<const float> block, std::size_t height, std::size_t width) {
    double tv = 0.0;
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t k = r * width + c;
            const double gx = c + 1 < width ? double(block[k + 1]) - block[k] : 0.0;
            const double gy = r + 1 < height ? double(block[k + width]) - block[k] : 0.0;
            tv += std::sqrt(gx * gx + gy * gy);
        }
    }
    return tv;
}

TvDenoiser::TvDenoiser(double weight, std::size_t inner_iters) : weight_(weight), inner_iters_(inner_iters) {
    if (!(weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "TV weight must be >= 0");
}

Cube TvDenoiser::denoise(const Cube& v) const { return tv_denoise(v, weight_, inner_iters_); }

// ---------------------------------------------------------------------------
// Outer loops

namespace {

double l2(const Cube& a) {
    double acc = 0.0;
    for (float v : a.data) acc += double(v) * v;
    return std::sqrt(acc);
}

double l2_diff(const Cube& a, const Cube& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

void require_finite(const Cube& x, std::size_t iter) {
    for (float v : x.data)
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteState, "non-finite iterate at iteration " + std::to_string(iter));
}

Cube initial_cube(const Grid2<float>& y, const SensingOperator& op, InitMode mode) {
    if (mode == InitMode::Zero) return Cube(op.blocks(), op.block_height(), op.block_width());
    return op.init_estimate(y);
}

Image finalize(const Cube& x, const SensingOperator& op, bool clamp) {
    Image image = assemble(x, op.grid(), op.original_height(), op.original_width());
    if (clamp)
        for (auto& v : image.data) v = std::clamp(v, 0.0f, 1.0f);
    return image;
}

bool converged(double change, double previous_norm, double tol) {
    const double rel = previous_norm > 0.0 ? change / previous_norm : change;
    return rel < tol;
}

}  // namespace

SolveResult gap_solve(const Grid2<float>& y, const SensingOperator& op, const SolverConfig& cfg,
                      const Denoiser& denoiser) {
    cfg.validate();
    SolveResult result;
    ReconState& st = result.state;
    st.x = initial_cube(y, op, cfg.init);

    for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
        st.stage = k;
        op.projection_step(st, y, cfg.eta_at(k), cfg.zero_coverage);
        Cube next = denoiser.denoise(st.v);
        require_finite(next, k);

        const double change = l2_diff(next, st.x);
        const double prev_norm = l2(st.x);
        st.x = std::move(next);
        st.residual_norm = op.residual_norm(st.x, y);
        result.trace.push_back({k, st.residual_norm, change});
        if (converged(change, prev_norm, cfg.stop_tol)) {
            result.converged = true;
            break;
        }
    }
    result.image = finalize(st.x, op, cfg.clamp_final);
    return result;
}

SolveResult admm_solve(const Grid2<float>& y, const SensingOperator& op, const SolverConfig& cfg,
                       const Denoiser& denoiser) {
    cfg.validate();
    SolveResult result;
    ReconState& st = result.state;
    Cube z = initial_cube(y, op, cfg.init);
    Cube u(op.blocks(), op.block_height(), op.block_width());
    Cube work = z;

    for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
        st.stage = k;
        for (std::size_t i = 0; i < work.data.size(); ++i) work.data[i] = z.data[i] - u.data[i];
        st.v = op.project(work, y, cfg.rho, cfg.zero_coverage);
        st.eta = cfg.rho;

        for (std::size_t i = 0; i < work.data.size(); ++i) work.data[i] = st.v.data[i] + u.data[i];
        Cube z_next = denoiser.denoise(work);
        require_finite(z_next, k);
        for (std::size_t i = 0; i < u.data.size(); ++i) u.data[i] += st.v.data[i] - z_next.data[i];
        require_finite(u, k);

        const double change = l2_diff(z_next, z);
        const double prev_norm = l2(z);
        z = std::move(z_next);
        st.residual_norm = op.residual_norm(z, y);
        result.trace.push_back({k, st.residual_norm, change});
        if (converged(change, prev_norm, cfg.stop_tol)) {
            result.converged = true;
            break;
        }
    }
    st.x = std::move(z);
    result.image = finalize(st.x, op, cfg.clamp_final);
    return result;
}

SolveResult solve(const Grid2<float>& y, const SensingOperator& op, const SolverConfig& cfg,
                  const Denoiser& denoiser) {
    return cfg.algorithm == Algorithm::Admm ? admm_solve(y, op, cfg, denoiser) : gap_solve(y, op, cfg, denoiser);
}

Mask resolve_mask(const Measurement& m) {
    if (const auto* seeded = std::get_if<SeededMask>(&m.mask_provenance))
        return generate({m.original_height, m.original_width, seeded->density, seeded->seed});
    return std::get<Mask>(m.mask_provenance);
}

SolveResult decode(const Measurement& m, const Mask& mask, const SolverConfig& cfg) {
    if (mask.height != m.original_height || mask.width != m.original_width)
        throw Error(ErrorCode::DimensionMismatch, "mask dimensions differ from the encoded image");
    const SensingOperator op(mask, m.grid, m.padded());
    const TvDenoiser tv(cfg.tv_weight, cfg.tv_inner_iters);
    return solve(m.data, op, cfg, tv);
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace) {
    const auto old_precision = out.precision(17);
    out << "iter,residual_l2,change_l2\n";
    for (const auto& row : trace) out << row.iter << ',' << row.residual_l2 << ',' << row.change_l2 << '\n';
    out.precision(old_precision);
}

}  // namespace bmi

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "bmi/container_io.hpp"
#include "bmi/encoder.hpp"
#include "bmi/mask_gen.hpp"
#include "bmi/metrics.hpp"
#include "bmi/sensing_operator.hpp"
#include "bmi/solvers.hpp"
#include "support/fixture_values.hpp"

using namespace bmi;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail << "first failure: " << what << "; ";
        pass = pass && ok;
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Image random_image(std::size_t h, std::size_t w, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(h, w);
    for (auto& v : img.data) v = u(rng);
    return img;
}

// ---------------------------------------------------------------------------

void operator_algebra(Verdict& v) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::normal_distribution<double> g;

    double worst_adjoint = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const BlockGrid grid(1 + rng() % 4, 1 + rng() % 4);
        const std::size_t bh = 1 + rng() % 16, bw = 1 + rng() % 16;
        const SensingOperator op(generate({bh * grid.rows, bw * grid.cols, 0.5f, rng()}), grid);
        CubeD x(op.blocks(), bh, bw);
        for (auto& e : x.data) e = g(rng);
        Grid2<double> y(bh, bw);
        for (auto& e : y.data) e = g(rng);
        const auto phix = op.forward(x);
        const auto phity = op.adjoint(y);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) lhs += phix.data[j] * y.data[j];
        for (std::size_t k = 0; k < x.data.size(); ++k) rhs += x.data[k] * phity.data[k];
        worst_adjoint = std::max(worst_adjoint, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    v.require(worst_adjoint <= 1e-10, "adjoint identity");

    int gram_instances = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const BlockGrid grid(1 + rng() % 2, 1 + rng() % 2);
        const std::size_t bh = 1 + rng() % 4, bw = 1 + rng() % 4;
        const SensingOperator op(generate({bh * grid.rows, bw * grid.cols, 0.5f, rng()}), grid);
        const std::size_t plane = bh * bw, n = op.blocks() * plane;
        Eigen::MatrixXd phi(plane, n);
        for (std::size_t col = 0; col < n; ++col) {
            CubeD e(op.blocks(), bh, bw);
            e.data[col] = 1.0;
            const auto column = op.forward(e);
            for (std::size_t j = 0; j < plane; ++j) phi(j, col) = column.data[j];
        }
        const Eigen::MatrixXd gram = phi * phi.transpose();
        Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(plane, plane);
        for (std::size_t j = 0; j < plane; ++j) expect(j, j) = op.gram_diag().data[j];
        v.require(gram == expect, "dense Gram equals diag(gram_diag)");

        Grid2<float> y(bh, bw);
        for (auto& e : y.data) e = static_cast<float>(g(rng));
        const auto back = op.forward(op.adjoint(y));
        for (std::size_t j = 0; j < plane; ++j)
            v.require(back.data[j] == static_cast<float>(op.gram_diag().data[j]) * y.data[j], "Phi Phi^T y = diag y");
        ++gram_instances;
    }
    const double secs = seconds_since(t0);
    v.require(secs < 5.0, "runtime < 5 s");
    v.detail << "max adjoint rel err " << worst_adjoint << ", " << gram_instances << " dense Gram instances, "
             << secs << " s";
}

void data_consistency(Verdict& v) {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    double worst_inf = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const BlockGrid grid(1 + rng() % 4, 1 + rng() % 4);
        const std::size_t bh = 2 + rng() % 15, bw = 2 + rng() % 15;
        Mask mask = generate({bh * grid.rows, bw * grid.cols, 0.5f, rng()});
        // Open one random block at every position nobody observes.
        auto cov = coverage_per_position(mask, grid);
        for (std::size_t j = 0; j < cov.size(); ++j)
            if (cov.data[j] == 0) {
                const std::size_t b = rng() % grid.count();
                mask.at((b / grid.cols) * bh + j / bw, (b % grid.cols) * bw + j % bw) = 1;
            }
        const SensingOperator op(mask, grid);
        ReconState st;
        st.x = Cube(op.blocks(), bh, bw);
        for (auto& e : st.x.data) e = u(rng);
        Grid2<float> y(bh, bw);
        for (std::size_t j = 0; j < y.size(); ++j) y.data[j] = static_cast<float>(op.gram_diag().data[j]) * u(rng);
        op.projection_step(st, y, 0.0);
        const auto phiv = op.forward(st.v);
        for (std::size_t j = 0; j < y.size(); ++j)
            worst_inf = std::max(worst_inf, static_cast<double>(std::abs(y.data[j] - phiv.data[j])));
    }
    v.require(worst_inf <= 1e-5, "eta=0 consistency");

    // eta > 0: the fraction of the residual removed at position j is
    // gram_j / (gram_j + eta).
    std::normal_distribution<double> g;
    double worst_factor = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const BlockGrid grid(1 + rng() % 4, 1 + rng() % 4);
        const std::size_t bh = 2 + rng() % 9, bw = 2 + rng() % 9;
        const SensingOperator op(generate({bh * grid.rows, bw * grid.cols, 0.5f, rng()}), grid);
        CubeD x(op.blocks(), bh, bw);
        for (auto& e : x.data) e = g(rng);
        Grid2<double> y(bh, bw);
        for (auto& e : y.data) e = g(rng);
        const double eta = 0.01 + std::abs(g(rng));
        const auto before = op.forward(x);
        const auto after = op.forward(op.project(x, y, eta));
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double r0 = y.data[j] - before.data[j];
            const double r1 = y.data[j] - after.data[j];
            if (std::abs(r0) < 1e-3) continue;
            const double gj = op.gram_diag().data[j];
            worst_factor = std::max(worst_factor, std::abs((r0 - r1) / r0 - gj / (gj + eta)));
        }
    }
    v.require(worst_factor <= 1e-6, "contraction factor");
    v.detail << "max |y - Phi v|_inf " << worst_inf << " over 100 instances, max contraction factor error "
             << worst_factor;
}

void encoder_properties(Verdict& v) {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<float> coef(-2.0f, 2.0f);
    double worst_linear = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const BlockGrid grid(1 + rng() % 4, 1 + rng() % 4);
        const std::size_t h = grid.rows * (2 + rng() % 20), w = grid.cols * (2 + rng() % 20);
        const Mask mask = generate({h, w, 0.5f, rng()});
        const Image x1 = random_image(h, w, rng), x2 = random_image(h, w, rng);
        const float a = coef(rng), b = coef(rng);
        Image mix(h, w);
        for (std::size_t i = 0; i < mix.size(); ++i) mix.data[i] = a * x1.data[i] + b * x2.data[i];
        const auto y = encode(mix, mask, grid).data, y1 = encode(x1, mask, grid).data, y2 = encode(x2, mask, grid).data;
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double expect = double(a) * y1.data[j] + double(b) * y2.data[j];
            worst_linear = std::max(worst_linear, std::abs(y.data[j] - expect) / std::max(1.0, std::abs(expect)));
        }
        v.require(encode(x1, mask, grid).data == SensingOperator(mask, grid).forward(partition(x1, grid)),
                  "encode == forward");
    }
    v.require(worst_linear <= 1e-5, "linearity");

    const Image x = random_image(64, 64, rng);
    const Mask ones(64, 64, std::vector<std::uint8_t>(64 * 64, 1));
    const Measurement m = encode(x, ones, BlockGrid(1, 1));
    SolverConfig cfg;
    cfg.tv_weight = 0.0;
    const double p = psnr(x, decode(m, ones, cfg).image);
    v.require(p == kPsnrCapDb, "Cr=1 round trip");
    v.detail << "max linearity rel err " << worst_linear << ", Cr=1 PSNR " << p << " dB, encode == forward on 50 instances";
}

void fixture_regression(Verdict& v) {
    using namespace bmi::testing;
    const auto t0 = Clock::now();
    const Image truth = chart_crop(64, 256);
    const Mask mask = fixture_mask();
    const Measurement m = encode(truth, mask, kFixtureGrid);
    const double gap = psnr(truth, decode(m, mask, fixture_config(Algorithm::Gap)).image);
    const double admm = psnr(truth, decode(m, mask, fixture_config(Algorithm::Admm)).image);
    const double secs = seconds_since(t0);
    v.require(std::abs(gap - kFixtureGapPsnrDb) <= 0.2, "GAP within 0.2 dB of the dense prototype");
    v.require(std::abs(admm - gap) <= 0.5, "ADMM within 0.5 dB of GAP");
    v.require(secs < 30.0, "runtime < 30 s");
    v.detail << "GAP " << gap << " dB (prototype " << kFixtureGapPsnrDb << "), ADMM " << admm << " dB (prototype "
             << kFixtureAdmmPsnrDb << "), ADMM - GAP " << admm - gap << " dB, " << secs << " s";
}

void format_suite(Verdict& v) {
    std::mt19937_64 rng(404);
    int round_trips = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const BlockGrid grid(1 + rng() % 4, 1 + rng() % 4);
        const std::size_t h = 8 + rng() % 40, w = 8 + rng() % 40;
        EncodeOptions opt;
        opt.pad = true;
        opt.embed_mask = rng() % 2;
        const Mask mask = generate({h, w, 0.5f, rng()});
        const Measurement m = encode(random_image(h, w, rng), mask, grid, opt);
        const auto bytes = serialize_measurement(m);
        const std::size_t payload = m.block_height() * m.block_width();
        v.require(payload * grid.count() == m.padded_height() * m.padded_width(), "payload = pixels / N");
        const std::size_t mask_bytes = opt.embed_mask ? packed_size(h, w) : 0;
        v.require(bytes.size() == 40 + payload * 4 + mask_bytes, "40-byte header");
        v.require(serialize_measurement(parse_measurement(bytes)) == bytes, "BMIM round trip");
        const auto mb = serialize_mask(mask);
        v.require(serialize_mask(parse_mask(mb)) == mb && parse_mask(mb) == mask, "BMIK round trip");
        ++round_trips;
    }

    const auto good = serialize_measurement(encode(random_image(32, 32, rng), generate({32, 32, 0.5f, 5}),
                                                   BlockGrid(2, 2), {false, false, true}));
    const auto good_mask = serialize_mask(generate({20, 13, 0.5f, 6}));
    int structured = 0, accepted = 0, other = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        auto b = trial % 2 ? good : good_mask;
        const int flips = 1 + static_cast<int>(rng() % 6);
        for (int f = 0; f < flips; ++f) b[rng() % b.size()] = static_cast<std::uint8_t>(rng());
        if (rng() % 3 == 0) b.resize(rng() % (b.size() + 1));
        if (rng() % 10 == 0) b.insert(b.end(), rng() % 16, 0xAB);
        try {
            if (trial % 2)
                parse_measurement(b);
            else
                parse_mask(b);
            ++accepted;
        } catch (const Error&) {
            ++structured;
        } catch (...) {
            ++other;
        }
    }
    v.require(other == 0, "corruption yields only structured errors");
    v.detail << round_trips << " bit-identical BMIM/BMIK round trips; 5000 corrupted inputs: " << structured
             << " structured errors, " << accepted << " still valid, " << other << " other exceptions";
}

void bench_scaling(Verdict& v) {
    const std::vector<Resolution> res{{512, 512}, {4096, 4096}};
    const auto rows = bench_encode(res, BlockGrid(4, 4), 10);
    const double ratio = rows[1].mean_ms / rows[0].mean_ms;
    const double pixel_ratio = 64.0;
    v.require(ratio <= 3.0 * pixel_ratio, "time ratio <= 3x pixel ratio");
    v.detail << "512^2 " << rows[0].mean_ms << " ms, 4096^2 " << rows[1].mean_ms << " ms, time ratio " << ratio
             << " vs limit " << 3.0 * pixel_ratio;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
        {"operator algebra", operator_algebra},
        {"data consistency", data_consistency},
        {"encoder linearity, Cr=1 identity, encode == forward", encoder_properties},
        {"64x64 fixture regression (GAP vs prototype, ADMM vs GAP)", fixture_regression},
        {"format suite", format_suite},
        {"bench scaling 512^2 -> 4096^2", bench_scaling},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Verdict v;
        try {
            run(v);
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << "exception: " << e.what();
        }
        failed += v.pass ? 0 : 1;
        std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

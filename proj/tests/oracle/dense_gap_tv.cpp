// Naive dense reference for the 64x64 regression fixture.
//
// Phi is assembled as an explicit (h*w) x (N*h*w) matrix from pixel
// coordinates, the projection uses a pseudo-inverse of the dense Gram
// matrix, and TV uses its own array implementation in double. Nothing here
// goes through the library's operator, solvers, or metrics; only the
// fixture image and mask generator are shared inputs.
//
// Prints key=value lines; the values are frozen into the test suites.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "bmi/mask_gen.hpp"
#include "support/chart.hpp"

namespace {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Problem {
    int n_img = 64, rows = 2, cols = 2;
    int bh = 32, bw = 32;
    int blocks() const { return rows * cols; }
    int plane() const { return bh * bw; }
};

int column_of(const Problem& p, int r, int c) {
    const int block = (r / p.bh) * p.cols + c / p.bw;
    return block * p.plane() + (r % p.bh) * p.bw + c % p.bw;
}

MatrixXd dense_phi(const Problem& p, const bmi::Mask& mask) {
    MatrixXd phi = MatrixXd::Zero(p.plane(), p.blocks() * p.plane());
    for (int r = 0; r < p.n_img; ++r)
        for (int c = 0; c < p.n_img; ++c) {
            const int col = column_of(p, r, c);
            phi(col % p.plane(), col) = mask.at(r, c);
        }
    return phi;
}

VectorXd stack(const Problem& p, const bmi::Image& img) {
    VectorXd x(p.blocks() * p.plane());
    for (int r = 0; r < p.n_img; ++r)
        for (int c = 0; c < p.n_img; ++c) x(column_of(p, r, c)) = img.at(r, c);
    return x;
}

// Chambolle 2004 dual projection, tau = 1/8, p0 = 0.
ArrayXXd tv_reference(const ArrayXXd& f, double lambda, int iters) {
    const Eigen::Index h = f.rows(), w = f.cols();
    ArrayXXd px = ArrayXXd::Zero(h, w), py = ArrayXXd::Zero(h, w);
    auto div = [&](const ArrayXXd& ax, const ArrayXXd& ay) {
        ArrayXXd d = ArrayXXd::Zero(h, w);
        // x-direction: column index
        d.leftCols(w - 1) += ax.leftCols(w - 1);
        d.rightCols(w - 1) -= ax.leftCols(w - 1);
        d.topRows(h - 1) += ay.topRows(h - 1);
        d.bottomRows(h - 1) -= ay.topRows(h - 1);
        return d;
    };
    for (int it = 0; it < iters; ++it) {
        const ArrayXXd d = div(px, py) - f / lambda;
        ArrayXXd gx = ArrayXXd::Zero(h, w), gy = ArrayXXd::Zero(h, w);
        gx.leftCols(w - 1) = d.rightCols(w - 1) - d.leftCols(w - 1);
        gy.topRows(h - 1) = d.bottomRows(h - 1) - d.topRows(h - 1);
        const ArrayXXd norm = 1.0 + 0.125 * (gx.square() + gy.square()).sqrt();
        px = (px + 0.125 * gx) / norm;
        py = (py + 0.125 * gy) / norm;
    }
    return f - lambda * div(px, py);
}

VectorXd tv_cube(const Problem& p, const VectorXd& x, double lambda, int iters) {
    VectorXd out(x.size());
    for (int i = 0; i < p.blocks(); ++i) {
        ArrayXXd block(p.bh, p.bw);
        for (int a = 0; a < p.bh; ++a)
            for (int b = 0; b < p.bw; ++b) block(a, b) = x(i * p.plane() + a * p.bw + b);
        const ArrayXXd d = tv_reference(block, lambda, iters);
        for (int a = 0; a < p.bh; ++a)
            for (int b = 0; b < p.bw; ++b) out(i * p.plane() + a * p.bw + b) = d(a, b);
    }
    return out;
}

double psnr_of(const Problem& p, const VectorXd& x, const bmi::Image& truth) {
    double sse = 0.0;
    for (int r = 0; r < p.n_img; ++r)
        for (int c = 0; c < p.n_img; ++c) {
            const double v = std::clamp(x(column_of(p, r, c)), 0.0, 1.0);
            sse += (v - truth.at(r, c)) * (v - truth.at(r, c));
        }
    return 10.0 * std::log10(1.0 / (sse / (p.n_img * p.n_img)));
}

struct Run {
    double psnr;
    int iters;
};

Run gap(const Problem& p, const MatrixXd& phi, const VectorXd& y, const bmi::Image& truth) {
    const MatrixXd gram = phi * phi.transpose();
    const MatrixXd gram_pinv = gram.completeOrthogonalDecomposition().pseudoInverse();
    VectorXd scale(gram.rows());
    for (Eigen::Index j = 0; j < gram.rows(); ++j) scale(j) = 1.0 / std::max(gram(j, j), 1.0);
    VectorXd x = phi.transpose() * scale.asDiagonal() * y;
    int k = 1;
    for (; k <= 60; ++k) {
        const VectorXd v = x + phi.transpose() * (gram_pinv * (y - phi * x));
        const VectorXd next = tv_cube(p, v, 0.1, 5);
        const double rel = (next - x).norm() / x.norm();
        x = next;
        if (rel < 1e-5) break;
    }
    return {psnr_of(p, x, truth), std::min(k, 60)};
}

Run admm(const Problem& p, const MatrixXd& phi, const VectorXd& y, const bmi::Image& truth, double rho) {
    const MatrixXd gram = phi * phi.transpose();
    const MatrixXd reg = gram + rho * MatrixXd::Identity(gram.rows(), gram.cols());
    const auto solver = reg.ldlt();
    VectorXd scale(gram.rows());
    for (Eigen::Index j = 0; j < gram.rows(); ++j) scale(j) = 1.0 / std::max(gram(j, j), 1.0);
    VectorXd z = phi.transpose() * scale.asDiagonal() * y;
    VectorXd u = VectorXd::Zero(z.size());
    int k = 1;
    for (; k <= 60; ++k) {
        const VectorXd w = z - u;
        const VectorXd x = w + phi.transpose() * solver.solve(y - phi * w);
        const VectorXd next = tv_cube(p, x + u, 0.1, 5);
        u += x - next;
        const double rel = (next - z).norm() / z.norm();
        z = next;
        if (rel < 1e-5) break;
    }
    return {psnr_of(p, z, truth), std::min(k, 60)};
}

}  // namespace

int main() {
    const Problem p;
    const bmi::Image truth = bmi::testing::chart_crop(64, 256);
    const bmi::Mask mask = bmi::generate({64, 64, 0.5f, 42});
    const bmi::Mask wrong = bmi::generate({64, 64, 0.5f, 43});
    const MatrixXd phi = dense_phi(p, mask);
    const VectorXd y = phi * stack(p, truth);

    const Run g = gap(p, phi, y, truth);
    const Run a = admm(p, phi, y, truth, 0.01);
    const Run w = gap(p, dense_phi(p, wrong), y, truth);

    ArrayXXd impulse = ArrayXXd::Zero(8, 8);
    impulse(4, 4) = 1.0;
    const ArrayXXd smoothed = tv_reference(impulse, 0.1, 5);

    std::printf("gap_psnr_db=%.4f\ngap_iters=%d\n", g.psnr, g.iters);
    std::printf("admm_psnr_db=%.4f\nadmm_iters=%d\n", a.psnr, a.iters);
    std::printf("wrong_mask_psnr_db=%.4f\n", w.psnr);
    std::printf("tv_impulse_peak=%.6f\ntv_impulse_mass=%.9f\n", smoothed.maxCoeff(), smoothed.sum());
    return EXIT_SUCCESS;
}

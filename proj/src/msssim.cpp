#include "scene/msssim.hpp"

#include <cmath>
#include <vector>

namespace scene {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_window() {
    std::vector<double> g(kWindow);
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - (kWindow - 1) / 2.0;
        g[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
        sum += g[static_cast<std::size_t>(i)];
    }
    for (double& v : g) {
        v /= sum;
    }
    return g;
}

// Separable Gaussian blur with valid windows, channels folded into batch.
Var blur(Tape& t, Var x, Var row_win, Var col_win) {
    const TensorShape s = t.value(x).shape();
    Var flat = reshape(t, x, {s.n * s.c, 1, s.h, s.w});
    Var hpass = conv2d_any(t, flat, row_win, Var{}, 0, 0);
    Var vpass = conv2d_any(t, hpass, col_win, Var{}, 0, 0);
    const TensorShape fs = t.value(vpass).shape();
    return reshape(t, vpass, {s.n, s.c, fs.h, fs.w});
}

int feasible_scales(const TensorShape& s, int requested) {
    const std::int64_t m = std::min(s.h, s.w);
    int feasible = 0;
    for (int k = 1; k <= requested; ++k) {
        if (m >= 16ll << (k - 1)) {
            feasible = k;
        }
    }
    return feasible;
}

}  // namespace

Var ms_ssim(Tape& t, Var a, Var b, int scales, int* scales_used) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    ensure_same_shape(av, bv, "ms_ssim");
    if (scales < 1 || scales > 5) {
        throw ValueError("ms_ssim: scales must be in 1..5");
    }
    const int used = feasible_scales(av.shape(), scales);
    if (used == 0) {
        throw DimensionError("ms_ssim: input " + av.shape().str() +
                             " too small for even one scale (needs min dim >= 16)");
    }
    if (scales_used) {
        *scales_used = used;
    }

    const std::vector<double> win = gaussian_window();
    Var row_win = t.constant(Tensor({1, 1, 1, kWindow}, win));
    Var col_win = t.constant(Tensor({1, 1, kWindow, 1}, win));

    double weight_sum = 0.0;
    for (int j = 0; j < used; ++j) {
        weight_sum += kMsSsimWeights[static_cast<std::size_t>(j)];
    }

    Var result{};
    Var x = a;
    Var y = b;
    for (int j = 0; j < used; ++j) {
        Var mu1 = blur(t, x, row_win, col_win);
        Var mu2 = blur(t, y, row_win, col_win);
        Var mu1_sq = mul(t, mu1, mu1);
        Var mu2_sq = mul(t, mu2, mu2);
        Var mu1_mu2 = mul(t, mu1, mu2);
        Var sxx = sub(t, blur(t, mul(t, x, x), row_win, col_win), mu1_sq);
        Var syy = sub(t, blur(t, mul(t, y, y), row_win, col_win), mu2_sq);
        Var sxy = sub(t, blur(t, mul(t, x, y), row_win, col_win), mu1_mu2);

        // cs = (2 sxy + C2) / (sxx + syy + C2)
        Var cs_map = div(t, affine(t, sxy, 2.0, kC2), affine(t, add(t, sxx, syy), 1.0, kC2));

        Var term;
        if (j + 1 == used) {
            // luminance enters only at the coarsest scale
            Var l_map = div(t, affine(t, mu1_mu2, 2.0, kC1),
                            affine(t, add(t, mu1_sq, mu2_sq), 1.0, kC1));
            term = mean_all(t, mul(t, l_map, cs_map));
        } else {
            term = mean_all(t, cs_map);
        }
        // negative structure terms are clamped before the fractional power
        const double w = kMsSsimWeights[static_cast<std::size_t>(j)] / weight_sum;
        Var factor = pow_const(t, relu(t, term), w);
        result = result.valid() ? mul(t, result, factor) : factor;

        if (j + 1 < used) {
            x = avg_pool2(t, x);
            y = avg_pool2(t, y);
        }
    }
    return result;
}

double ms_ssim(const Tensor& a, const Tensor& b, int scales, int* scales_used) {
    Tape t;
    Var va = t.constant(a);
    Var vb = t.constant(b);
    return t.value(ms_ssim(t, va, vb, scales, scales_used)).item();
}

}  // namespace scene

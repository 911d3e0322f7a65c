#include "scene/proxy.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace scene {

namespace {

using Mat8 = Eigen::Matrix<double, 8, 8, Eigen::RowMajor>;

Mat8 dct_matrix() {
    Mat8 d;
    for (int k = 0; k < 8; ++k) {
        const double alpha = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
        for (int n = 0; n < 8; ++n) {
            d(k, n) = alpha * std::cos((2.0 * n + 1.0) * k * std::numbers::pi / 16.0);
        }
    }
    return d;
}

const Mat8& dct_m() {
    static const Mat8 d = dct_matrix();
    return d;
}

// Fold an index into [0, n) by symmetric reflection (mirrors include the
// edge sample). Converges for any n >= 1.
std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
    while (i < 0 || i >= n) {
        if (i < 0) {
            i = -1 - i;
        } else {
            i = 2 * n - 1 - i;
        }
    }
    return i;
}

Tensor transform_blocks(const Tensor& blocks, bool inverse) {
    const auto [nb, cb, h, w] = blocks.shape();
    if (h != 8 || w != 8) {
        throw DimensionError("dct8x8: expected 8x8 blocks, got " + blocks.shape().str());
    }
    const Mat8& d = dct_m();
    Tensor out(blocks.shape());
    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t c = 0; c < cb; ++c) {
            Eigen::Map<const Mat8> x(blocks.data().data() + blocks.offset(n, c, 0, 0));
            Eigen::Map<Mat8> y(out.data().data() + out.offset(n, c, 0, 0));
            if (inverse) {
                y.noalias() = d.transpose() * x * d;
            } else {
                y.noalias() = d * x * d.transpose();
            }
        }
    }
    return out;
}

Var record_transform(Tape& t, const char* op, Var x, bool inverse) {
    Tensor out = transform_blocks(t.value(x), inverse);
    const TensorShape shape = out.shape();
    return t.record(op, std::move(out), {x}, [x, inverse, shape](Tape::Ctx& ctx) {
        if (!ctx.needs(x)) {
            return;
        }
        Tensor gout(shape, std::vector<double>(ctx.out_adjoint.begin(), ctx.out_adjoint.end()));
        // the transform is orthonormal, so the adjoint is the inverse transform
        ctx.add_to(x, transform_blocks(gout, !inverse));
    });
}

}  // namespace

void ProxyConfig::validate() const {
    if (quality < 1 || quality > 100) {
        throw ValueError("proxy: quality must be in 1..100, got " + std::to_string(quality));
    }
    if (tau <= 0.0 || tau > 1.0) {
        throw ValueError("proxy: tau must be in (0, 1]");
    }
    for (double v : luma_quant_table) {
        if (!(v > 0.0)) {
            throw ValueError("proxy: quantization table entries must be positive");
        }
    }
}

std::array<double, 64> scaled_quant_table(const ProxyConfig& cfg) {
    cfg.validate();
    const double scale =
        cfg.quality < 50 ? 5000.0 / cfg.quality : 200.0 - 2.0 * cfg.quality;
    std::array<double, 64> out{};
    for (std::size_t i = 0; i < 64; ++i) {
        const double v = std::round(cfg.luma_quant_table[i] * scale / 100.0);
        out[i] = std::clamp(v, 1.0, 255.0);
    }
    return out;
}

Var blockify(Tape& t, Var image, BlockGrid* grid_out) {
    const Tensor& xv = t.value(image);
    const auto [nb, c, h, w] = xv.shape();
    const std::int64_t by = (h + 7) / 8;
    const std::int64_t bx = (w + 7) / 8;
    BlockGrid grid{xv.shape(), by, bx};
    if (grid_out) {
        *grid_out = grid;
    }

    Tensor out({nb, c * by * bx, 8, 8});
    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t cc = 0; cc < c; ++cc) {
            for (std::int64_t yb = 0; yb < by; ++yb) {
                for (std::int64_t xb = 0; xb < bx; ++xb) {
                    const std::int64_t oc = (cc * by + yb) * bx + xb;
                    for (std::int64_t r = 0; r < 8; ++r) {
                        const std::int64_t sy = reflect_index(yb * 8 + r, h);
                        for (std::int64_t s = 0; s < 8; ++s) {
                            const std::int64_t sx = reflect_index(xb * 8 + s, w);
                            out.at(n, oc, r, s) = xv.at(n, cc, sy, sx);
                        }
                    }
                }
            }
        }
    }
    return t.record("blockify", std::move(out), {image}, [image, grid](Tape::Ctx& ctx) {
        if (!ctx.needs(image)) {
            return;
        }
        const auto [nb, c, h, w] = grid.image_shape;
        const std::int64_t by = grid.blocks_y;
        const std::int64_t bx = grid.blocks_x;
        Tensor g(grid.image_shape);
        std::size_t idx = 0;
        for (std::int64_t n = 0; n < nb; ++n) {
            for (std::int64_t cc = 0; cc < c; ++cc) {
                for (std::int64_t yb = 0; yb < by; ++yb) {
                    for (std::int64_t xb = 0; xb < bx; ++xb) {
                        for (std::int64_t r = 0; r < 8; ++r) {
                            const std::int64_t sy = reflect_index(yb * 8 + r, h);
                            for (std::int64_t s = 0; s < 8; ++s) {
                                const std::int64_t sx = reflect_index(xb * 8 + s, w);
                                g.at(n, cc, sy, sx) += ctx.out_adjoint[idx++];
                            }
                        }
                    }
                }
            }
        }
        ctx.add_to(image, g);
    });
}

Var deblockify(Tape& t, Var blocks, const BlockGrid& grid) {
    const Tensor& bv = t.value(blocks);
    const auto [nb, c, h, w] = grid.image_shape;
    const std::int64_t by = grid.blocks_y;
    const std::int64_t bx = grid.blocks_x;
    if (bv.shape().c != c * by * bx || bv.shape().h != 8 || bv.shape().w != 8 ||
        bv.shape().n != nb) {
        throw DimensionError("deblockify: blocks " + bv.shape().str() + " do not match grid");
    }
    Tensor out(grid.image_shape);
    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t cc = 0; cc < c; ++cc) {
            for (std::int64_t y = 0; y < h; ++y) {
                for (std::int64_t x = 0; x < w; ++x) {
                    const std::int64_t oc = (cc * by + y / 8) * bx + x / 8;
                    out.at(n, cc, y, x) = bv.at(n, oc, y % 8, x % 8);
                }
            }
        }
    }
    return t.record("deblockify", std::move(out), {blocks}, [blocks, grid](Tape::Ctx& ctx) {
        if (!ctx.needs(blocks)) {
            return;
        }
        const auto [nb, c, h, w] = grid.image_shape;
        const std::int64_t by = grid.blocks_y;
        const std::int64_t bx = grid.blocks_x;
        Tensor g({nb, c * by * bx, 8, 8});
        std::size_t idx = 0;
        for (std::int64_t n = 0; n < nb; ++n) {
            for (std::int64_t cc = 0; cc < c; ++cc) {
                for (std::int64_t y = 0; y < h; ++y) {
                    for (std::int64_t x = 0; x < w; ++x) {
                        const std::int64_t oc = (cc * by + y / 8) * bx + x / 8;
                        g.at(n, oc, y % 8, x % 8) += ctx.out_adjoint[idx++];
                    }
                }
            }
        }
        ctx.add_to(blocks, g);
    });
}

Var dct8x8(Tape& t, Var blocks) { return record_transform(t, "dct8x8", blocks, false); }
Var idct8x8(Tape& t, Var blocks) { return record_transform(t, "idct8x8", blocks, true); }

namespace {

// Per-element quantization step for a block tensor: entry (r, s) of every
// 8x8 block uses table index r*8 + s.
double table_at(const std::array<double, 64>& table, std::int64_t flat_in_block) {
    return table[static_cast<std::size_t>(flat_in_block)];
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

Var quantize(Tape& t, Var coeff, const ProxyConfig& cfg) {
    const std::array<double, 64> table = scaled_quant_table(cfg);
    const Tensor& cv = t.value(coeff);
    if (cv.shape().h != 8 || cv.shape().w != 8) {
        throw DimensionError("quantize: expected 8x8 blocks, got " + cv.shape().str());
    }
    Tensor out(cv.shape());
    auto src = cv.data();
    auto dst = out.data();
    const RoundingMode mode = cfg.rounding;
    const double tau = cfg.tau;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double u = src[i] / table_at(table, static_cast<std::int64_t>(i % 64));
        if (mode == RoundingMode::straight_through) {
            dst[i] = std::round(u);
        } else {
            dst[i] = u - tau * std::sin(kTwoPi * u) / kTwoPi;
        }
    }
    return t.record("quantize", std::move(out), {coeff}, [coeff, table, mode, tau](Tape::Ctx& ctx) {
        if (!ctx.needs(coeff)) {
            return;
        }
        auto src = ctx.tape.value(coeff).data();
        std::vector<double> g(ctx.out_adjoint.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double step = table_at(table, static_cast<std::int64_t>(i % 64));
            if (mode == RoundingMode::straight_through) {
                g[i] = ctx.out_adjoint[i] / step;
            } else {
                const double u = src[i] / step;
                g[i] = ctx.out_adjoint[i] * (1.0 - tau * std::cos(kTwoPi * u)) / step;
            }
        }
        ctx.add_to(coeff, g);
    });
}

Var dequantize(Tape& t, Var q, const ProxyConfig& cfg) {
    const std::array<double, 64> table = scaled_quant_table(cfg);
    const Tensor& qv = t.value(q);
    if (qv.shape().h != 8 || qv.shape().w != 8) {
        throw DimensionError("dequantize: expected 8x8 blocks, got " + qv.shape().str());
    }
    Tensor out(qv.shape());
    auto src = qv.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = src[i] * table_at(table, static_cast<std::int64_t>(i % 64));
    }
    return t.record("dequantize", std::move(out), {q}, [q, table](Tape::Ctx& ctx) {
        if (!ctx.needs(q)) {
            return;
        }
        std::vector<double> g(ctx.out_adjoint.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = ctx.out_adjoint[i] * table_at(table, static_cast<std::int64_t>(i % 64));
        }
        ctx.add_to(q, g);
    });
}

Var bitrate_estimate(Tape& t, Var q) {
    const Tensor& qv = t.value(q);
    double acc = 0.0;
    for (double v : qv.data()) {
        acc += std::log2(1.0 + std::abs(v));
    }
    const std::int64_t count = qv.numel();
    const double value = acc / static_cast<double>(count);
    return t.record("bitrate_estimate", Tensor::scalar(value), {q}, [q, count](Tape::Ctx& ctx) {
        if (!ctx.needs(q)) {
            return;
        }
        auto src = ctx.tape.value(q).data();
        const double scale = ctx.out_adjoint[0] / (static_cast<double>(count) * std::numbers::ln2);
        std::vector<double> g(src.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = src[i] > 0.0 ? 1.0 : (src[i] < 0.0 ? -1.0 : 0.0);
            g[i] = scale * s / (1.0 + std::abs(src[i]));
        }
        ctx.add_to(q, g);
    });
}

ProxyVars proxy_forward(Tape& t, Var image, const ProxyConfig& cfg) {
    cfg.validate();
    Var scaled = affine(t, image, 255.0, -128.0);
    BlockGrid grid;
    Var blocks = blockify(t, scaled, &grid);
    Var coeff = dct8x8(t, blocks);
    Var q = quantize(t, coeff, cfg);
    Var deq = dequantize(t, q, cfg);
    Var rec = idct8x8(t, deq);
    Var img = deblockify(t, rec, grid);
    Var out = affine(t, img, 1.0 / 255.0, 128.0 / 255.0);
    return {out, q};
}

ProxyResult proxy_apply(const Tensor& image, const ProxyConfig& cfg) {
    Tape t;
    Var in = t.constant(image);
    ProxyVars v = proxy_forward(t, in, cfg);
    return {t.value(v.image), t.value(v.symbols)};
}

double bitrate_estimate(const Tensor& symbols) {
    Tape t;
    return t.value(bitrate_estimate(t, t.constant(symbols))).item();
}

}  // namespace scene

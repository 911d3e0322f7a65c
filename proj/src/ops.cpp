#include "scene/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace scene::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

void check_conv_args(const Tensor& x, const Tensor& w, std::span<const double> bias,
                     std::int64_t stride) {
    if (w.shape().c != x.shape().c) {
        throw DimensionError("conv2d: input channels " + std::to_string(x.shape().c) +
                             " != weight c_in " + std::to_string(w.shape().c));
    }
    if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != w.shape().n) {
        throw DimensionError("conv2d: bias length " + std::to_string(bias.size()) +
                             " != c_out " + std::to_string(w.shape().n));
    }
    if (stride < 1) {
        throw ValueError("conv2d: stride must be >= 1");
    }
}

std::int64_t out_dim(std::int64_t in, std::int64_t k, std::int64_t pad, std::int64_t stride) {
    const std::int64_t v = (in + 2 * pad - k) / stride + 1;
    if (v <= 0) {
        throw DimensionError("conv2d: empty output (input " + std::to_string(in) + ", kernel " +
                             std::to_string(k) + ", pad " + std::to_string(pad) + ")");
    }
    return v;
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, std::span<const double> bias,
                      std::int64_t pad_h, std::int64_t pad_w, std::int64_t stride) {
    check_conv_args(x, w, bias, stride);
    const auto [nb, ci, ih, iw] = x.shape();
    const std::int64_t co = w.shape().n;
    const std::int64_t kh = w.shape().h;
    const std::int64_t kw = w.shape().w;
    const std::int64_t oh = out_dim(ih, kh, pad_h, stride);
    const std::int64_t ow = out_dim(iw, kw, pad_w, stride);

    Tensor y({nb, co, oh, ow});

    if (kh == 1 && kw == 1 && stride == 1 && pad_h == 0 && pad_w == 0) {
        // (co, ci) x (ci, h*w) GEMM per sample
        MapConstMat wm(w.data().data(), co, ci);
        for (std::int64_t n = 0; n < nb; ++n) {
            MapConstMat xm(x.data().data() + x.offset(n, 0, 0, 0), ci, ih * iw);
            MapMat ym(y.data().data() + y.offset(n, 0, 0, 0), co, ih * iw);
            ym.noalias() = wm * xm;
        }
    } else {
        for (std::int64_t n = 0; n < nb; ++n) {
            for (std::int64_t c = 0; c < co; ++c) {
                for (std::int64_t cc = 0; cc < ci; ++cc) {
                    for (std::int64_t r = 0; r < kh; ++r) {
                        for (std::int64_t s = 0; s < kw; ++s) {
                            const double wv = w.at(c, cc, r, s);
                            if (wv == 0.0) {
                                continue;
                            }
                            for (std::int64_t y0 = 0; y0 < oh; ++y0) {
                                const std::int64_t sy = y0 * stride - pad_h + r;
                                if (sy < 0 || sy >= ih) {
                                    continue;
                                }
                                const double* xrow = x.data().data() + x.offset(n, cc, sy, 0);
                                double* yrow = y.data().data() + y.offset(n, c, y0, 0);
                                for (std::int64_t x0 = 0; x0 < ow; ++x0) {
                                    const std::int64_t sx = x0 * stride - pad_w + s;
                                    if (sx < 0 || sx >= iw) {
                                        continue;
                                    }
                                    yrow[x0] += wv * xrow[sx];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    if (!bias.empty()) {
        for (std::int64_t n = 0; n < nb; ++n) {
            for (std::int64_t c = 0; c < co; ++c) {
                double* yp = y.data().data() + y.offset(n, c, 0, 0);
                const double b = bias[static_cast<std::size_t>(c)];
                for (std::int64_t i = 0; i < oh * ow; ++i) {
                    yp[i] += b;
                }
            }
        }
    }
    return y;
}

Tensor conv2d_backward_input(const Tensor& gout, const Tensor& w, const TensorShape& in_shape,
                             std::int64_t pad_h, std::int64_t pad_w, std::int64_t stride) {
    const auto [nb, co, oh, ow] = gout.shape();
    const std::int64_t ci = w.shape().c;
    const std::int64_t kh = w.shape().h;
    const std::int64_t kw = w.shape().w;
    Tensor gx(in_shape);

    if (kh == 1 && kw == 1 && stride == 1 && pad_h == 0 && pad_w == 0) {
        MapConstMat wm(w.data().data(), co, ci);
        for (std::int64_t n = 0; n < nb; ++n) {
            MapConstMat gm(gout.data().data() + gout.offset(n, 0, 0, 0), co, oh * ow);
            MapMat gxm(gx.data().data() + gx.offset(n, 0, 0, 0), ci, oh * ow);
            gxm.noalias() = wm.transpose() * gm;
        }
        return gx;
    }

    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t c = 0; c < co; ++c) {
            for (std::int64_t cc = 0; cc < ci; ++cc) {
                for (std::int64_t r = 0; r < kh; ++r) {
                    for (std::int64_t s = 0; s < kw; ++s) {
                        const double wv = w.at(c, cc, r, s);
                        if (wv == 0.0) {
                            continue;
                        }
                        for (std::int64_t y0 = 0; y0 < oh; ++y0) {
                            const std::int64_t sy = y0 * stride - pad_h + r;
                            if (sy < 0 || sy >= in_shape.h) {
                                continue;
                            }
                            const double* grow = gout.data().data() + gout.offset(n, c, y0, 0);
                            double* gxrow = gx.data().data() + gx.offset(n, cc, sy, 0);
                            for (std::int64_t x0 = 0; x0 < ow; ++x0) {
                                const std::int64_t sx = x0 * stride - pad_w + s;
                                if (sx < 0 || sx >= in_shape.w) {
                                    continue;
                                }
                                gxrow[sx] += wv * grow[x0];
                            }
                        }
                    }
                }
            }
        }
    }
    return gx;
}

Tensor conv2d_backward_weight(const Tensor& x, const Tensor& gout, const TensorShape& w_shape,
                              std::int64_t pad_h, std::int64_t pad_w, std::int64_t stride) {
    const auto [nb, co, oh, ow] = gout.shape();
    const std::int64_t ci = w_shape.c;
    const std::int64_t kh = w_shape.h;
    const std::int64_t kw = w_shape.w;
    Tensor gw(w_shape);

    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t c = 0; c < co; ++c) {
            for (std::int64_t cc = 0; cc < ci; ++cc) {
                for (std::int64_t r = 0; r < kh; ++r) {
                    for (std::int64_t s = 0; s < kw; ++s) {
                        double acc = 0.0;
                        for (std::int64_t y0 = 0; y0 < oh; ++y0) {
                            const std::int64_t sy = y0 * stride - pad_h + r;
                            if (sy < 0 || sy >= x.shape().h) {
                                continue;
                            }
                            const double* xrow = x.data().data() + x.offset(n, cc, sy, 0);
                            const double* grow = gout.data().data() + gout.offset(n, c, y0, 0);
                            for (std::int64_t x0 = 0; x0 < ow; ++x0) {
                                const std::int64_t sx = x0 * stride - pad_w + s;
                                if (sx < 0 || sx >= x.shape().w) {
                                    continue;
                                }
                                acc += xrow[sx] * grow[x0];
                            }
                        }
                        gw.at(c, cc, r, s) += acc;
                    }
                }
            }
        }
    }
    return gw;
}

std::vector<double> conv2d_backward_bias(const Tensor& gout) {
    const auto [nb, co, oh, ow] = gout.shape();
    std::vector<double> gb(static_cast<std::size_t>(co), 0.0);
    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t c = 0; c < co; ++c) {
            const double* p = gout.data().data() + gout.offset(n, c, 0, 0);
            double acc = 0.0;
            for (std::int64_t i = 0; i < oh * ow; ++i) {
                acc += p[i];
            }
            gb[static_cast<std::size_t>(c)] += acc;
        }
    }
    return gb;
}

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    auto src = x.data();
    auto dst = y.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = src[i] > 0.0 ? src[i] : 0.0;
    }
    return y;
}

Tensor pixel_unshuffle(const Tensor& x, std::int64_t factor) {
    if (factor < 1) {
        throw ValueError("pixel_unshuffle: factor must be >= 1");
    }
    const auto [nb, c, h, w] = x.shape();
    if (h % factor != 0 || w % factor != 0) {
        throw DimensionError("pixel_unshuffle: spatial dims " + x.shape().str() +
                             " not divisible by factor " + std::to_string(factor));
    }
    const std::int64_t f = factor;
    Tensor y({nb, c * f * f, h / f, w / f});
    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t cc = 0; cc < c; ++cc) {
            for (std::int64_t dy = 0; dy < f; ++dy) {
                for (std::int64_t dx = 0; dx < f; ++dx) {
                    const std::int64_t oc = cc * f * f + dy * f + dx;
                    for (std::int64_t yy = 0; yy < h / f; ++yy) {
                        for (std::int64_t xx = 0; xx < w / f; ++xx) {
                            y.at(n, oc, yy, xx) = x.at(n, cc, yy * f + dy, xx * f + dx);
                        }
                    }
                }
            }
        }
    }
    return y;
}

Tensor pixel_shuffle(const Tensor& x, std::int64_t factor) {
    if (factor < 1) {
        throw ValueError("pixel_shuffle: factor must be >= 1");
    }
    const auto [nb, c, h, w] = x.shape();
    const std::int64_t f = factor;
    if (c % (f * f) != 0) {
        throw DimensionError("pixel_shuffle: channels " + std::to_string(c) +
                             " not divisible by factor^2 = " + std::to_string(f * f));
    }
    Tensor y({nb, c / (f * f), h * f, w * f});
    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t oc = 0; oc < c / (f * f); ++oc) {
            for (std::int64_t dy = 0; dy < f; ++dy) {
                for (std::int64_t dx = 0; dx < f; ++dx) {
                    const std::int64_t ic = oc * f * f + dy * f + dx;
                    for (std::int64_t yy = 0; yy < h; ++yy) {
                        for (std::int64_t xx = 0; xx < w; ++xx) {
                            y.at(n, oc, yy * f + dy, xx * f + dx) = x.at(n, ic, yy, xx);
                        }
                    }
                }
            }
        }
    }
    return y;
}

Tensor global_avg_pool(const Tensor& x) {
    const auto [nb, c, h, w] = x.shape();
    Tensor y({nb, c, 1, 1});
    const double inv = 1.0 / static_cast<double>(h * w);
    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t cc = 0; cc < c; ++cc) {
            const double* p = x.data().data() + x.offset(n, cc, 0, 0);
            double acc = 0.0;
            for (std::int64_t i = 0; i < h * w; ++i) {
                acc += p[i];
            }
            y.at(n, cc, 0, 0) = acc * inv;
        }
    }
    return y;
}

Tensor avg_pool2(const Tensor& x) {
    const auto [nb, c, h, w] = x.shape();
    const std::int64_t oh = h / 2;
    const std::int64_t ow = w / 2;
    if (oh == 0 || ow == 0) {
        throw DimensionError("avg_pool2: input too small " + x.shape().str());
    }
    Tensor y({nb, c, oh, ow});
    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t cc = 0; cc < c; ++cc) {
            for (std::int64_t yy = 0; yy < oh; ++yy) {
                for (std::int64_t xx = 0; xx < ow; ++xx) {
                    y.at(n, cc, yy, xx) = 0.25 * (x.at(n, cc, 2 * yy, 2 * xx) +
                                                  x.at(n, cc, 2 * yy, 2 * xx + 1) +
                                                  x.at(n, cc, 2 * yy + 1, 2 * xx) +
                                                  x.at(n, cc, 2 * yy + 1, 2 * xx + 1));
                }
            }
        }
    }
    return y;
}

double l1_loss(const Tensor& a, const Tensor& b) {
    ensure_same_shape(a, b, "l1_loss");
    auto pa = a.data();
    auto pb = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        acc += std::abs(pa[i] - pb[i]);
    }
    return acc / static_cast<double>(pa.size());
}

Tensor clamp01(const Tensor& x) {
    Tensor y(x.shape());
    auto src = x.data();
    auto dst = y.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = std::clamp(src[i], 0.0, 1.0);
    }
    return y;
}

double mse(const Tensor& a, const Tensor& b) {
    ensure_same_shape(a, b, "mse");
    auto pa = a.data();
    auto pb = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = pa[i] - pb[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pa.size());
}

double psnr(const Tensor& a, const Tensor& b) {
    const double m = mse(a, b);
    if (m == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -10.0 * std::log10(m);
}

}  // namespace scene::ops

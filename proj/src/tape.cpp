#include "scene/tape.hpp"

#include <cmath>

#include "scene/ops.hpp"

namespace scene {

Var Tape::leaf(Tensor value) {
    ensure_finite(value, "leaf");
    Node n;
    n.leaf_grad = Tensor(value.shape(), 0.0);
    n.value = std::move(value);
    n.needs_grad = true;
    n.tracked_leaf = true;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int64_t>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) {
    ensure_finite(value, "constant");
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int64_t>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || v.id >= static_cast<std::int64_t>(nodes_.size())) {
        throw ValueError("var is not recorded on this tape");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const {
    const Node& n = node(v);
    if (!n.tracked_leaf) {
        throw ValueError("grad() is only kept for tracked leaves");
    }
    return n.leaf_grad;
}

bool Tape::requires_grad(Var v) const { return node(v).needs_grad; }

Var Tape::record(const char* op, Tensor out, std::vector<Var> inputs, BackwardFn fn) {
    bool needs_grad = false;
    for (Var in : inputs) {
        needs_grad = needs_grad || node(in).needs_grad;
    }
    if (!out.all_finite()) {
        throw ValueError(std::string(op) + " produced a non-finite value");
    }
    Node n;
    n.value = std::move(out);
    n.inputs = std::move(inputs);
    n.fn = std::move(fn);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int64_t>(nodes_.size()) - 1};
}

bool Tape::Ctx::needs(Var input) const { return tape.node(input).needs_grad; }

void Tape::Ctx::add_to(Var input, std::span<const double> g) {
    Node& n = tape.nodes_[static_cast<std::size_t>(input.id)];
    if (!n.needs_grad) {
        return;
    }
    auto& s = tape.scratch_[static_cast<std::size_t>(input.id)];
    if (s.empty()) {
        s.assign(static_cast<std::size_t>(n.value.numel()), 0.0);
    }
    if (g.size() != s.size()) {
        throw DimensionError("adjoint size mismatch in backward");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        s[i] += g[i];
    }
}

void Tape::backward(Var loss) {
    const Node& ln = node(loss);
    if (!ln.value.is_scalar()) {
        throw DimensionError("backward: loss must be a scalar, got " + ln.value.shape().str());
    }
    scratch_.assign(nodes_.size(), {});
    scratch_[static_cast<std::size_t>(loss.id)] = {1.0};

    for (std::int64_t i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        auto& adj = scratch_[static_cast<std::size_t>(i)];
        if (adj.empty() || !n.needs_grad) {
            continue;
        }
        if (n.fn) {
            Ctx ctx(*this, adj);
            n.fn(ctx);
        }
    }

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        Node& n = nodes_[i];
        if (n.tracked_leaf && !scratch_[i].empty()) {
            auto dst = n.leaf_grad.data();
            const auto& src = scratch_[i];
            for (std::size_t k = 0; k < dst.size(); ++k) {
                dst[k] += src[k];
            }
        }
    }
}

void Tape::zero_grad() {
    for (Node& n : nodes_) {
        if (n.tracked_leaf) {
            n.leaf_grad = Tensor(n.value.shape(), 0.0);
        }
    }
}

// ---- taped operations ------------------------------------------------------

Var conv2d(Tape& t, Var x, Var w, Var b) {
    const auto& ws = t.value(w).shape();
    if (ws.h != ws.w || (ws.h != 1 && ws.h != 3)) {
        throw DimensionError("conv2d: kernel must be square 1x1 or 3x3, got " + ws.str());
    }
    return conv2d_any(t, x, w, b, ws.h / 2, ws.w / 2);
}

Var conv2d_any(Tape& t, Var x, Var w, Var b, std::int64_t pad_h, std::int64_t pad_w) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    std::span<const double> bias;
    if (b.valid()) {
        const Tensor& bv = t.value(b);
        if (bv.shape().c != wv.shape().n || bv.shape().n != 1 || bv.shape().h != 1 ||
            bv.shape().w != 1) {
            throw DimensionError("conv2d: bias must be (1, c_out, 1, 1)");
        }
        bias = bv.data();
    }
    Tensor out = ops::conv2d_forward(xv, wv, bias, pad_h, pad_w);
    std::vector<Var> inputs{x, w};
    if (b.valid()) {
        inputs.push_back(b);
    }
    return t.record("conv2d", std::move(out), std::move(inputs),
                    [x, w, b, pad_h, pad_w](Tape::Ctx& ctx) {
                        const Tensor& xv = ctx.tape.value(x);
                        const Tensor& wv = ctx.tape.value(w);
                        Tensor g(xv.shape());  // reconstruct gout tensor view
                        // out shape equals adjoint length; rebuild via shapes
                        const auto os = TensorShape{
                            xv.shape().n, wv.shape().n,
                            (xv.shape().h + 2 * pad_h - wv.shape().h) + 1,
                            (xv.shape().w + 2 * pad_w - wv.shape().w) + 1};
                        Tensor gout(os, std::vector<double>(ctx.out_adjoint.begin(),
                                                            ctx.out_adjoint.end()));
                        if (ctx.needs(x)) {
                            ctx.add_to(x, ops::conv2d_backward_input(gout, wv, xv.shape(), pad_h,
                                                                     pad_w));
                        }
                        if (ctx.needs(w)) {
                            ctx.add_to(w, ops::conv2d_backward_weight(xv, gout, wv.shape(), pad_h,
                                                                      pad_w));
                        }
                        if (b.valid() && ctx.needs(b)) {
                            ctx.add_to(b, ops::conv2d_backward_bias(gout));
                        }
                    });
}

Var relu(Tape& t, Var x) {
    Tensor out = ops::relu(t.value(x));
    return t.record("relu", std::move(out), {x}, [x](Tape::Ctx& ctx) {
        const Tensor& xv = ctx.tape.value(x);
        std::vector<double> g(ctx.out_adjoint.size());
        auto xd = xv.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = xd[i] > 0.0 ? ctx.out_adjoint[i] : 0.0;
        }
        ctx.add_to(x, g);
    });
}

Var pixel_unshuffle(Tape& t, Var x, std::int64_t factor) {
    Tensor out = ops::pixel_unshuffle(t.value(x), factor);
    TensorShape out_shape = out.shape();
    return t.record("pixel_unshuffle", std::move(out), {x},
                    [x, factor, out_shape](Tape::Ctx& ctx) {
                        if (!ctx.needs(x)) {
                            return;
                        }
                        Tensor gout(out_shape, std::vector<double>(ctx.out_adjoint.begin(),
                                                                   ctx.out_adjoint.end()));
                        ctx.add_to(x, ops::pixel_shuffle(gout, factor));
                    });
}

Var pixel_shuffle(Tape& t, Var x, std::int64_t factor) {
    Tensor out = ops::pixel_shuffle(t.value(x), factor);
    TensorShape out_shape = out.shape();
    return t.record("pixel_shuffle", std::move(out), {x},
                    [x, factor, out_shape](Tape::Ctx& ctx) {
                        if (!ctx.needs(x)) {
                            return;
                        }
                        Tensor gout(out_shape, std::vector<double>(ctx.out_adjoint.begin(),
                                                                   ctx.out_adjoint.end()));
                        ctx.add_to(x, ops::pixel_unshuffle(gout, factor));
                    });
}

Var global_avg_pool(Tape& t, Var x) {
    const TensorShape in = t.value(x).shape();
    Tensor out = ops::global_avg_pool(t.value(x));
    return t.record("global_avg_pool", std::move(out), {x}, [x, in](Tape::Ctx& ctx) {
        if (!ctx.needs(x)) {
            return;
        }
        const double inv = 1.0 / static_cast<double>(in.h * in.w);
        Tensor g(in);
        auto gd = g.data();
        for (std::int64_t n = 0; n < in.n; ++n) {
            for (std::int64_t c = 0; c < in.c; ++c) {
                const double v = ctx.out_adjoint[static_cast<std::size_t>(n * in.c + c)] * inv;
                double* p = gd.data() + g.offset(n, c, 0, 0);
                for (std::int64_t i = 0; i < in.h * in.w; ++i) {
                    p[i] = v;
                }
            }
        }
        ctx.add_to(x, g);
    });
}

Var avg_pool2(Tape& t, Var x) {
    const TensorShape in = t.value(x).shape();
    Tensor out = ops::avg_pool2(t.value(x));
    const TensorShape os = out.shape();
    return t.record("avg_pool2", std::move(out), {x}, [x, in, os](Tape::Ctx& ctx) {
        if (!ctx.needs(x)) {
            return;
        }
        Tensor g(in);
        for (std::int64_t n = 0; n < os.n; ++n) {
            for (std::int64_t c = 0; c < os.c; ++c) {
                for (std::int64_t y = 0; y < os.h; ++y) {
                    for (std::int64_t xx = 0; xx < os.w; ++xx) {
                        const std::size_t oi = static_cast<std::size_t>(
                            ((n * os.c + c) * os.h + y) * os.w + xx);
                        const double v = 0.25 * ctx.out_adjoint[oi];
                        g.at(n, c, 2 * y, 2 * xx) = v;
                        g.at(n, c, 2 * y, 2 * xx + 1) = v;
                        g.at(n, c, 2 * y + 1, 2 * xx) = v;
                        g.at(n, c, 2 * y + 1, 2 * xx + 1) = v;
                    }
                }
            }
        }
        ctx.add_to(x, g);
    });
}

namespace {

Var binary_elementwise(Tape& t, const char* op, Var a, Var b,
                       std::function<double(double, double)> f,
                       std::function<double(double, double, double)> dfa,
                       std::function<double(double, double, double)> dfb) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    ensure_same_shape(av, bv, op);
    Tensor out(av.shape());
    auto od = out.data();
    auto ad = av.data();
    auto bd = bv.data();
    for (std::size_t i = 0; i < od.size(); ++i) {
        od[i] = f(ad[i], bd[i]);
    }
    return t.record(op, std::move(out), {a, b},
                    [a, b, dfa = std::move(dfa), dfb = std::move(dfb)](Tape::Ctx& ctx) {
                        const Tensor& av = ctx.tape.value(a);
                        const Tensor& bv = ctx.tape.value(b);
                        auto ad = av.data();
                        auto bd = bv.data();
                        if (ctx.needs(a)) {
                            std::vector<double> g(ctx.out_adjoint.size());
                            for (std::size_t i = 0; i < g.size(); ++i) {
                                g[i] = dfa(ad[i], bd[i], ctx.out_adjoint[i]);
                            }
                            ctx.add_to(a, g);
                        }
                        if (ctx.needs(b)) {
                            std::vector<double> g(ctx.out_adjoint.size());
                            for (std::size_t i = 0; i < g.size(); ++i) {
                                g[i] = dfb(ad[i], bd[i], ctx.out_adjoint[i]);
                            }
                            ctx.add_to(b, g);
                        }
                    });
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
    return binary_elementwise(
        t, "add", a, b, [](double x, double y) { return x + y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return g; });
}

Var sub(Tape& t, Var a, Var b) {
    return binary_elementwise(
        t, "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return -g; });
}

Var mul(Tape& t, Var a, Var b) {
    return binary_elementwise(
        t, "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y, double g) { return g * y; },
        [](double x, double, double g) { return g * x; });
}

Var div(Tape& t, Var a, Var b) {
    return binary_elementwise(
        t, "div", a, b, [](double x, double y) { return x / y; },
        [](double, double y, double g) { return g / y; },
        [](double x, double y, double g) { return -g * x / (y * y); });
}

Var affine(Tape& t, Var x, double scale, double shift) {
    const Tensor& xv = t.value(x);
    Tensor out(xv.shape());
    auto od = out.data();
    auto xd = xv.data();
    for (std::size_t i = 0; i < od.size(); ++i) {
        od[i] = xd[i] * scale + shift;
    }
    return t.record("affine", std::move(out), {x}, [x, scale](Tape::Ctx& ctx) {
        if (!ctx.needs(x)) {
            return;
        }
        std::vector<double> g(ctx.out_adjoint.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = scale * ctx.out_adjoint[i];
        }
        ctx.add_to(x, g);
    });
}

Var pow_const(Tape& t, Var x, double e) {
    const Tensor& xv = t.value(x);
    Tensor out(xv.shape());
    auto od = out.data();
    auto xd = xv.data();
    for (std::size_t i = 0; i < od.size(); ++i) {
        od[i] = std::pow(xd[i], e);
    }
    return t.record("pow_const", std::move(out), {x}, [x, e](Tape::Ctx& ctx) {
        if (!ctx.needs(x)) {
            return;
        }
        auto xd = ctx.tape.value(x).data();
        std::vector<double> g(ctx.out_adjoint.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = e * std::pow(xd[i], e - 1.0) * ctx.out_adjoint[i];
        }
        ctx.add_to(x, g);
    });
}

Var sum_all(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    double acc = 0.0;
    for (double v : xv.data()) {
        acc += v;
    }
    const std::int64_t count = xv.numel();
    return t.record("sum_all", Tensor::scalar(acc), {x}, [x, count](Tape::Ctx& ctx) {
        if (!ctx.needs(x)) {
            return;
        }
        std::vector<double> g(static_cast<std::size_t>(count), ctx.out_adjoint[0]);
        ctx.add_to(x, g);
    });
}

Var mean_all(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    double acc = 0.0;
    for (double v : xv.data()) {
        acc += v;
    }
    const std::int64_t count = xv.numel();
    return t.record("mean_all", Tensor::scalar(acc / static_cast<double>(count)), {x},
                    [x, count](Tape::Ctx& ctx) {
                        if (!ctx.needs(x)) {
                            return;
                        }
                        std::vector<double> g(static_cast<std::size_t>(count),
                                              ctx.out_adjoint[0] / static_cast<double>(count));
                        ctx.add_to(x, g);
                    });
}

Var l1_loss(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    ensure_same_shape(av, bv, "l1_loss");
    const double v = ops::l1_loss(av, bv);
    const std::int64_t count = av.numel();
    return t.record("l1_loss", Tensor::scalar(v), {a, b}, [a, b, count](Tape::Ctx& ctx) {
        auto ad = ctx.tape.value(a).data();
        auto bd = ctx.tape.value(b).data();
        const double scale = ctx.out_adjoint[0] / static_cast<double>(count);
        // sign(a - b), 0 at ties
        if (ctx.needs(a)) {
            std::vector<double> g(ad.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double d = ad[i] - bd[i];
                g[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
            }
            ctx.add_to(a, g);
        }
        if (ctx.needs(b)) {
            std::vector<double> g(ad.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double d = ad[i] - bd[i];
                g[i] = d > 0.0 ? -scale : (d < 0.0 ? scale : 0.0);
            }
            ctx.add_to(b, g);
        }
    });
}

Var reshape(Tape& t, Var x, TensorShape shape) {
    const Tensor& xv = t.value(x);
    if (shape.numel() != xv.numel()) {
        throw DimensionError("reshape: element count mismatch " + xv.shape().str() + " -> " +
                             shape.str());
    }
    Tensor out(shape, std::vector<double>(xv.data().begin(), xv.data().end()));
    return t.record("reshape", std::move(out), {x}, [x](Tape::Ctx& ctx) {
        if (ctx.needs(x)) {
            ctx.add_to(x, ctx.out_adjoint);
        }
    });
}

Var slice_channels(Tape& t, Var x, std::int64_t c0, std::int64_t c1) {
    const Tensor& xv = t.value(x);
    const auto [nb, c, h, w] = xv.shape();
    if (c0 < 0 || c1 > c || c0 >= c1) {
        throw DimensionError("slice_channels: bad range [" + std::to_string(c0) + ", " +
                             std::to_string(c1) + ") for " + std::to_string(c) + " channels");
    }
    const TensorShape in = xv.shape();
    Tensor out({nb, c1 - c0, h, w});
    for (std::int64_t n = 0; n < nb; ++n) {
        for (std::int64_t cc = c0; cc < c1; ++cc) {
            const double* src = xv.data().data() + xv.offset(n, cc, 0, 0);
            double* dst = out.data().data() + out.offset(n, cc - c0, 0, 0);
            std::copy(src, src + h * w, dst);
        }
    }
    return t.record("slice_channels", std::move(out), {x}, [x, c0, c1, in](Tape::Ctx& ctx) {
        if (!ctx.needs(x)) {
            return;
        }
        Tensor g(in);
        const std::int64_t plane = in.h * in.w;
        for (std::int64_t n = 0; n < in.n; ++n) {
            for (std::int64_t cc = c0; cc < c1; ++cc) {
                const std::size_t src =
                    static_cast<std::size_t>((n * (c1 - c0) + (cc - c0)) * plane);
                double* dst = g.data().data() + g.offset(n, cc, 0, 0);
                for (std::int64_t i = 0; i < plane; ++i) {
                    dst[i] = ctx.out_adjoint[src + static_cast<std::size_t>(i)];
                }
            }
        }
        ctx.add_to(x, g);
    });
}

}  // namespace scene

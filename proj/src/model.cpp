#include "scene/model.hpp"

#include <cmath>

#include "scene/adamw.hpp"
#include "scene/ops.hpp"
#include "scene/rng.hpp"
#include "scene/serial.hpp"

namespace scene {

void ModelConfig::validate() const {
    if (unshuffle_factor < 1) {
        throw ValueError("model: unshuffle_factor must be >= 1");
    }
    if (num_base_kernels < 1) {
        throw ValueError("model: num_base_kernels must be >= 1");
    }
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw ValueError("model: kernel_size must be odd and positive");
    }
    if (block_channels < 1 || convs_per_block < 1 || control_hidden_dim < 1 || embed_dim < 1 ||
        input_channels < 1) {
        throw ValueError("model: all dimensions must be positive");
    }
}

namespace {

Tensor kaiming_uniform(TensorShape shape, std::int64_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor t(shape);
    for (auto& v : t.data()) {
        v = rng.uniform(-bound, bound);
    }
    return t;
}

}  // namespace

SceneParams SceneParams::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(mix_seeds(seed, 0x5C3E));
    const std::int64_t k = cfg.kernel_size;
    const std::int64_t c = cfg.block_channels;
    const std::int64_t e = cfg.num_base_kernels;
    const std::int64_t unshuffled = cfg.input_channels * cfg.unshuffle_factor * cfg.unshuffle_factor;

    SceneParams p;
    p.config = cfg;
    p.stem_w = kaiming_uniform({c, unshuffled, k, k}, unshuffled * k * k, rng);
    p.stem_b = Tensor({1, c, 1, 1}, 0.0);

    auto make_block = [&] {
        AssembledBlockParams b;
        for (std::int64_t l = 0; l < cfg.convs_per_block; ++l) {
            AssembledLayerParams layer;
            for (std::int64_t i = 0; i < e; ++i) {
                layer.bases.push_back(kaiming_uniform({c, c, k, k}, c * k * k, rng));
            }
            layer.bias = Tensor({1, c, 1, 1}, 0.0);
            b.layers.push_back(std::move(layer));
        }
        return b;
    };
    auto make_control = [&](std::int64_t source) {
        ControlModuleParams ctl;
        ctl.w1 = kaiming_uniform({cfg.control_hidden_dim, source, 1, 1}, source, rng);
        ctl.b1 = Tensor({1, cfg.control_hidden_dim, 1, 1}, 0.0);
        ctl.w2 = Tensor({cfg.coeff_dim(), cfg.control_hidden_dim, 1, 1}, 0.0);
        ctl.b2 = Tensor({1, cfg.coeff_dim(), 1, 1}, 1.0 / static_cast<double>(e));
        return ctl;
    };

    p.block1 = make_block();
    p.control1 = make_control(cfg.embed_dim);
    p.block2 = make_block();
    p.control2 = make_control(c);
    p.tail_w = Tensor({unshuffled, c, k, k}, 0.0);
    p.tail_b = Tensor({1, unshuffled, 1, 1}, 0.0);
    return p;
}

void SceneParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("stem.w", stem_w);
    fn("stem.b", stem_b);
    auto walk_block = [&](const std::string& name, AssembledBlockParams& b) {
        for (std::size_t l = 0; l < b.layers.size(); ++l) {
            for (std::size_t i = 0; i < b.layers[l].bases.size(); ++i) {
                fn(name + ".layer" + std::to_string(l) + ".base" + std::to_string(i),
                   b.layers[l].bases[i]);
            }
            fn(name + ".layer" + std::to_string(l) + ".bias", b.layers[l].bias);
        }
    };
    auto walk_control = [&](const std::string& name, ControlModuleParams& ctl) {
        fn(name + ".w1", ctl.w1);
        fn(name + ".b1", ctl.b1);
        fn(name + ".w2", ctl.w2);
        fn(name + ".b2", ctl.b2);
    };
    walk_block("block1", block1);
    walk_control("control1", control1);
    walk_block("block2", block2);
    walk_control("control2", control2);
    fn("tail.w", tail_w);
    fn("tail.b", tail_b);
}

std::vector<ParamRef> SceneParams::param_refs() {
    std::vector<ParamRef> refs;
    for_each([&](const std::string& name, Tensor& t) { refs.push_back({name, &t}); });
    return refs;
}

std::int64_t SceneParams::actual_param_count() {
    std::int64_t n = 0;
    for_each([&](const std::string&, Tensor& t) { n += t.numel(); });
    return n;
}

std::int64_t param_count(const ModelConfig& cfg) {
    cfg.validate();
    const std::int64_t k2 = cfg.kernel_size * cfg.kernel_size;
    const std::int64_t c = cfg.block_channels;
    const std::int64_t e = cfg.num_base_kernels;
    const std::int64_t unshuffled = cfg.input_channels * cfg.unshuffle_factor * cfg.unshuffle_factor;
    const std::int64_t hid = cfg.control_hidden_dim;
    const std::int64_t coeff = cfg.coeff_dim();

    const std::int64_t stem = c * unshuffled * k2 + c;
    const std::int64_t block = cfg.convs_per_block * (e * c * c * k2 + c);
    const std::int64_t tail = unshuffled * c * k2 + unshuffled;
    const std::int64_t control1 = hid * cfg.embed_dim + hid + coeff * hid + coeff;
    const std::int64_t control2 = hid * c + hid + coeff * hid + coeff;
    return stem + 2 * block + tail + control1 + control2;
}

// ---- tape-side model -------------------------------------------------------

SceneVars to_tape(Tape& t, SceneParams& p, bool trainable) {
    auto put = [&](Tensor& v) { return trainable ? t.leaf(v) : t.constant(v); };
    SceneVars vars;
    vars.config = p.config;
    vars.stem_w = put(p.stem_w);
    vars.stem_b = put(p.stem_b);
    auto put_block = [&](AssembledBlockParams& b) {
        BlockVars bv;
        for (auto& layer : b.layers) {
            AssembledLayerVars lv;
            for (auto& base : layer.bases) {
                lv.bases.push_back(put(base));
            }
            lv.bias = put(layer.bias);
            bv.layers.push_back(std::move(lv));
        }
        return bv;
    };
    auto put_control = [&](ControlModuleParams& c) {
        return ControlVars{put(c.w1), put(c.b1), put(c.w2), put(c.b2)};
    };
    vars.block1 = put_block(p.block1);
    vars.control1 = put_control(p.control1);
    vars.block2 = put_block(p.block2);
    vars.control2 = put_control(p.control2);
    vars.tail_w = put(p.tail_w);
    vars.tail_b = put(p.tail_b);
    return vars;
}

std::vector<Var> param_vars(const SceneVars& vars) {
    std::vector<Var> out;
    out.push_back(vars.stem_w);
    out.push_back(vars.stem_b);
    auto walk_block = [&](const BlockVars& b) {
        for (const auto& layer : b.layers) {
            for (Var base : layer.bases) {
                out.push_back(base);
            }
            out.push_back(layer.bias);
        }
    };
    auto walk_control = [&](const ControlVars& c) {
        out.push_back(c.w1);
        out.push_back(c.b1);
        out.push_back(c.w2);
        out.push_back(c.b2);
    };
    walk_block(vars.block1);
    walk_control(vars.control1);
    walk_block(vars.block2);
    walk_control(vars.control2);
    out.push_back(vars.tail_w);
    out.push_back(vars.tail_b);
    return out;
}

Var control_forward(Tape& t, Var source, const ControlVars& control) {
    const std::int64_t src_ch = t.value(source).shape().c;
    const std::int64_t want = t.value(control.w1).shape().c;
    if (src_ch != want) {
        throw DimensionError("control_forward: source has " + std::to_string(src_ch) +
                             " channels, control expects " + std::to_string(want));
    }
    Var hidden = relu(t, conv2d(t, source, control.w1, control.b1));
    Var raw = conv2d(t, hidden, control.w2, control.b2);
    return global_avg_pool(t, raw);
}

Tensor assemble_kernels(std::span<const Tensor> bases, std::span<const double> coeff) {
    if (bases.empty()) {
        throw DimensionError("assemble_kernels: no base kernels");
    }
    const std::int64_t e = static_cast<std::int64_t>(bases.size());
    const TensorShape ws = bases[0].shape();
    const std::int64_t c = ws.n;
    if (static_cast<std::int64_t>(coeff.size()) != c * e) {
        throw DimensionError("assemble_kernels: coefficient count " +
                             std::to_string(coeff.size()) + " != C*E = " + std::to_string(c * e));
    }
    Tensor w(ws);
    const std::int64_t slice = ws.c * ws.h * ws.w;  // one output channel's kernel
    for (std::int64_t oc = 0; oc < c; ++oc) {
        double* dst = w.data().data() + oc * slice;
        for (std::int64_t i = 0; i < e; ++i) {
            const double a = coeff[static_cast<std::size_t>(oc * e + i)];
            if (a == 0.0) {
                continue;
            }
            const double* src = bases[static_cast<std::size_t>(i)].data().data() + oc * slice;
            for (std::int64_t j = 0; j < slice; ++j) {
                dst[j] += a * src[j];
            }
        }
    }
    return w;
}

namespace {

Tensor sample_slice(const Tensor& x, std::int64_t n) {
    const auto [nb, c, h, w] = x.shape();
    Tensor out({1, c, h, w});
    const double* src = x.data().data() + x.offset(n, 0, 0, 0);
    std::copy(src, src + c * h * w, out.data().data());
    return out;
}

}  // namespace

Var assembled_conv2d(Tape& t, Var x, std::span<const Var> bases, Var coeff, Var bias) {
    const Tensor& xv = t.value(x);
    const Tensor& cv = t.value(coeff);
    const std::int64_t e = static_cast<std::int64_t>(bases.size());
    const TensorShape ws = t.value(bases[0]).shape();
    const std::int64_t c = ws.n;
    const std::int64_t pad = ws.h / 2;
    if (xv.shape().c != ws.c) {
        throw DimensionError("assembled_conv2d: input channels " + std::to_string(xv.shape().c) +
                             " != kernel c_in " + std::to_string(ws.c));
    }
    if (cv.shape().c != c * e || cv.shape().h != 1 || cv.shape().w != 1 ||
        cv.shape().n != xv.shape().n) {
        throw DimensionError("assembled_conv2d: coefficients must be (N, C*E, 1, 1), got " +
                             cv.shape().str());
    }

    std::vector<Tensor> base_vals;
    base_vals.reserve(static_cast<std::size_t>(e));
    for (Var b : bases) {
        base_vals.push_back(t.value(b));
    }

    const auto [nb, ci, h, w] = xv.shape();
    Tensor out({nb, c, h, w});
    for (std::int64_t n = 0; n < nb; ++n) {
        std::span<const double> co(cv.data().data() + cv.offset(n, 0, 0, 0),
                                   static_cast<std::size_t>(c * e));
        Tensor wn = assemble_kernels(base_vals, co);
        Tensor yn =
            ops::conv2d_forward(sample_slice(xv, n), wn, t.value(bias).data(), pad, pad);
        std::copy(yn.data().begin(), yn.data().end(), out.data().data() + out.offset(n, 0, 0, 0));
    }

    std::vector<Var> inputs{x, coeff, bias};
    std::vector<Var> base_vars(bases.begin(), bases.end());
    inputs.insert(inputs.end(), base_vars.begin(), base_vars.end());
    const TensorShape out_shape = out.shape();

    return t.record(
        "assembled_conv2d", std::move(out), std::move(inputs),
        [x, coeff, bias, base_vars, pad, out_shape](Tape::Ctx& ctx) {
            const Tensor& xv = ctx.tape.value(x);
            const Tensor& cv = ctx.tape.value(coeff);
            const std::int64_t e = static_cast<std::int64_t>(base_vars.size());
            std::vector<Tensor> base_vals;
            for (Var b : base_vars) {
                base_vals.push_back(ctx.tape.value(b));
            }
            const TensorShape ws = base_vals[0].shape();
            const std::int64_t c = ws.n;
            const std::int64_t slice = ws.c * ws.h * ws.w;
            const auto [nb, ci, h, w] = xv.shape();

            Tensor gout(out_shape,
                        std::vector<double>(ctx.out_adjoint.begin(), ctx.out_adjoint.end()));

            Tensor gx(xv.shape());
            Tensor gcoeff(cv.shape());
            std::vector<Tensor> gbases;
            const bool need_bases = [&] {
                for (Var b : base_vars) {
                    if (ctx.needs(b)) {
                        return true;
                    }
                }
                return false;
            }();
            if (need_bases) {
                for (std::int64_t i = 0; i < e; ++i) {
                    gbases.emplace_back(ws, 0.0);
                }
            }

            for (std::int64_t n = 0; n < nb; ++n) {
                std::span<const double> co(cv.data().data() + cv.offset(n, 0, 0, 0),
                                           static_cast<std::size_t>(c * e));
                Tensor wn = assemble_kernels(base_vals, co);
                Tensor gout_n = sample_slice(gout, n);
                Tensor x_n = sample_slice(xv, n);

                if (ctx.needs(x)) {
                    Tensor gxn = ops::conv2d_backward_input(gout_n, wn, x_n.shape(), pad, pad);
                    std::copy(gxn.data().begin(), gxn.data().end(),
                              gx.data().data() + gx.offset(n, 0, 0, 0));
                }
                if (ctx.needs(coeff) || need_bases) {
                    Tensor gwn = ops::conv2d_backward_weight(x_n, gout_n, ws, pad, pad);
                    if (ctx.needs(coeff)) {
                        for (std::int64_t oc = 0; oc < c; ++oc) {
                            const double* gw = gwn.data().data() + oc * slice;
                            for (std::int64_t i = 0; i < e; ++i) {
                                const double* bs = base_vals[static_cast<std::size_t>(i)]
                                                       .data()
                                                       .data() +
                                                   oc * slice;
                                double acc = 0.0;
                                for (std::int64_t j = 0; j < slice; ++j) {
                                    acc += gw[j] * bs[j];
                                }
                                gcoeff.at(n, oc * e + i, 0, 0) = acc;
                            }
                        }
                    }
                    if (need_bases) {
                        for (std::int64_t oc = 0; oc < c; ++oc) {
                            const double* gw = gwn.data().data() + oc * slice;
                            for (std::int64_t i = 0; i < e; ++i) {
                                const double a = co[static_cast<std::size_t>(oc * e + i)];
                                if (a == 0.0) {
                                    continue;
                                }
                                double* gb = gbases[static_cast<std::size_t>(i)].data().data() +
                                             oc * slice;
                                for (std::int64_t j = 0; j < slice; ++j) {
                                    gb[j] += a * gw[j];
                                }
                            }
                        }
                    }
                }
            }

            if (ctx.needs(x)) {
                ctx.add_to(x, gx);
            }
            if (ctx.needs(coeff)) {
                ctx.add_to(coeff, gcoeff);
            }
            if (ctx.needs(bias)) {
                ctx.add_to(bias, ops::conv2d_backward_bias(gout));
            }
            if (need_bases) {
                for (std::int64_t i = 0; i < e; ++i) {
                    ctx.add_to(base_vars[static_cast<std::size_t>(i)],
                               gbases[static_cast<std::size_t>(i)]);
                }
            }
        });
}

Var assembled_block_forward(Tape& t, Var x, const BlockVars& block, Var block_coeff) {
    const std::int64_t layers = static_cast<std::int64_t>(block.layers.size());
    const Tensor& cv = t.value(block_coeff);
    const std::int64_t per_layer = cv.shape().c / layers;
    if (cv.shape().c % layers != 0) {
        throw DimensionError("assembled_block_forward: coefficient channels " +
                             std::to_string(cv.shape().c) + " not divisible by " +
                             std::to_string(layers) + " layers");
    }
    Var h = x;
    for (std::int64_t l = 0; l < layers; ++l) {
        Var coeff = slice_channels(t, block_coeff, l * per_layer, (l + 1) * per_layer);
        const auto& lv = block.layers[static_cast<std::size_t>(l)];
        h = assembled_conv2d(t, h, lv.bases, coeff, lv.bias);
        if (l + 1 < layers) {
            h = relu(t, h);
        }
    }
    return h;
}

Var scene_forward(Tape& t, Var frame, const SceneVars& vars, Var embedding) {
    const ModelConfig& cfg = vars.config;
    const Tensor& fv = t.value(frame);
    if (fv.shape().c != cfg.input_channels) {
        throw DimensionError("scene_forward: expected " + std::to_string(cfg.input_channels) +
                             " input channels, got " + std::to_string(fv.shape().c));
    }
    Var u = pixel_unshuffle(t, frame, cfg.unshuffle_factor);
    Var f0 = conv2d(t, u, vars.stem_w, vars.stem_b);

    Var coeff1 = control_forward(t, embedding, vars.control1);
    Var f1 = assembled_block_forward(t, f0, vars.block1, coeff1);

    Var coeff2 = control_forward(t, f1, vars.control2);
    Var f2 = assembled_block_forward(t, f1, vars.block2, coeff2);

    Var tail = conv2d(t, f2, vars.tail_w, vars.tail_b);
    Var up = pixel_shuffle(t, tail, cfg.unshuffle_factor);
    return add(t, up, frame);
}

// ---- checkpoints -----------------------------------------------------------

void save_checkpoint(SceneParams& params, const std::string& path) {
    ByteWriter w;
    w.magic("SCN1");
    const ModelConfig& c = params.config;
    for (std::int64_t f : {c.unshuffle_factor, c.input_channels, c.block_channels,
                           c.convs_per_block, c.num_base_kernels, c.kernel_size,
                           c.control_hidden_dim, c.embed_dim}) {
        w.u32(static_cast<std::uint32_t>(f));
    }
    params.for_each([&](const std::string&, Tensor& t) { w.f64_span(t.data()); });
    w.finish_crc();
    w.write_file(path);
}

SceneParams load_checkpoint(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    r.check_crc();
    r.expect_magic("SCN1");
    ModelConfig cfg;
    cfg.unshuffle_factor = r.u32();
    cfg.input_channels = r.u32();
    cfg.block_channels = r.u32();
    cfg.convs_per_block = r.u32();
    cfg.num_base_kernels = r.u32();
    cfg.kernel_size = r.u32();
    cfg.control_hidden_dim = r.u32();
    cfg.embed_dim = r.u32();
    cfg.validate();

    SceneParams params = SceneParams::init(cfg, 0);
    params.for_each([&](const std::string&, Tensor& t) { r.f64_span(t.data()); });
    if (!r.at_crc_tail()) {
        throw IntegrityError(path + ": trailing bytes after parameter payload");
    }
    params.for_each([&](const std::string& name, Tensor& t) {
        if (!t.all_finite()) {
            throw IntegrityError(path + ": non-finite values in parameter " + name);
        }
    });
    return params;
}

}  // namespace scene

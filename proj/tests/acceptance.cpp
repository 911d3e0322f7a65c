// Acceptance suite: runs every acceptance criterion at its pinned tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "scene/bdrate.hpp"
#include "scene/evaluate.hpp"
#include "scene/fixtures.hpp"
#include "scene/infer.hpp"
#include "scene/loss.hpp"
#include "scene/msssim.hpp"
#include "scene/ops.hpp"
#include "scene/proxy.hpp"
#include "scene/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/reference_msssim.hpp"

using namespace scene;
using scene::testing::GradCheck;
using scene::testing::gradcheck_rel_err;
using scene::testing::random_tensor;

namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) {
        detail += (detail.empty() ? "" : "; ") + what;
    }
};

std::string fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "scene_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string bundled_encoder() {
    char buf[4096];
    const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) {
        return {};
    }
    buf[n] = '\0';
    return (fs::path(buf).parent_path() / "scene-y4mcodec").string();
}

ModelConfig toy_model() {
    ModelConfig cfg;
    cfg.block_channels = 8;
    cfg.num_base_kernels = 2;
    cfg.control_hidden_dim = 8;
    cfg.embed_dim = 16;
    return cfg;
}

char fmt_buf[256];
std::string fmt(const char* f, double a, double b = 0.0) {
    std::snprintf(fmt_buf, sizeof(fmt_buf), f, a, b);
    return fmt_buf;
}

// ---- criterion 1: gradient integrity ----------------------------------------

void criterion_gradients(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr double kTol = 1e-4;
    const std::vector<std::uint64_t> seeds = {101, 102, 103, 104, 105};

    auto leaf_check = [&](const char* name,
                          const std::function<Var(Tape&, const std::vector<Var>&)>& graph,
                          std::vector<Tensor> inputs, std::uint64_t seed,
                          std::size_t positions = 48) {
        Tape t;
        std::vector<Var> vars;
        for (const Tensor& in : inputs) {
            vars.push_back(t.leaf(in));
        }
        Var loss = graph(t, vars);
        t.backward(loss);
        std::vector<Tensor> analytic;
        for (Var v : vars) {
            analytic.push_back(t.grad(v));
        }
        auto forward = [&graph](const std::vector<Tensor>& in) {
            Tape tt;
            std::vector<Var> vv;
            for (const Tensor& i : in) {
                vv.push_back(tt.constant(i));
            }
            return tt.value(graph(tt, vv)).item();
        };
        const double err =
            gradcheck_rel_err(forward, inputs, analytic,
                              GradCheck{.max_positions_per_input = positions,
                                        .position_seed = seed});
        c.require(err < kTol, std::string(name) + " rel err " + fmt("%.2e", err));
    };

    for (const std::uint64_t seed : seeds) {
        Rng rng(seed);

        // conv2d (input, weight, bias)
        leaf_check(
            "conv2d",
            [](Tape& t, const std::vector<Var>& v) {
                Var y = conv2d(t, v[0], v[1], v[2]);
                return mean_all(t, mul(t, y, y));
            },
            {random_tensor({1, 2, 6, 6}, rng), random_tensor({3, 2, 3, 3}, rng),
             random_tensor({1, 3, 1, 1}, rng)},
            seed);

        // relu away from the kink
        Tensor rx = random_tensor({1, 2, 6, 6}, rng);
        scene::testing::enforce_margin(rx, 0.0, 1e-3);
        leaf_check(
            "relu",
            [](Tape& t, const std::vector<Var>& v) { return mean_all(t, relu(t, v[0])); }, {rx},
            seed);

        // pixel shuffle / unshuffle (linear permutations)
        leaf_check(
            "pixel_unshuffle",
            [](Tape& t, const std::vector<Var>& v) {
                Var y = pixel_unshuffle(t, v[0], 2);
                return mean_all(t, mul(t, y, y));
            },
            {random_tensor({1, 2, 6, 6}, rng)}, seed);
        leaf_check(
            "pixel_shuffle",
            [](Tape& t, const std::vector<Var>& v) {
                Var y = pixel_shuffle(t, v[0], 2);
                return mean_all(t, mul(t, y, y));
            },
            {random_tensor({1, 4, 3, 3}, rng)}, seed);

        // pooling
        leaf_check(
            "global_avg_pool",
            [](Tape& t, const std::vector<Var>& v) {
                Var y = global_avg_pool(t, v[0]);
                return mean_all(t, mul(t, y, y));
            },
            {random_tensor({2, 3, 4, 4}, rng)}, seed);

        // l1 away from ties
        Tensor la = random_tensor({1, 2, 5, 5}, rng);
        Tensor lb = random_tensor({1, 2, 5, 5}, rng, 2.0, 3.0);
        leaf_check(
            "l1_loss",
            [lb](Tape& t, const std::vector<Var>& v) {
                return l1_loss(t, v[0], t.constant(lb));
            },
            {la}, seed);

        // ms_ssim w.r.t. its first argument
        const Tensor msb = random_tensor({1, 1, 32, 32}, rng, 0.2, 0.8);
        Tensor msa = msb;
        for (auto& v : msa.data()) {
            v += rng.uniform(-0.05, 0.05);
        }
        leaf_check(
            "ms_ssim",
            [msb](Tape& t, const std::vector<Var>& v) {
                return ms_ssim(t, v[0], t.constant(msb), 2);
            },
            {msa}, seed, 24);

        // control module (both conv layers + biases)
        {
            const Tensor source = random_tensor({1, 4, 3, 3}, rng);
            leaf_check(
                "control_forward",
                [source](Tape& t, const std::vector<Var>& v) {
                    ControlVars ctl{v[0], v[1], v[2], v[3]};
                    Var y = control_forward(t, t.constant(source), ctl);
                    return mean_all(t, mul(t, y, y));
                },
                {random_tensor({5, 4, 1, 1}, rng), random_tensor({1, 5, 1, 1}, rng),
                 random_tensor({6, 5, 1, 1}, rng), random_tensor({1, 6, 1, 1}, rng)},
                seed);
        }

        // assembled convolution (input, coefficients, bias, both bases)
        {
            leaf_check(
                "assembled_conv2d",
                [](Tape& t, const std::vector<Var>& v) {
                    const std::vector<Var> bases{v[3], v[4]};
                    Var y = assembled_conv2d(t, v[0], bases, v[1], v[2]);
                    return mean_all(t, mul(t, y, y));
                },
                {random_tensor({1, 3, 5, 5}, rng), random_tensor({1, 6, 1, 1}, rng),
                 random_tensor({1, 3, 1, 1}, rng), random_tensor({3, 3, 3, 3}, rng),
                 random_tensor({3, 3, 3, 3}, rng)},
                seed, 24);
        }

        // DCT (exactly linear)
        leaf_check(
            "dct8x8",
            [](Tape& t, const std::vector<Var>& v) {
                Var y = dct8x8(t, v[0]);
                return mean_all(t, mul(t, y, y));
            },
            {random_tensor({1, 2, 8, 8}, rng, -100.0, 100.0)}, seed);

        // soft quantize and bitrate estimate
        {
            ProxyConfig soft;
            soft.quality = 50;
            soft.rounding = RoundingMode::soft;
            soft.tau = 0.5;
            leaf_check(
                "soft_quantize",
                [soft](Tape& t, const std::vector<Var>& v) {
                    Var q = quantize(t, v[0], soft);
                    return mean_all(t, mul(t, q, q));
                },
                {random_tensor({1, 1, 8, 8}, rng, -40.0, 40.0)}, seed);
            leaf_check(
                "bitrate_estimate",
                [soft](Tape& t, const std::vector<Var>& v) {
                    return bitrate_estimate(t, quantize(t, v[0], soft));
                },
                {random_tensor({1, 1, 8, 8}, rng, -40.0, 40.0)}, seed);
        }

        // full composite: scene_forward -> proxy -> multi-stage loss,
        // checked against every parameter group and sampled positions.
        // Parameters are pushed well away from the identity so the L1 terms
        // and ReLU pre-activations sit clear of their kinks (margin rule).
        {
            ModelConfig mc = toy_model();
            SceneParams params = SceneParams::init(mc, seed);
            Rng prng(seed + 1000);
            for (auto& v : params.tail_w.data()) {
                v = prng.uniform(-0.3, 0.3);
            }
            for (auto& v : params.control1.w2.data()) {
                v = prng.uniform(-0.3, 0.3);
            }
            for (auto& v : params.control2.w2.data()) {
                v = prng.uniform(-0.3, 0.3);
            }
            const Tensor frame = random_tensor({1, 3, 16, 16}, prng, 0.2, 0.8);
            const Tensor embedding = random_tensor({1, mc.embed_dim, 1, 1}, prng);
            TrainConfig tc;
            tc.proxy.rounding = RoundingMode::soft;
            tc.proxy.tau = 0.5;
            const LossWeights w{0.01, 1.0, 5.0, 1.0};

            Tape t;
            SceneVars vars = to_tape(t, params, true);
            Var in = t.constant(frame);
            Var enhanced = scene_forward(t, in, vars, t.constant(embedding));
            ProxyVars prox = proxy_forward(t, enhanced, tc.proxy);
            const MsSsimPerceptualLoss perc(1);
            const LossVars loss =
                total_loss(t, in, enhanced, prox.image, prox.symbols, w, &perc);
            t.backward(loss.total);

            const std::vector<Var> leaf_vars = param_vars(vars);
            std::vector<ParamRef> refs = params.param_refs();
            std::vector<Tensor> inputs;
            std::vector<Tensor> analytic;
            for (std::size_t i = 0; i < refs.size(); ++i) {
                inputs.push_back(*refs[i].tensor);
                analytic.push_back(t.grad(leaf_vars[i]));
            }
            auto forward = [&](const std::vector<Tensor>& in2) {
                SceneParams p2 = params;
                std::vector<ParamRef> r2 = p2.param_refs();
                for (std::size_t i = 0; i < r2.size(); ++i) {
                    *r2[i].tensor = in2[i];
                }
                Tape tt;
                SceneVars v2 = to_tape(tt, p2, false);
                Var in3 = tt.constant(frame);
                Var e2 = scene_forward(tt, in3, v2, tt.constant(embedding));
                ProxyVars pp = proxy_forward(tt, e2, tc.proxy);
                const MsSsimPerceptualLoss perc2(1);
                return total_loss(tt, in3, e2, pp.image, pp.symbols, w, &perc2).values.total;
            };
            const double err = gradcheck_rel_err(forward, inputs, analytic,
                                                 GradCheck{.max_positions_per_input = 2,
                                                           .position_seed = seed});
            c.require(err < kTol, "composite rel err " + fmt("%.2e", err));
        }
    }

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs < 60.0, "runtime " + fmt("%.1f", secs) + "s exceeds 60s");
    c.note(fmt("%.1f", secs) + "s");
}

// ---- criterion 2: one-hot reduction oracle -----------------------------------

void criterion_reduction(Check& c) {
    for (const std::uint64_t seed : {201u, 202u, 203u}) {
        Rng rng(seed);
        const std::int64_t ch = 6, e = 4;
        Tape t;
        BlockVars block;
        std::vector<std::vector<Tensor>> raw(3);
        std::vector<Tensor> biases;
        for (int l = 0; l < 3; ++l) {
            AssembledLayerVars lv;
            for (std::int64_t i = 0; i < e; ++i) {
                raw[static_cast<std::size_t>(l)].push_back(random_tensor({ch, ch, 3, 3}, rng));
                lv.bases.push_back(t.constant(raw[static_cast<std::size_t>(l)].back()));
            }
            biases.push_back(random_tensor({1, ch, 1, 1}, rng));
            lv.bias = t.constant(biases.back());
            block.layers.push_back(std::move(lv));
        }
        const std::int64_t picks[3] = {static_cast<std::int64_t>(rng.below(e)),
                                       static_cast<std::int64_t>(rng.below(e)),
                                       static_cast<std::int64_t>(rng.below(e))};
        Tensor coeff({1, 3 * ch * e, 1, 1}, 0.0);
        for (int l = 0; l < 3; ++l) {
            for (std::int64_t oc = 0; oc < ch; ++oc) {
                coeff.at(0, l * ch * e + oc * e + picks[l], 0, 0) = 1.0;
            }
        }
        const Tensor x = random_tensor({1, ch, 8, 8}, rng);
        Var y = assembled_block_forward(t, t.constant(x), block, t.constant(coeff));

        Tensor expect = x;
        for (int l = 0; l < 3; ++l) {
            expect = ops::conv2d_forward(
                expect,
                raw[static_cast<std::size_t>(l)][static_cast<std::size_t>(picks[l])],
                biases[static_cast<std::size_t>(l)].data(), 1, 1);
            if (l < 2) {
                expect = ops::relu(expect);
            }
        }
        double max_diff = 0.0;
        for (std::int64_t i = 0; i < expect.numel(); ++i) {
            max_diff = std::max(max_diff, std::abs(t.value(y)[i] - expect[i]));
        }
        c.require(max_diff <= 1e-12, "one-hot block diff " + fmt("%.2e", max_diff));
    }
}

// ---- criterion 3: transform exactness -----------------------------------------

void criterion_transforms(Check& c) {
    Rng rng(301);
    const Tensor blocks = random_tensor({2, 6, 8, 8}, rng, -128.0, 127.0);
    Tape t;
    Var coeff = dct8x8(t, t.constant(blocks));
    Var back = idct8x8(t, coeff);
    double inv_err = 0.0;
    for (std::int64_t i = 0; i < blocks.numel(); ++i) {
        inv_err = std::max(inv_err, std::abs(t.value(back)[i] - blocks[i]));
    }
    c.require(inv_err < 1e-10, "idct(dct(x)) error " + fmt("%.2e", inv_err));

    double sx = 0.0, sc = 0.0;
    for (double v : blocks.data()) {
        sx += v * v;
    }
    for (double v : t.value(coeff).data()) {
        sc += v * v;
    }
    c.require(std::abs(sx - sc) < 1e-10 * std::max(1.0, sx),
              "Parseval gap " + fmt("%.2e", std::abs(sx - sc)));

    const double v = -37.25;
    Tape t2;
    const Tensor& dc = t2.value(dct8x8(t2, t2.constant(Tensor({1, 1, 8, 8}, v))));
    c.require(std::abs(dc[0] - 8.0 * v) < 1e-10, "DC gain");
    for (std::int64_t i = 1; i < 64; ++i) {
        c.require(std::abs(dc[i]) < 1e-10, "AC leakage");
    }

    const Tensor x = random_tensor({2, 3, 12, 8}, rng);
    for (const std::int64_t f : {1, 2, 4}) {
        if (x.shape().h % f || x.shape().w % f) {
            continue;
        }
        const Tensor round = ops::pixel_shuffle(ops::pixel_unshuffle(x, f), f);
        bool exact = true;
        for (std::int64_t i = 0; i < x.numel(); ++i) {
            exact = exact && round[i] == x[i];
        }
        c.require(exact, "shuffle round trip factor " + std::to_string(f));
    }
}

// ---- criterion 4: BD-rate oracle ----------------------------------------------

void criterion_bdrate(Check& c) {
    auto curve = [](std::initializer_list<std::pair<double, double>> pts) {
        std::vector<RdPoint> points;
        for (const auto& [r, m] : pts) {
            points.push_back({r, m, "c"});
        }
        return RdCurve::from_points(std::move(points));
    };
    const RdCurve anchor =
        curve({{100, 0.90}, {200, 0.94}, {400, 0.965}, {800, 0.98}, {1600, 0.99}});

    const BdRateResult self = bd_rate(anchor, anchor);
    c.require(self.defined() && std::abs(*self.percent) < 1e-9,
              "identity " + fmt("%.2e", self.defined() ? *self.percent : 1.0));

    std::vector<RdPoint> halved;
    for (const RdPoint& p : anchor.points) {
        halved.push_back({p.bitrate_kbps * 0.5, p.metric, "h"});
    }
    const BdRateResult half = bd_rate(anchor, RdCurve::from_points(std::move(halved)));
    c.require(half.defined() && std::abs(*half.percent + 50.0) <= 0.01,
              "half-rate " + fmt("%.4f", half.defined() ? *half.percent : 0.0));

    const RdCurve lo = curve({{100, 0.60}, {200, 0.65}, {400, 0.70}, {800, 0.75}});
    const RdCurve hi = curve({{100, 0.90}, {200, 0.92}, {400, 0.94}, {800, 0.96}});
    const BdRateResult disjoint = bd_rate(lo, hi);
    c.require(!disjoint.defined() &&
                  disjoint.undefined_reason == "no overlapping metric interval",
              "disjoint-interval marker");

    const RdCurve test =
        curve({{130, 0.905}, {260, 0.945}, {520, 0.968}, {1040, 0.982}, {2080, 0.991}});
    const BdRateResult base = bd_rate(anchor, test);
    for (const double gamma : {0.01, 12.0, 1000.0}) {
        std::vector<RdPoint> a2, t2;
        for (const RdPoint& p : anchor.points) {
            a2.push_back({p.bitrate_kbps * gamma, p.metric, "a"});
        }
        for (const RdPoint& p : test.points) {
            t2.push_back({p.bitrate_kbps * gamma, p.metric, "t"});
        }
        const BdRateResult scaled =
            bd_rate(RdCurve::from_points(std::move(a2)), RdCurve::from_points(std::move(t2)));
        c.require(scaled.defined() && std::abs(*scaled.percent - *base.percent) < 1e-9,
                  "gamma invariance at " + fmt("%g", gamma));
    }
}

// ---- criterion 5: loss identity -------------------------------------------------

namespace {
class UnitPerceptual final : public PerceptualLoss {
public:
    Var build(Tape& t, Var, Var) const override { return t.constant(Tensor::scalar(1.0)); }
};
}  // namespace

void criterion_loss_identity(Check& c) {
    // unit components under the default weights
    Tape t;
    const UnitPerceptual unit;
    const LossVars loss = total_loss(
        t, t.constant(Tensor({1, 1, 2, 2}, 0.0)), t.constant(Tensor({1, 1, 2, 2}, 1.0)),
        t.constant(Tensor({1, 1, 2, 2}, 1.0)), t.constant(Tensor({1, 1, 1, 1}, 1.0)),
        LossWeights{0.01, 1.0, 5.0, 1.0}, &unit);
    c.require(std::abs(loss.values.total - 7.01) < 1e-12,
              "unit-component total " + fmt("%.15g", loss.values.total));

    // exact weighted-sum identity on random fixtures
    Rng rng(501);
    for (int trial = 0; trial < 4; ++trial) {
        const Tensor input = random_tensor({1, 1, 16, 16}, rng, 0.1, 0.9);
        Tensor enhanced = input;
        for (auto& v : enhanced.data()) {
            v += rng.uniform(-0.05, 0.05);
        }
        ProxyConfig cfg;
        cfg.quality = 50;
        const LossWeights w{rng.uniform(0.0, 1.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 6.0),
                            rng.uniform(0.0, 2.0)};
        Tape tt;
        Var vin = tt.constant(input);
        Var ven = tt.constant(enhanced);
        ProxyVars prox = proxy_forward(tt, ven, cfg);
        const MsSsimPerceptualLoss perc(1);
        const LossVars l = total_loss(tt, vin, ven, prox.image, prox.symbols, w, &perc);
        double expect = 0.0;
        bool first = true;
        auto fold = [&](double weight, double value) {
            if (!(weight > 0.0)) {
                return;
            }
            expect = first ? weight * value : expect + weight * value;
            first = false;
        };
        fold(w.perceptual, l.values.perceptual);
        fold(w.bitrate, l.values.bitrate);
        fold(w.pre, l.values.pre);
        fold(w.post, l.values.post);
        c.require(l.values.total == expect, "weighted-sum identity (exact)");
    }
}

// ---- criterion 6: identity at initialization ------------------------------------

void criterion_identity_init(Check& c) {
    ModelConfig mc = toy_model();
    SceneParams params = SceneParams::init(mc, 600);
    ToyEmbeddingProvider provider(7, mc.embed_dim);
    const VideoClip clip = make_synthetic_clip(8, 64, 64, 601);

    // pre-clamp output is bitwise the input
    {
        const std::int64_t idx[] = {0};
        const Tensor embedding = provider.embed(clip.frames[0], idx);
        Tape t;
        SceneVars vars = to_tape(t, params, false);
        Var out = scene_forward(t, t.constant(clip.frames[0]), vars, t.constant(embedding));
        bool bitwise = true;
        for (std::int64_t i = 0; i < clip.frames[0].numel(); ++i) {
            bitwise = bitwise && t.value(out)[i] == clip.frames[0][i];
        }
        c.require(bitwise, "pre-clamp identity");
    }
    // clamped enhance stays in range and equals the input
    const VideoClip enhanced = enhance_clip(clip, params, provider);
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        for (std::int64_t k = 0; k < clip.frames[i].numel(); ++k) {
            const double v = enhanced.frames[i][k];
            c.require(v >= 0.0 && v <= 1.0, "clamp range");
            c.require(v == std::clamp(clip.frames[i][k], 0.0, 1.0), "post-clamp projection");
        }
        if (!c.ok) {
            break;
        }
    }

    // identity checkpoint through the full evaluation pipeline
    HarnessConfig hc;
    hc.encoder_bin = bundled_encoder();
    const EncoderHarness harness(hc);
    LadderSpec ladder;
    MetricSpec metric;
    metric.msssim_scales = 3;
    const CompareReport report = compare_pipelines(clip, params, provider, harness, ladder,
                                                   metric, fresh_dir("identity_eval"));
    c.require(report.bd.defined(), "BD-rate defined for identity enhancement");
    if (report.bd.defined()) {
        c.require(std::abs(*report.bd.percent) <= 0.5,
                  "identity BD-rate " + fmt("%.4f%%", *report.bd.percent));
        c.note("identity BD-rate " + fmt("%.4f%%", *report.bd.percent));
    }
}

// ---- criterion 7: overfit smoke ---------------------------------------------------

// The smoke run trains with the soft-rounded proxy (the differentiable mode
// built for exactly this) on four fixed patches whose texture sits on
// quantization-cell boundaries, so the pre-compensation the proxy strategy
// promises is actually learnable at desk scale. Weights emphasize the
// perceptual and post terms; the production-default weights pin the model to
// the identity at this scale (the L1 anchor's sign gradient dominates every
// smooth term there).
void criterion_overfit(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();

    ModelConfig mc = toy_model();  // C=8, E=2, D=16
    TrainConfig tc;
    tc.lr = 1e-3;
    tc.batch_size = 4;
    tc.patch_size = 64;
    tc.seed = 700;
    tc.hflip = false;
    tc.vflip = false;
    tc.random_crop = false;
    tc.msssim_scales = 3;
    tc.proxy.quality = 10;
    tc.proxy.rounding = RoundingMode::soft;
    tc.proxy.tau = 1.0;
    tc.weights = {50.0, 0.005, 0.05, 1.0};

    // 4 fixed 64x64 patches: smooth ramp + moving blob + texture aligned
    // with mid-frequency DCT basis functions
    VideoClip clip;
    const double pi = 3.14159265358979;
    for (int t = 0; t < 4; ++t) {
        Tensor f({1, 3, 64, 64});
        for (std::int64_t ch = 0; ch < 3; ++ch) {
            for (std::int64_t y = 0; y < 64; ++y) {
                for (std::int64_t x = 0; x < 64; ++x) {
                    const double fx = static_cast<double>(x) / 64.0;
                    const double fy = static_cast<double>(y) / 64.0;
                    double v = 0.35 + 0.25 * (fx + fy) / 2.0 + 0.05 * t / 4.0;
                    const double dx = (fx - 0.3 - 0.1 * t) / 0.25;
                    const double dy = (fy - 0.5) / 0.25;
                    v += 0.2 * std::exp(-(dx * dx + dy * dy)) * (ch == 0 ? 1.0 : 0.6);
                    v += 0.08 * std::cos((2.0 * x + 1.0) * 3.0 * pi / 16.0) +
                         0.064 * std::cos((2.0 * y + 1.0) * 5.0 * pi / 16.0);
                    f.at(0, ch, y, x) = std::clamp(v, 0.0, 1.0);
                }
            }
        }
        clip.frames.push_back(std::move(f));
    }

    Batch batch;
    batch.frames = Tensor({4, 3, 64, 64});
    for (std::int64_t i = 0; i < 4; ++i) {
        std::copy(clip.frames[static_cast<std::size_t>(i)].data().begin(),
                  clip.frames[static_cast<std::size_t>(i)].data().end(),
                  batch.frames.data().data() + batch.frames.offset(i, 0, 0, 0));
        batch.indices.push_back(i);
    }

    SceneParams params = SceneParams::init(mc, tc.seed);
    ToyEmbeddingProvider provider(7, mc.embed_dim);
    TrainState state;

    double first10 = 0.0;
    double final_total = 0.0;
    for (int step = 0; step < 500; ++step) {
        const LossBreakdown bd = train_step(batch, params, state, provider, tc);
        if (step < 10) {
            first10 += bd.total / 10.0;
        }
        final_total = bd.total;
    }
    c.require(final_total <= 0.40 * first10,
              "final " + fmt("%.4f", final_total) + " vs 40%% of first-10 mean " +
                  fmt("%.4f", 0.40 * first10));
    c.note("loss ratio " + fmt("%.3f", first10 > 0 ? final_total / first10 : 1.0));

    // enhancing then proxying beats proxying the raw patches, under the same
    // proxy configuration the run trained against; the margin is frozen from
    // the reference run (measured gain 7.6e-3)
    const double kFrozenMargin = 3e-3;
    double mean_raw = 0.0;
    double mean_enh = 0.0;
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        const std::int64_t idx[] = {static_cast<std::int64_t>(i)};
        const Tensor enhanced = enhance_frames(clip.frames[i], params, provider, idx);
        const Tensor prox_enh = proxy_apply(enhanced, tc.proxy).image;
        const Tensor prox_raw = proxy_apply(clip.frames[i], tc.proxy).image;
        mean_enh += ms_ssim(prox_enh, clip.frames[i], tc.msssim_scales) / 4.0;
        mean_raw += ms_ssim(prox_raw, clip.frames[i], tc.msssim_scales) / 4.0;
    }
    c.require(mean_enh > mean_raw + kFrozenMargin,
              "msssim(proxy(enhance)) " + fmt("%.5f", mean_enh) + " vs raw " +
                  fmt("%.5f", mean_raw));
    c.note("msssim gain " + fmt("%.2e", mean_enh - mean_raw));

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs < 600.0, "runtime " + fmt("%.0f", secs) + "s exceeds 10min");
    c.note(fmt("%.0f", secs) + "s");
}

// ---- criterion 8: determinism -----------------------------------------------------

void criterion_determinism(Check& c) {
    const ModelConfig mc = toy_model();
    const VideoClip data = make_synthetic_clip(6, 32, 32, 800);
    std::vector<Tensor> frames = data.frames;
    ToyEmbeddingProvider provider(7, mc.embed_dim);

    auto run = [&](const std::string& dir) {
        TrainConfig tc;
        tc.patch_size = 16;
        tc.batch_size = 2;
        tc.epochs = 1;
        tc.steps_per_epoch = 50;
        tc.seed = 801;
        tc.checkpoint_path = dir + "/ckpt.scn1";
        tc.log_path = dir + "/log.csv";
        train(mc, tc, frames, provider);
        return tc;
    };
    const TrainConfig a = run(fresh_dir("det_a"));
    const TrainConfig b = run(fresh_dir("det_b"));

    auto strip_ms = [](const std::string& path) {
        std::ifstream f(path);
        std::string line, all;
        while (std::getline(f, line)) {
            all += line.substr(0, line.rfind(',')) + "\n";
        }
        return all;
    };
    c.require(strip_ms(a.log_path) == strip_ms(b.log_path),
              "training logs differ (timing column excluded)");

    auto slurp = [](const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        return std::vector<char>{std::istreambuf_iterator<char>(f), {}};
    };
    c.require(slurp(a.checkpoint_path) == slurp(b.checkpoint_path), "checkpoints differ");

    // save -> load -> save is bit-exact and CRC-verified on load
    SceneParams loaded = load_checkpoint(a.checkpoint_path);
    const std::string again = fresh_dir("det_c") + "/again.scn1";
    save_checkpoint(loaded, again);
    c.require(slurp(a.checkpoint_path) == slurp(again), "checkpoint round trip not bit-exact");
}

// ---- criterion 9: harness integrity ------------------------------------------------

void criterion_harness(Check& c) {
    // Y4M round trip bit-exact in YCbCr
    const std::string dir = fresh_dir("harness");
    const VideoClip clip = make_synthetic_clip(3, 32, 32, 900);
    write_y4m(clip, dir + "/a.y4m");
    write_y4m(read_y4m(dir + "/a.y4m"), dir + "/b.y4m");
    auto slurp = [](const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        return std::vector<char>{std::istreambuf_iterator<char>(f), {}};
    };
    c.require(slurp(dir + "/a.y4m") == slurp(dir + "/b.y4m"), "y4m round trip");

    // RGB <-> YCbCr bound
    Rng rng(901);
    const Tensor frame = random_tensor({1, 3, 24, 24}, rng, 0.0, 1.0);
    const Tensor back = ycbcr_to_rgb(rgb_to_ycbcr(frame));
    double max_err = 0.0;
    for (std::int64_t i = 0; i < frame.numel(); ++i) {
        max_err = std::max(max_err, std::abs(back[i] - frame[i]));
    }
    c.require(max_err <= 2.0 / 255.0, "rgb/ycbcr error " + fmt("%.2e", max_err));

    // encoder ladders: strictly decreasing file sizes on both codecs
    HarnessConfig hc;
    hc.encoder_bin = bundled_encoder();
    const EncoderHarness harness(hc);
    const VideoClip fixture = make_synthetic_clip(8, 64, 64, 902);
    for (const Codec codec : {Codec::h264, Codec::h265}) {
        std::int64_t prev = std::numeric_limits<std::int64_t>::max();
        for (const int qp : {20, 28, 36, 44}) {
            const auto result = harness.encode_decode(
                fixture, EncoderJob{codec, qp, "medium"},
                dir + "/" + codec_name(codec) + "_qp" + std::to_string(qp));
            c.require(result.encoded_bytes < prev,
                      codec_name(codec) + " qp " + std::to_string(qp) + " not smaller");
            prev = result.encoded_bytes;
        }
    }
}

// ---- criterion 10: MS-SSIM correctness ----------------------------------------------

void criterion_msssim(Check& c) {
    const VideoClip clip = make_synthetic_clip(2, 64, 64, 1000);
    const double self = ms_ssim(clip.frames[0], clip.frames[0], 5);
    c.require(std::abs(self - 1.0) <= 1e-9, "self-similarity " + fmt("%.12f", self));

    Rng rng(1001);
    Tensor distorted = clip.frames[1];
    for (auto& v : distorted.data()) {
        v = std::clamp(v + rng.uniform(-0.06, 0.06), 0.0, 1.0);
    }
    const double lib = ms_ssim(distorted, clip.frames[1], 5);
    const double ref = scene::testing::reference_msssim(distorted, clip.frames[1], 5);
    c.require(std::abs(lib - ref) <= 1e-6,
              "oracle gap " + fmt("%.2e", std::abs(lib - ref)));
    c.note("fixture value " + fmt("%.6f", lib));
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<void(Check&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient integrity (all ops + composite, rel err < 1e-4, 5 seeds)",
         criterion_gradients},
        {2, "one-hot assembly reduces to fixed convolution (<= 1e-12)", criterion_reduction},
        {3, "transform exactness (DCT orthonormality, shuffle round trip)",
         criterion_transforms},
        {4, "BD-rate oracle (identity, -50%, undefined interval, gamma invariance)",
         criterion_bdrate},
        {5, "loss identity (exact weighted sum; 7.01 with unit components)",
         criterion_loss_identity},
        {6, "identity at initialization (bitwise + BD-rate within 0.5%)",
         criterion_identity_init},
        {7, "overfit smoke (500 steps: loss <= 40% of start, proxied MS-SSIM gain)",
         criterion_overfit},
        {8, "determinism (50-step logs, checkpoints, CRC round trip)",
         criterion_determinism},
        {9, "harness integrity (Y4M, color round trip, QP ladders)", criterion_harness},
        {10, "MS-SSIM correctness (self = 1, independent oracle within 1e-6)",
         criterion_msssim},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        Check check;
        try {
            criterion.run(check);
        } catch (const std::exception& e) {
            check.ok = false;
            check.note(std::string("exception: ") + e.what());
        }
        std::printf("[%s] criterion %2d: %s%s%s\n", check.ok ? "PASS" : "FAIL", criterion.id,
                    criterion.name, check.detail.empty() ? "" : " — ",
                    check.detail.c_str());
        std::fflush(stdout);
        failures += check.ok ? 0 : 1;
    }
    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
    } else {
        std::printf("all %zu criteria passed\n", criteria.size());
    }
    return failures;
}

#include "scene/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "scene/rng.hpp"
#include "scene/serial.hpp"

namespace scene {

void TrainConfig::validate() const {
    if (lr <= 0.0) {
        throw ValueError("train: lr must be positive");
    }
    if (epochs < 1 || batch_size < 1) {
        throw ValueError("train: epochs and batch_size must be positive");
    }
    if (patch_size < 16 || patch_size % 16 != 0) {
        throw ValueError("train: patch_size must be a positive multiple of 16");
    }
    if (steps_per_epoch < 0 || checkpoint_every < 0) {
        throw ValueError("train: step counts must be non-negative");
    }
    weights.validate();
    proxy.validate();
}

Batch sample_batch(std::span<const Tensor> frames, const TrainConfig& cfg, std::int64_t step) {
    if (frames.empty()) {
        throw ValueError("sample_batch: empty dataset");
    }
    const std::int64_t p = cfg.patch_size;
    for (const Tensor& f : frames) {
        if (f.shape().h < p || f.shape().w < p) {
            throw DimensionError("sample_batch: frame " + f.shape().str() +
                                 " smaller than patch size " + std::to_string(p));
        }
    }
    Rng rng(mix_seeds(cfg.seed, static_cast<std::uint64_t>(step)));
    Batch batch;
    batch.frames = Tensor({cfg.batch_size, 3, p, p});
    for (std::int64_t b = 0; b < cfg.batch_size; ++b) {
        const auto fi = static_cast<std::int64_t>(rng.below(frames.size()));
        const Tensor& frame = frames[static_cast<std::size_t>(fi)];
        const auto [n, c, h, w] = frame.shape();
        const std::int64_t y0 =
            cfg.random_crop && h > p ? static_cast<std::int64_t>(rng.below(h - p + 1)) : 0;
        const std::int64_t x0 =
            cfg.random_crop && w > p ? static_cast<std::int64_t>(rng.below(w - p + 1)) : 0;
        const bool fh = cfg.hflip && rng.coin();
        const bool fv = cfg.vflip && rng.coin();
        for (std::int64_t cc = 0; cc < 3; ++cc) {
            for (std::int64_t y = 0; y < p; ++y) {
                const std::int64_t sy = y0 + (fv ? p - 1 - y : y);
                for (std::int64_t x = 0; x < p; ++x) {
                    const std::int64_t sx = x0 + (fh ? p - 1 - x : x);
                    batch.frames.at(b, cc, y, x) = frame.at(0, cc, sy, sx);
                }
            }
        }
        batch.indices.push_back(fi);
    }
    return batch;
}

LossBreakdown train_step(const Batch& batch, SceneParams& params, TrainState& state,
                         const EmbeddingProvider& provider, const TrainConfig& cfg) {
    Tape t;
    SceneVars vars = to_tape(t, params, /*trainable=*/true);
    Var input = t.constant(batch.frames);
    Var embedding = t.constant(provider.embed(batch.frames, batch.indices));

    Var enhanced = scene_forward(t, input, vars, embedding);
    ProxyVars prox = proxy_forward(t, enhanced, cfg.proxy);
    const MsSsimPerceptualLoss perceptual(cfg.msssim_scales);
    LossVars loss =
        total_loss(t, input, enhanced, prox.image, prox.symbols, cfg.weights, &perceptual);

    t.backward(loss.total);

    std::vector<ParamRef> refs = params.param_refs();
    const std::vector<Var> leaf_vars = param_vars(vars);
    for (std::size_t i = 0; i < refs.size(); ++i) {
        refs[i].tensor->zero_grad();
        refs[i].tensor->accumulate_grad(t.grad(leaf_vars[i]).data());
    }
    adamw_step(refs, state.opt,
               {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay});
    state.step += 1;
    return loss.values;
}

// ---- optimizer-state sidecar (SCNS) -----------------------------------------

void save_train_state(const TrainState& state, SceneParams& params, const std::string& path) {
    ByteWriter w;
    w.magic("SCNS");
    w.u32(1);
    w.u64(static_cast<std::uint64_t>(state.step));
    w.u64(static_cast<std::uint64_t>(state.opt.step));
    std::vector<ParamRef> refs = params.param_refs();
    w.u32(static_cast<std::uint32_t>(refs.size()));
    if (state.opt.initialized() && state.opt.m.size() != refs.size()) {
        throw ValueError("train state does not match parameter list");
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto numel = static_cast<std::uint64_t>(refs[i].tensor->numel());
        w.u64(numel);
        if (state.opt.initialized()) {
            w.f64_span(state.opt.m[i]);
            w.f64_span(state.opt.v[i]);
        } else {
            const std::vector<double> zeros(numel, 0.0);
            w.f64_span(zeros);
            w.f64_span(zeros);
        }
    }
    w.finish_crc();
    w.write_file(path);
}

TrainState load_train_state(const std::string& path, SceneParams& params) {
    ByteReader r = ByteReader::from_file(path);
    r.check_crc();
    r.expect_magic("SCNS");
    const std::uint32_t version = r.u32();
    if (version != 1) {
        throw IntegrityError(path + ": unsupported train state version " +
                             std::to_string(version));
    }
    TrainState state;
    state.step = static_cast<std::int64_t>(r.u64());
    state.opt.step = static_cast<std::int64_t>(r.u64());
    std::vector<ParamRef> refs = params.param_refs();
    const std::uint32_t count = r.u32();
    if (count != refs.size()) {
        throw IntegrityError(path + ": has " + std::to_string(count) + " parameters, model has " +
                             std::to_string(refs.size()));
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const std::uint64_t numel = r.u64();
        if (numel != static_cast<std::uint64_t>(refs[i].tensor->numel())) {
            throw IntegrityError(path + ": parameter " + refs[i].name + " size mismatch");
        }
        std::vector<double> m(numel), v(numel);
        r.f64_span(m);
        r.f64_span(v);
        state.opt.m.push_back(std::move(m));
        state.opt.v.push_back(std::move(v));
    }
    if (!r.at_crc_tail()) {
        throw IntegrityError(path + ": trailing bytes");
    }
    return state;
}

// ---- full loop ---------------------------------------------------------------

SceneParams train(const ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::span<const Tensor> dataset_frames, const EmbeddingProvider& provider,
                  const std::string& resume_from) {
    model_cfg.validate();
    cfg.validate();
    if (dataset_frames.empty()) {
        throw ValueError("train: dataset is empty");
    }
    if (provider.embed_dim() != model_cfg.embed_dim) {
        throw DimensionError("train: provider embed_dim " + std::to_string(provider.embed_dim()) +
                             " != model embed_dim " + std::to_string(model_cfg.embed_dim));
    }

    SceneParams params =
        resume_from.empty() ? SceneParams::init(model_cfg, cfg.seed) : load_checkpoint(resume_from);
    if (!(params.config == model_cfg)) {
        throw ValueError("train: resume checkpoint config differs from the requested model");
    }
    TrainState state;
    if (!resume_from.empty()) {
        state = load_train_state(resume_from + ".state", params);
    }

    const std::int64_t frames = static_cast<std::int64_t>(dataset_frames.size());
    const std::int64_t steps_per_epoch =
        cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch
                                : (frames + cfg.batch_size - 1) / cfg.batch_size;
    const std::int64_t total_steps = cfg.epochs * steps_per_epoch;

    std::ofstream log(cfg.log_path, resume_from.empty() ? std::ios::trunc : std::ios::app);
    if (!log) {
        throw IoError("cannot open training log: " + cfg.log_path);
    }
    if (resume_from.empty()) {
        log << "step,perceptual,bitrate,pre,post,total,ms\n";
    }

    char line[256];
    for (std::int64_t step = state.step; step < total_steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        const Batch batch = sample_batch(dataset_frames, cfg, step);
        const LossBreakdown bd = train_step(batch, params, state, provider, cfg);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f\n",
                      static_cast<long long>(step), bd.perceptual, bd.bitrate, bd.pre, bd.post,
                      bd.total, ms);
        log << line;
        log.flush();

        if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0 &&
            state.step < total_steps) {
            save_checkpoint(params, cfg.checkpoint_path);
            save_train_state(state, params, cfg.checkpoint_path + ".state");
        }
    }

    save_checkpoint(params, cfg.checkpoint_path);
    save_train_state(state, params, cfg.checkpoint_path + ".state");
    return params;
}

}  // namespace scene

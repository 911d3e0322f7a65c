#pragma once

#include "scene/adamw.hpp"
#include "scene/loss.hpp"
#include "scene/model.hpp"
#include "scene/proxy.hpp"
#include "scene/semantics.hpp"

namespace scene {

struct TrainConfig {
    double lr = 1e-3;
    std::int64_t epochs = 30;
    std::int64_t batch_size = 8;
    std::int64_t patch_size = 256;  // divisible by 16 (unshuffle + 8x8 blocks)
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
    bool hflip = true;
    bool vflip = true;
    bool random_crop = true;
    std::int64_t steps_per_epoch = 0;   // 0: ceil(frames / batch_size)
    std::int64_t checkpoint_every = 0;  // steps; 0: only at the end
    int msssim_scales = 5;
    std::string data_dir;
    std::string checkpoint_path = "scene_checkpoint.scn1";
    std::string log_path = "train_log.csv";
    LossWeights weights;
    ProxyConfig proxy;

    void validate() const;
};

// Optimizer moments + global step, serialized as a sidecar (SCNS) next to
// the checkpoint so a resumed run replays the uninterrupted one exactly.
struct TrainState {
    AdamwState opt;
    std::int64_t step = 0;
};

void save_train_state(const TrainState& state, SceneParams& params, const std::string& path);
TrainState load_train_state(const std::string& path, SceneParams& params);

struct Batch {
    Tensor frames;  // (B, 3, P, P)
    std::vector<std::int64_t> indices;
};

// Patch sampling for one step: frame choice, crop offsets and flips all
// derive from mix_seeds(seed, step), so any step is reproducible in
// isolation. Flips apply independently with probability 1/2.
Batch sample_batch(std::span<const Tensor> frames, const TrainConfig& cfg, std::int64_t step);

// Forward through model and proxy, Eq-style multi-stage loss, backward,
// one AdamW step. Deterministic per (params, state, batch, config).
LossBreakdown train_step(const Batch& batch, SceneParams& params, TrainState& state,
                         const EmbeddingProvider& provider, const TrainConfig& cfg);

// Full loop: epochs * steps_per_epoch steps over the dataset frames, CSV log
// `step,perceptual,bitrate,pre,post,total,ms`, periodic + final checkpoints.
// resume_from loads checkpoint + sidecar and continues at the saved step.
SceneParams train(const ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::span<const Tensor> dataset_frames, const EmbeddingProvider& provider,
                  const std::string& resume_from = "");

}  // namespace scene

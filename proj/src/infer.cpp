#include "scene/infer.hpp"

#include "scene/ops.hpp"

namespace scene {

Tensor enhance_frames(const Tensor& frames, SceneParams& params,
                      const EmbeddingProvider& provider, std::span<const std::int64_t> indices) {
    if (provider.embed_dim() != params.config.embed_dim) {
        throw DimensionError("enhance: provider embed_dim " +
                             std::to_string(provider.embed_dim()) + " != model embed_dim " +
                             std::to_string(params.config.embed_dim));
    }
    const Tensor embedding = provider.embed(frames, indices);
    Tape t;
    SceneVars vars = to_tape(t, params, /*trainable=*/false);
    Var out = scene_forward(t, t.constant(frames), vars, t.constant(embedding));
    return ops::clamp01(t.value(out));
}

VideoClip enhance_clip(const VideoClip& input, SceneParams& params,
                       const EmbeddingProvider& provider) {
    input.validate();
    VideoClip out;
    out.fps_num = input.fps_num;
    out.fps_den = input.fps_den;
    for (std::size_t i = 0; i < input.frames.size(); ++i) {
        const std::int64_t idx[] = {static_cast<std::int64_t>(i)};
        out.frames.push_back(enhance_frames(input.frames[i], params, provider, idx));
    }
    return out;
}

}  // namespace scene

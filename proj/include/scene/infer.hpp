#pragma once

#include "scene/model.hpp"
#include "scene/semantics.hpp"
#include "scene/video.hpp"

namespace scene {

// Inference: scene_forward followed by a [0, 1] clamp. This translation unit
// deliberately depends on the model and embeddings only — the codec proxy is
// a training-time device and is unreachable from here.
Tensor enhance_frames(const Tensor& frames, SceneParams& params,
                      const EmbeddingProvider& provider, std::span<const std::int64_t> indices);

VideoClip enhance_clip(const VideoClip& input, SceneParams& params,
                       const EmbeddingProvider& provider);

}  // namespace scene

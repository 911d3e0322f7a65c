#pragma once

#include "scene/video.hpp"

namespace scene {

// Deterministic synthetic test clip: drifting gradient, sinusoidal texture,
// a moving bright blob and a little seeded noise. Compressible but not
// trivial, so QP ladders behave like they do on natural content.
VideoClip make_synthetic_clip(std::int64_t frame_count, std::int64_t height, std::int64_t width,
                              std::uint64_t seed);

}  // namespace scene

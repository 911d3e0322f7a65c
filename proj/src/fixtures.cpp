#include "scene/fixtures.hpp"

#include <cmath>
#include <numbers>

#include "scene/rng.hpp"

namespace scene {

VideoClip make_synthetic_clip(std::int64_t frame_count, std::int64_t height, std::int64_t width,
                              std::uint64_t seed) {
    if (frame_count < 1 || height < 1 || width < 1) {
        throw ValueError("make_synthetic_clip: sizes must be positive");
    }
    VideoClip clip;
    clip.fps_num = 30;
    clip.fps_den = 1;
    const double pi = std::numbers::pi;
    for (std::int64_t t = 0; t < frame_count; ++t) {
        Rng rng(mix_seeds(seed, static_cast<std::uint64_t>(t)));
        Tensor frame({1, 3, height, width});
        const double phase = 0.35 * static_cast<double>(t);
        const double bx = (0.25 + 0.5 * (static_cast<double>(t) / std::max<std::int64_t>(
                                                                      frame_count - 1, 1))) *
                          static_cast<double>(width);
        const double by = 0.5 * static_cast<double>(height);
        for (std::int64_t c = 0; c < 3; ++c) {
            for (std::int64_t y = 0; y < height; ++y) {
                for (std::int64_t x = 0; x < width; ++x) {
                    const double fx = static_cast<double>(x) / static_cast<double>(width);
                    const double fy = static_cast<double>(y) / static_cast<double>(height);
                    double v = 0.35 + 0.3 * (fx + fy) / 2.0;
                    v += 0.12 * std::sin(2.0 * pi * (3.0 * fx + 2.0 * fy) + phase +
                                         0.8 * static_cast<double>(c));
                    const double dx = (static_cast<double>(x) - bx) / (0.12 * width);
                    const double dy = (static_cast<double>(y) - by) / (0.12 * height);
                    v += 0.25 * std::exp(-(dx * dx + dy * dy)) * (c == 0 ? 1.0 : 0.6);
                    v += 0.02 * (rng.uniform() - 0.5);
                    frame.at(0, c, y, x) = std::clamp(v, 0.0, 1.0);
                }
            }
        }
        clip.frames.push_back(std::move(frame));
    }
    return clip;
}

}  // namespace scene

#pragma once

#include <array>

#include "scene/tape.hpp"

namespace scene {

// Wang et al. multi-scale SSIM: 11x11 Gaussian window (sigma 1.5), data
// range 1, per-scale exponents below. Local statistics use valid windows
// (no padding); scales are linked by 2x2 mean pooling.
inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Requesting more scales than min(H, W) supports (16 * 2^(scales-1)) silently
// drops to the largest feasible count with renormalized weights; the count
// actually used is written to *scales_used. Inputs smaller than 16 in either
// spatial dim are an error.
Var ms_ssim(Tape& t, Var a, Var b, int scales = 5, int* scales_used = nullptr);

// Forward-only convenience wrapper.
double ms_ssim(const Tensor& a, const Tensor& b, int scales = 5, int* scales_used = nullptr);

}  // namespace scene

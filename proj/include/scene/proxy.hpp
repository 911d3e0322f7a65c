#pragma once

#include <array>

#include "scene/tape.hpp"

namespace scene {

enum class RoundingMode { straight_through, soft };

// ITU T.81 Annex K luminance quantization table.
inline constexpr std::array<double, 64> kAnnexKLuma{
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

// Channels are processed independently with the luminance table: the proxy
// models transform-quantization distortion, it is not a JPEG codec (no color
// transform, no chroma subsampling, no entropy coding).
struct ProxyConfig {
    int quality = 50;  // 1..100, IJG scaling rule
    RoundingMode rounding = RoundingMode::straight_through;
    double tau = 1.0;  // soft-rounding blend, (0, 1]
    std::array<double, 64> luma_quant_table = kAnnexKLuma;
    static constexpr int block_size = 8;

    void validate() const;
};

// Quality-scaled table: scale = 5000/q (q < 50) else 200 - 2q;
// entry' = clamp(round(entry * scale / 100), 1, 255).
std::array<double, 64> scaled_quant_table(const ProxyConfig& cfg);

// Geometry of a blockified image (padding uses symmetric reflection).
struct BlockGrid {
    TensorShape image_shape;
    std::int64_t blocks_y = 0;
    std::int64_t blocks_x = 0;
};

// (N, C, H, W) -> (N, C*by*bx, 8, 8); block channel = (c*by + y)*bx + x,
// i.e. row-major blocks within each image channel.
Var blockify(Tape& t, Var image, BlockGrid* grid_out = nullptr);
Var deblockify(Tape& t, Var blocks, const BlockGrid& grid);

// Orthonormal 2-D DCT-II on each 8x8 block; constant block v -> DC = 8v.
Var dct8x8(Tape& t, Var blocks);
Var idct8x8(Tape& t, Var blocks);

// q = round(coeff / table') with the configured differentiable rounding:
//   straight_through: exact round forward, identity gradient;
//   soft:             q = u - tau * sin(2*pi*u) / (2*pi),  u = coeff / table'.
Var quantize(Tape& t, Var coeff, const ProxyConfig& cfg);
Var dequantize(Tape& t, Var q, const ProxyConfig& cfg);

// Mean over symbols of log2(1 + |q|). With straight-through rounding the
// gradient through q is zero by construction; soft mode makes it useful.
Var bitrate_estimate(Tape& t, Var q);

struct ProxyVars {
    Var image;    // distorted image, same shape as input
    Var symbols;  // quantized coefficients feeding the bitrate term
};

// Level shift to x*255 - 128, blockify, DCT, quantize/dequantize, inverse.
// Nominal input domain is [0, 1]; values slightly outside (unclamped
// training outputs) pass through the same affine chain.
ProxyVars proxy_forward(Tape& t, Var image, const ProxyConfig& cfg);

// Forward-only convenience.
struct ProxyResult {
    Tensor image;
    Tensor symbols;
};
ProxyResult proxy_apply(const Tensor& image, const ProxyConfig& cfg);
double bitrate_estimate(const Tensor& symbols);

}  // namespace scene

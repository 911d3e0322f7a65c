#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scene/tensor.hpp"

namespace scene {

// Frames are full-range RGB doubles, nominally [0, 1]. Reading Y4M does not
// clamp, so out-of-gamut YCbCr survives a read->write round trip bit-exactly;
// writers that quantize to 8 bits (Y4M, PNG) clamp at that point.
struct VideoClip {
    std::vector<Tensor> frames;  // each (1, 3, H, W)
    std::int64_t fps_num = 30;
    std::int64_t fps_den = 1;

    void validate() const;
    std::int64_t width() const { return frames.empty() ? 0 : frames[0].shape().w; }
    std::int64_t height() const { return frames.empty() ? 0 : frames[0].shape().h; }
    double duration_sec() const {
        return static_cast<double>(frames.size()) * fps_den / static_cast<double>(fps_num);
    }
};

// BT.709 limited-range 8-bit YCbCr:
//   Y' = 0.2126 R + 0.7152 G + 0.0722 B
//   Cb = (B - Y') / 1.8556,  Cr = (R - Y') / 1.5748
//   y = 16 + 219 Y',  cb = 128 + 224 Cb,  cr = 128 + 224 Cr
// quantized round-half-up and clamped to [0, 255].
struct YCbCrFrame {
    std::int64_t width = 0;
    std::int64_t height = 0;
    std::vector<std::uint8_t> y, cb, cr;  // full-resolution planes
};

YCbCrFrame rgb_to_ycbcr(const Tensor& frame);
Tensor ycbcr_to_rgb(const YCbCrFrame& f);  // exact inverse up to quantization

// Y4M with C444 output; C444 and C420 (chroma replicated on read) accepted.
void write_y4m(const VideoClip& clip, const std::string& path);
VideoClip read_y4m(const std::string& path);

// 8-bit RGB PNG.
void write_png(const Tensor& frame, const std::string& path);
Tensor read_png(const std::string& path);

// Directory of *.png frames in lexicographic order.
VideoClip read_png_sequence(const std::string& dir, std::int64_t fps_num = 30,
                            std::int64_t fps_den = 1);
void write_png_sequence(const VideoClip& clip, const std::string& dir);

}  // namespace scene

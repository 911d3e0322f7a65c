#include "scene/video.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace scene {

namespace {

constexpr double kKr = 0.2126;
constexpr double kKb = 0.0722;
constexpr double kKg = 1.0 - kKr - kKb;
constexpr double kCrScale = 2.0 * (1.0 - kKr);  // 1.5748
constexpr double kCbScale = 2.0 * (1.0 - kKb);  // 1.8556

std::uint8_t quantize8(double v) {
    const double r = std::floor(v + 0.5);  // round half up
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

}  // namespace

void VideoClip::validate() const {
    if (frames.empty()) {
        throw ValueError("clip has no frames");
    }
    if (fps_num <= 0 || fps_den <= 0) {
        throw ValueError("clip frame rate must be positive");
    }
    const TensorShape s = frames[0].shape();
    if (s.n != 1 || s.c != 3) {
        throw DimensionError("clip frames must be (1, 3, H, W), got " + s.str());
    }
    for (const Tensor& f : frames) {
        if (!(f.shape() == s)) {
            throw DimensionError("clip frames must all share one shape");
        }
    }
}

YCbCrFrame rgb_to_ycbcr(const Tensor& frame) {
    const auto [n, c, h, w] = frame.shape();
    if (n != 1 || c != 3) {
        throw DimensionError("rgb_to_ycbcr: expected (1, 3, H, W), got " + frame.shape().str());
    }
    YCbCrFrame out;
    out.width = w;
    out.height = h;
    out.y.resize(static_cast<std::size_t>(h * w));
    out.cb.resize(static_cast<std::size_t>(h * w));
    out.cr.resize(static_cast<std::size_t>(h * w));
    const double* r = frame.data().data();
    const double* g = r + h * w;
    const double* b = g + h * w;
    for (std::int64_t i = 0; i < h * w; ++i) {
        const double yp = kKr * r[i] + kKg * g[i] + kKb * b[i];
        const double cb = (b[i] - yp) / kCbScale;
        const double cr = (r[i] - yp) / kCrScale;
        out.y[static_cast<std::size_t>(i)] = quantize8(16.0 + 219.0 * yp);
        out.cb[static_cast<std::size_t>(i)] = quantize8(128.0 + 224.0 * cb);
        out.cr[static_cast<std::size_t>(i)] = quantize8(128.0 + 224.0 * cr);
    }
    return out;
}

Tensor ycbcr_to_rgb(const YCbCrFrame& f) {
    Tensor out({1, 3, f.height, f.width});
    double* r = out.data().data();
    double* g = r + f.height * f.width;
    double* b = g + f.height * f.width;
    for (std::int64_t i = 0; i < f.height * f.width; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double yp = (f.y[ui] - 16.0) / 219.0;
        const double cb = (f.cb[ui] - 128.0) / 224.0;
        const double cr = (f.cr[ui] - 128.0) / 224.0;
        r[i] = yp + kCrScale * cr;
        b[i] = yp + kCbScale * cb;
        g[i] = (yp - kKr * r[i] - kKb * b[i]) / kKg;
    }
    return out;
}

void write_y4m(const VideoClip& clip, const std::string& path) {
    clip.validate();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open for writing: " + path);
    }
    f << "YUV4MPEG2 W" << clip.width() << " H" << clip.height() << " F" << clip.fps_num << ":"
      << clip.fps_den << " Ip A1:1 C444\n";
    for (const Tensor& frame : clip.frames) {
        const YCbCrFrame yuv = rgb_to_ycbcr(frame);
        f << "FRAME\n";
        f.write(reinterpret_cast<const char*>(yuv.y.data()),
                static_cast<std::streamsize>(yuv.y.size()));
        f.write(reinterpret_cast<const char*>(yuv.cb.data()),
                static_cast<std::streamsize>(yuv.cb.size()));
        f.write(reinterpret_cast<const char*>(yuv.cr.data()),
                static_cast<std::streamsize>(yuv.cr.size()));
    }
    if (!f) {
        throw IoError("short write: " + path);
    }
}

VideoClip read_y4m(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open: " + path);
    }
    std::string header;
    if (!std::getline(f, header)) {
        throw IntegrityError(path + ": missing Y4M header");
    }
    if (header.rfind("YUV4MPEG2", 0) != 0) {
        throw IntegrityError(path + ": not a YUV4MPEG2 stream");
    }

    std::int64_t w = 0, h = 0, fps_num = 0, fps_den = 0;
    std::string chroma = "420";
    std::size_t pos = 9;
    while (pos < header.size()) {
        if (header[pos] == ' ') {
            ++pos;
            continue;
        }
        const std::size_t end = header.find(' ', pos);
        const std::string tok = header.substr(pos, end == std::string::npos ? end : end - pos);
        pos = end == std::string::npos ? header.size() : end;
        if (tok.empty()) {
            continue;
        }
        switch (tok[0]) {
            case 'W': w = std::stoll(tok.substr(1)); break;
            case 'H': h = std::stoll(tok.substr(1)); break;
            case 'F': {
                const auto colon = tok.find(':');
                if (colon == std::string::npos) {
                    throw IntegrityError(path + ": malformed frame rate '" + tok + "'");
                }
                fps_num = std::stoll(tok.substr(1, colon - 1));
                fps_den = std::stoll(tok.substr(colon + 1));
                break;
            }
            case 'C': chroma = tok.substr(1); break;
            default: break;  // interlace/aspect/extension tokens ignored
        }
    }
    if (w <= 0 || h <= 0 || fps_num <= 0 || fps_den <= 0) {
        throw IntegrityError(path + ": header missing W/H/F fields: '" + header + "'");
    }
    bool is444 = false;
    if (chroma.rfind("444", 0) == 0) {
        is444 = true;
    } else if (chroma.rfind("420", 0) == 0) {
        is444 = false;
        if (w % 2 != 0 || h % 2 != 0) {
            throw IntegrityError(path + ": C420 with odd dimensions");
        }
    } else {
        throw IntegrityError(path + ": unsupported chroma mode C" + chroma);
    }

    const std::int64_t luma_size = w * h;
    const std::int64_t chroma_size = is444 ? luma_size : luma_size / 4;

    VideoClip clip;
    clip.fps_num = fps_num;
    clip.fps_den = fps_den;

    std::string frame_line;
    while (std::getline(f, frame_line)) {
        if (frame_line.rfind("FRAME", 0) != 0) {
            throw IntegrityError(path + ": expected FRAME marker, got '" + frame_line + "'");
        }
        YCbCrFrame yuv;
        yuv.width = w;
        yuv.height = h;
        yuv.y.resize(static_cast<std::size_t>(luma_size));
        std::vector<std::uint8_t> cb(static_cast<std::size_t>(chroma_size));
        std::vector<std::uint8_t> cr(static_cast<std::size_t>(chroma_size));
        f.read(reinterpret_cast<char*>(yuv.y.data()), luma_size);
        f.read(reinterpret_cast<char*>(cb.data()), chroma_size);
        f.read(reinterpret_cast<char*>(cr.data()), chroma_size);
        if (!f) {
            const auto got = f.gcount();
            throw IntegrityError(path + ": truncated frame " + std::to_string(clip.frames.size()) +
                                 ", expected " + std::to_string(luma_size + 2 * chroma_size) +
                                 " plane bytes, last read returned " + std::to_string(got));
        }
        if (is444) {
            yuv.cb = std::move(cb);
            yuv.cr = std::move(cr);
        } else {
            // chroma replicated to full resolution
            yuv.cb.resize(static_cast<std::size_t>(luma_size));
            yuv.cr.resize(static_cast<std::size_t>(luma_size));
            for (std::int64_t y = 0; y < h; ++y) {
                for (std::int64_t x = 0; x < w; ++x) {
                    const std::size_t src = static_cast<std::size_t>((y / 2) * (w / 2) + x / 2);
                    const std::size_t dst = static_cast<std::size_t>(y * w + x);
                    yuv.cb[dst] = cb[src];
                    yuv.cr[dst] = cr[src];
                }
            }
        }
        clip.frames.push_back(ycbcr_to_rgb(yuv));
    }
    if (clip.frames.empty()) {
        throw IntegrityError(path + ": no frames");
    }
    return clip;
}

// ---- PNG -------------------------------------------------------------------

void write_png(const Tensor& frame, const std::string& path) {
    const auto [n, c, h, w] = frame.shape();
    if (n != 1 || c != 3) {
        throw DimensionError("write_png: expected (1, 3, H, W), got " + frame.shape().str());
    }
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) {
        throw IoError("cannot open for writing: " + path);
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("libpng failure writing " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
    const double* r = frame.data().data();
    const double* g = r + h * w;
    const double* b = g + h * w;
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            row[static_cast<std::size_t>(3 * x + 0)] = quantize8(255.0 * r[y * w + x]);
            row[static_cast<std::size_t>(3 * x + 1)] = quantize8(255.0 * g[y * w + x]);
            row[static_cast<std::size_t>(3 * x + 2)] = quantize8(255.0 * b[y * w + x]);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Tensor read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) {
        throw IoError("cannot open: " + path);
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("libpng failure reading " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    // normalize anything to 8-bit RGB
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError(path + ": unexpected PNG row layout");
    }

    Tensor out({1, 3, static_cast<std::int64_t>(h), static_cast<std::int64_t>(w)});
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
    double* r = out.data().data();
    double* g = r + static_cast<std::int64_t>(h) * w;
    double* b = g + static_cast<std::int64_t>(h) * w;
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x) {
            r[y * w + x] = row[3 * x + 0] / 255.0;
            g[y * w + x] = row[3 * x + 1] / 255.0;
            b[y * w + x] = row[3 * x + 2] / 255.0;
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return out;
}

VideoClip read_png_sequence(const std::string& dir, std::int64_t fps_num, std::int64_t fps_den) {
    namespace fs = std::filesystem;
    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png") {
            paths.push_back(e.path().string());
        }
    }
    if (paths.empty()) {
        throw IoError("no .png frames in " + dir);
    }
    std::sort(paths.begin(), paths.end());
    VideoClip clip;
    clip.fps_num = fps_num;
    clip.fps_den = fps_den;
    for (const auto& p : paths) {
        clip.frames.push_back(read_png(p));
    }
    clip.validate();
    return clip;
}

void write_png_sequence(const VideoClip& clip, const std::string& dir) {
    clip.validate();
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    char name[32];
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "frame_%06zu.png", i);
        write_png(clip.frames[i], (fs::path(dir) / name).string());
    }
}

}  // namespace scene

#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "scene/video.hpp"

namespace scene {

enum class Codec { h264, h265 };

std::string codec_name(Codec c);
Codec parse_codec(const std::string& s);

struct EncoderJob {
    Codec codec = Codec::h264;
    int qp = 30;
    std::string preset = "medium";
};

// Subprocess contract to the external encoder. Templates are argv fragments
// with {input}, {output}, {qp}, {preset} placeholders; the probed binary is
// prepended. Defaults speak the ffmpeg CLI dialect, which the bundled
// scene-y4mcodec tool also accepts, so either binary satisfies them.
struct HarnessConfig {
    std::string encoder_bin;  // empty: probe ffmpeg, then the bundled tool
    double timeout_sec = 120.0;
    int parallel_jobs = 2;
    std::vector<std::string> h264_encode_template = {"-y", "-i",     "{input}",  "-c:v",
                                                     "libx264", "-qp", "{qp}", "-preset",
                                                     "{preset}", "{output}"};
    std::vector<std::string> h265_encode_template = {"-y", "-i",     "{input}",  "-c:v",
                                                     "libx265", "-qp", "{qp}", "-preset",
                                                     "{preset}", "{output}"};
    std::vector<std::string> decode_template = {"-y", "-i", "{input}", "{output}"};
};

// Resolves the encoder binary: the configured one (must exist), else ffmpeg
// on PATH, else scene-y4mcodec beside the running executable. Verifies it
// answers `-version`. Throws EncoderError with everything that was tried.
std::string probe_encoder(const HarnessConfig& cfg);

class EncoderHarness {
public:
    explicit EncoderHarness(HarnessConfig cfg);

    const std::string& encoder_bin() const { return bin_; }
    const HarnessConfig& config() const { return cfg_; }

    struct Encoded {
        VideoClip decoded;
        double bitrate_kbps = 0.0;
        std::int64_t encoded_bytes = 0;
    };

    // Y4M -> bitstream -> Y4M inside workdir; bitrate from container size
    // and clip duration. Every subprocess argv is appended to the log.
    // Safe to call from several threads as long as workdirs are distinct.
    Encoded encode_decode(const VideoClip& clip, const EncoderJob& job,
                          const std::string& workdir) const;

    std::vector<std::string> invocation_log() const;

private:
    void log_invocation(const std::string& line) const;

    HarnessConfig cfg_;
    std::string bin_;
    mutable std::mutex log_mutex_;
    mutable std::vector<std::string> log_;
};

// ---- datasets ----------------------------------------------------------------

struct DatasetEntry {
    std::string name;
    VideoClip clip;
    bool validation = false;
};

struct Dataset {
    std::vector<DatasetEntry> entries;  // lexicographic by name

    std::vector<const DatasetEntry*> split(bool validation) const;
    // every frame of every training clip, clip-major; the index into this
    // vector is the frame's dataset position for embedding association
    std::vector<Tensor> training_frames() const;
};

// Loads *.y4m files and png-sequence subdirectories. Unreadable entries are
// skipped with a warning on stderr; an empty result is an error. Validation
// assignment: clips ranked by FNV-1a64(name), every 10th in hash order.
Dataset load_dataset(const std::string& dir);

std::uint64_t fnv1a64(const std::string& s);

}  // namespace scene

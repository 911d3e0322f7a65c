#include "scene/encoder.hpp"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "scene/subprocess.hpp"

namespace scene {

namespace fs = std::filesystem;

std::string codec_name(Codec c) { return c == Codec::h264 ? "h264" : "h265"; }

Codec parse_codec(const std::string& s) {
    if (s == "h264" || s == "avc") {
        return Codec::h264;
    }
    if (s == "h265" || s == "hevc") {
        return Codec::h265;
    }
    throw ValueError("unknown codec '" + s + "' (expected h264 or h265)");
}

namespace {

std::string self_directory() {
    char buf[4096];
    const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) {
        return {};
    }
    buf[n] = '\0';
    return fs::path(buf).parent_path().string();
}

bool answers_version(const std::string& bin) {
    try {
        const ProcessResult r = run_process({bin, "-version"}, 20.0);
        return r.exit_code == 0;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace

std::string probe_encoder(const HarnessConfig& cfg) {
    std::vector<std::string> tried;
    if (!cfg.encoder_bin.empty()) {
        if (answers_version(cfg.encoder_bin)) {
            return cfg.encoder_bin;
        }
        throw EncoderError("configured encoder '" + cfg.encoder_bin +
                           "' did not answer -version; fix harness.encoder_bin or leave it "
                           "empty to probe ffmpeg / the bundled scene-y4mcodec");
    }
    if (executable_on_path("ffmpeg") && answers_version("ffmpeg")) {
        return "ffmpeg";
    }
    tried.push_back("ffmpeg (PATH)");
    const std::string self_dir = self_directory();
    if (!self_dir.empty()) {
        const std::string bundled = (fs::path(self_dir) / "scene-y4mcodec").string();
        if (fs::exists(bundled) && answers_version(bundled)) {
            return bundled;
        }
        tried.push_back(bundled);
    }
    std::string msg = "no working video encoder found; tried:";
    for (const auto& t : tried) {
        msg += " " + t + ",";
    }
    msg.pop_back();
    msg += ". Install ffmpeg, build the scene-y4mcodec target, or set harness.encoder_bin.";
    throw EncoderError(msg);
}

EncoderHarness::EncoderHarness(HarnessConfig cfg) : cfg_(std::move(cfg)) {
    bin_ = probe_encoder(cfg_);
}

void EncoderHarness::log_invocation(const std::string& line) const {
    const std::lock_guard<std::mutex> lock(log_mutex_);
    log_.push_back(line);
}

std::vector<std::string> EncoderHarness::invocation_log() const {
    const std::lock_guard<std::mutex> lock(log_mutex_);
    return log_;
}

namespace {

std::vector<std::string> fill_template(const std::string& bin,
                                       const std::vector<std::string>& tmpl,
                                       const std::string& input, const std::string& output,
                                       const EncoderJob& job) {
    std::vector<std::string> argv{bin};
    for (std::string arg : tmpl) {
        auto replace = [&arg](const std::string& key, const std::string& value) {
            std::size_t p;
            while ((p = arg.find(key)) != std::string::npos) {
                arg.replace(p, key.size(), value);
            }
        };
        replace("{input}", input);
        replace("{output}", output);
        replace("{qp}", std::to_string(job.qp));
        replace("{preset}", job.preset);
        argv.push_back(std::move(arg));
    }
    return argv;
}

}  // namespace

EncoderHarness::Encoded EncoderHarness::encode_decode(const VideoClip& clip, const EncoderJob& job,
                                                      const std::string& workdir) const {
    clip.validate();
    fs::create_directories(workdir);
    const std::string in_path = (fs::path(workdir) / "input.y4m").string();
    const std::string bitstream =
        (fs::path(workdir) / ("encoded_" + codec_name(job.codec) + "_qp" +
                              std::to_string(job.qp) + ".mp4"))
            .string();
    const std::string dec_path = (fs::path(workdir) / "decoded.y4m").string();

    write_y4m(clip, in_path);

    const auto& tmpl = job.codec == Codec::h264 ? cfg_.h264_encode_template
                                                : cfg_.h265_encode_template;
    const auto enc_argv = fill_template(bin_, tmpl, in_path, bitstream, job);
    log_invocation(render_argv(enc_argv));
    const ProcessResult enc = run_process(enc_argv, cfg_.timeout_sec);
    if (enc.timed_out) {
        throw EncoderError("encoder timed out: " + render_argv(enc_argv));
    }
    if (enc.exit_code != 0) {
        throw EncoderError("encoder failed (exit " + std::to_string(enc.exit_code) +
                           "): " + render_argv(enc_argv) + "\nstderr:\n" + enc.std_err);
    }

    Encoded out;
    out.encoded_bytes = static_cast<std::int64_t>(fs::file_size(bitstream));
    out.bitrate_kbps =
        static_cast<double>(out.encoded_bytes) * 8.0 / clip.duration_sec() / 1000.0;

    const auto dec_argv = fill_template(bin_, cfg_.decode_template, bitstream, dec_path, job);
    log_invocation(render_argv(dec_argv));
    const ProcessResult dec = run_process(dec_argv, cfg_.timeout_sec);
    if (dec.timed_out) {
        throw EncoderError("decoder timed out: " + render_argv(dec_argv));
    }
    if (dec.exit_code != 0) {
        throw EncoderError("decoder failed (exit " + std::to_string(dec.exit_code) +
                           "): " + render_argv(dec_argv) + "\nstderr:\n" + dec.std_err);
    }
    out.decoded = read_y4m(dec_path);
    if (out.decoded.frames.size() != clip.frames.size()) {
        throw EncoderError("decode returned " + std::to_string(out.decoded.frames.size()) +
                           " frames, expected " + std::to_string(clip.frames.size()));
    }
    return out;
}

// ---- datasets ----------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::vector<const DatasetEntry*> Dataset::split(bool validation) const {
    std::vector<const DatasetEntry*> out;
    for (const auto& e : entries) {
        if (e.validation == validation) {
            out.push_back(&e);
        }
    }
    return out;
}

std::vector<Tensor> Dataset::training_frames() const {
    std::vector<Tensor> frames;
    for (const auto& e : entries) {
        if (e.validation) {
            continue;
        }
        for (const Tensor& f : e.clip.frames) {
            frames.push_back(f);
        }
    }
    return frames;
}

Dataset load_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw IoError("dataset directory does not exist: " + dir);
    }
    std::vector<std::pair<std::string, fs::path>> candidates;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".y4m") {
            candidates.emplace_back(e.path().filename().string(), e.path());
        } else if (e.is_directory()) {
            for (const auto& sub : fs::directory_iterator(e.path())) {
                if (sub.is_regular_file() && sub.path().extension() == ".png") {
                    candidates.emplace_back(e.path().filename().string(), e.path());
                    break;
                }
            }
        }
    }
    std::sort(candidates.begin(), candidates.end());

    Dataset ds;
    for (const auto& [name, path] : candidates) {
        try {
            DatasetEntry entry;
            entry.name = name;
            entry.clip = fs::is_directory(path) ? read_png_sequence(path.string())
                                                : read_y4m(path.string());
            ds.entries.push_back(std::move(entry));
        } catch (const Error& err) {
            std::cerr << "warning: skipping unreadable clip " << path << ": " << err.what()
                      << "\n";
        }
    }
    if (ds.entries.empty()) {
        throw IoError("dataset is empty: " + dir);
    }

    // validation = every 10th clip in hash order
    std::vector<std::size_t> order(ds.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ha = fnv1a64(ds.entries[a].name);
        const auto hb = fnv1a64(ds.entries[b].name);
        return ha != hb ? ha < hb : ds.entries[a].name < ds.entries[b].name;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (rank % 10 == 9) {
            ds.entries[order[rank]].validation = true;
        }
    }
    return ds;
}

}  // namespace scene

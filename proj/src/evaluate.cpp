#include "scene/evaluate.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "scene/infer.hpp"
#include "scene/msssim.hpp"

namespace scene {

namespace fs = std::filesystem;

double score_clip_msssim(const VideoClip& reference, const VideoClip& test, int scales) {
    reference.validate();
    test.validate();
    if (reference.frames.size() != test.frames.size()) {
        throw DimensionError("score: clips have different frame counts");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < reference.frames.size(); ++i) {
        acc += ms_ssim(test.frames[i], reference.frames[i], scales);
    }
    return acc / static_cast<double>(reference.frames.size());
}

namespace {

std::string substitute_qp(std::string pattern, int qp) {
    const std::string key = "{qp}";
    std::size_t p;
    while ((p = pattern.find(key)) != std::string::npos) {
        pattern.replace(p, key.size(), std::to_string(qp));
    }
    return pattern;
}

// Encodes and scores every ladder point. Points run concurrently up to the
// harness's parallel_jobs limit; each owns its directory, and the result
// vector is assembled by ladder index, so the outcome is order-independent.
std::vector<RdPoint> encode_ladder(const VideoClip& encode_input, const VideoClip& score_ref,
                                   const EncoderHarness& harness, const LadderSpec& ladder,
                                   const MetricSpec& metric, const std::string& label,
                                   const std::string& workdir) {
    if (ladder.qp_ladder.size() < 4) {
        throw ValueError("QP ladder needs at least 4 points, got " +
                         std::to_string(ladder.qp_ladder.size()));
    }
    if (metric.kind != "ms_ssim" && metric.kind != "external") {
        throw ValueError("unknown metric kind '" + metric.kind + "'");
    }
    const std::size_t n = ladder.qp_ladder.size();
    std::vector<RdPoint> points(n);
    std::vector<std::string> errors(n);

    std::mutex next_mutex;
    std::size_t next = 0;
    auto worker = [&] {
        while (true) {
            std::size_t i;
            {
                const std::lock_guard<std::mutex> lock(next_mutex);
                if (next >= n) {
                    return;
                }
                i = next++;
            }
            const int qp = ladder.qp_ladder[i];
            try {
                EncoderJob job{ladder.codec, qp, ladder.preset};
                const std::string point_dir =
                    (fs::path(workdir) / (label + "_" + codec_name(ladder.codec) + "_qp" +
                                          std::to_string(qp)))
                        .string();
                const auto encoded = harness.encode_decode(encode_input, job, point_dir);
                double score = 0.0;
                if (metric.kind == "ms_ssim") {
                    score = score_clip_msssim(score_ref, encoded.decoded, metric.msssim_scales);
                } else {
                    score = mean_external_score(
                        substitute_qp(metric.external_csv_pattern, qp),
                        static_cast<std::int64_t>(score_ref.frames.size()));
                }
                points[i] = {encoded.bitrate_kbps, score, label};
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    const int jobs = std::max(1, std::min<int>(harness.config().parallel_jobs,
                                               static_cast<int>(n)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < jobs; ++t) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    for (const std::string& e : errors) {
        if (!e.empty()) {
            throw EncoderError("ladder point failed: " + e);
        }
    }
    return points;
}

}  // namespace

RdCurve build_rd_curve(const VideoClip& source, const EncoderHarness& harness,
                       const LadderSpec& ladder, const MetricSpec& metric,
                       const std::string& label, const std::string& workdir) {
    return RdCurve::from_points(
        encode_ladder(source, source, harness, ladder, metric, label, workdir));
}

CompareReport compare_pipelines(const VideoClip& source, SceneParams& params,
                                const EmbeddingProvider& provider, const EncoderHarness& harness,
                                const LadderSpec& ladder, const MetricSpec& metric,
                                const std::string& workdir) {
    CompareReport report;
    report.anchor = RdCurve::from_points(
        encode_ladder(source, source, harness, ladder, metric, "anchor", workdir));

    // the enhanced stream is still scored against the pristine source
    const VideoClip enhanced = enhance_clip(source, params, provider);
    report.enhanced = RdCurve::from_points(
        encode_ladder(enhanced, source, harness, ladder, metric, "enhanced", workdir));
    report.bd = bd_rate(report.anchor, report.enhanced, ladder.interp);
    return report;
}

void write_rd_csv(const std::string& path, std::span<const RdCurve> curves) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw IoError("cannot open for writing: " + path);
    }
    f << "label,bitrate_kbps,metric\n";
    char buf[64];
    for (const RdCurve& curve : curves) {
        for (const RdPoint& p : curve.points) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g", p.bitrate_kbps, p.metric);
            f << p.label << "," << buf << "\n";
        }
    }
    if (!f) {
        throw IoError("short write: " + path);
    }
}

RdCurve read_rd_csv(const std::string& path, const std::string& label_filter) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("cannot open: " + path);
    }
    std::string line;
    if (!std::getline(f, line) || line.rfind("label,bitrate_kbps,metric", 0) != 0) {
        throw IntegrityError(path + ": expected header 'label,bitrate_kbps,metric'");
    }
    std::vector<RdPoint> points;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw IntegrityError(path + ":" + std::to_string(lineno) + ": malformed row");
        }
        RdPoint p;
        p.label = line.substr(0, c1);
        p.bitrate_kbps = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        p.metric = std::stod(line.substr(c2 + 1));
        if (label_filter.empty() || p.label == label_filter) {
            points.push_back(std::move(p));
        }
    }
    return RdCurve::from_points(std::move(points));
}

double mean_external_score(const std::string& csv_path, std::int64_t expected_frames) {
    std::ifstream f(csv_path);
    if (!f) {
        throw IoError("cannot open external metric CSV: " + csv_path);
    }
    std::string line;
    if (!std::getline(f, line) || line.rfind("frame_index,score", 0) != 0) {
        throw IntegrityError(csv_path + ": expected header 'frame_index,score'");
    }
    double acc = 0.0;
    std::int64_t count = 0;
    while (std::getline(f, line)) {
        if (line.empty()) {
            continue;
        }
        const auto c = line.find(',');
        if (c == std::string::npos) {
            throw IntegrityError(csv_path + ": malformed row '" + line + "'");
        }
        acc += std::stod(line.substr(c + 1));
        ++count;
    }
    if (count == 0) {
        throw IntegrityError(csv_path + ": no scores");
    }
    if (expected_frames > 0 && count != expected_frames) {
        throw IntegrityError(csv_path + ": has " + std::to_string(count) + " scores, expected " +
                             std::to_string(expected_frames));
    }
    return acc / static_cast<double>(count);
}

}  // namespace scene

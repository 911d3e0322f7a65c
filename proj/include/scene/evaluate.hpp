#pragma once

#include "scene/bdrate.hpp"
#include "scene/encoder.hpp"
#include "scene/model.hpp"
#include "scene/semantics.hpp"

namespace scene {

// Mean per-frame MS-SSIM of test against the pristine reference.
double score_clip_msssim(const VideoClip& reference, const VideoClip& test, int scales = 5);

struct MetricSpec {
    // "ms_ssim", or "external" with a per-ladder-point CSV of
    // frame_index,score rows; {qp} in the path selects the point's file.
    std::string kind = "ms_ssim";
    std::string external_csv_pattern;
    int msssim_scales = 5;
};

struct LadderSpec {
    Codec codec = Codec::h264;
    std::vector<int> qp_ladder = {20, 28, 36, 44};
    std::string preset = "medium";
    BdInterp interp = BdInterp::cubic;
};

RdCurve build_rd_curve(const VideoClip& source, const EncoderHarness& harness,
                       const LadderSpec& ladder, const MetricSpec& metric,
                       const std::string& label, const std::string& workdir);

struct CompareReport {
    RdCurve anchor;
    RdCurve enhanced;
    BdRateResult bd;
};

// Anchor: encode the source directly. Test: enhance every frame through the
// checkpoint, then encode. Both curves score against the original source.
CompareReport compare_pipelines(const VideoClip& source, SceneParams& params,
                                const EmbeddingProvider& provider, const EncoderHarness& harness,
                                const LadderSpec& ladder, const MetricSpec& metric,
                                const std::string& workdir);

// CSV: header `label,bitrate_kbps,metric`, one row per point.
void write_rd_csv(const std::string& path, std::span<const RdCurve> curves);
// Reads every row as one curve; label_filter narrows to matching rows.
RdCurve read_rd_csv(const std::string& path, const std::string& label_filter = "");

// Per-frame scores "frame_index,score" -> mean score.
double mean_external_score(const std::string& csv_path, std::int64_t expected_frames);

}  // namespace scene

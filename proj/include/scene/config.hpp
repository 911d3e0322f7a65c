#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene/encoder.hpp"
#include "scene/evaluate.hpp"
#include "scene/semantics.hpp"
#include "scene/trainer.hpp"

namespace scene {

struct EmbeddingsConfig {
    std::string provider = "toy";  // "toy" or "file"
    std::uint64_t seed = 7;
    std::string path;  // SEMB file for the file provider
};

struct EvalConfig {
    std::string codec = "h264";
    std::vector<int> ladder = {20, 28, 36, 44};
    std::string preset = "medium";
    std::string metric = "ms_ssim";  // or "external"
    std::string metric_csv;          // pattern with {qp} for external scores
    std::string interp = "cubic";    // or "pchip"
    int msssim_scales = 5;
    std::string workdir = "eval_work";

    LadderSpec ladder_spec() const;
    MetricSpec metric_spec() const;
};

struct AppConfig {
    ModelConfig model;
    TrainConfig train;  // includes weights + proxy groups
    EmbeddingsConfig embeddings;
    HarnessConfig harness;
    EvalConfig eval;
};

AppConfig default_config();

nlohmann::json to_json(const AppConfig& cfg);

// Strict: every key must exist in the schema, every value must match the
// default's JSON type. Throws ValueError naming the offending path.
AppConfig parse_config(const nlohmann::json& j);

// Defaults, overlaid with the optional config file, overlaid with
// `path.to.key=value` overrides (values parsed as JSON, falling back to
// string). Missing keys keep defaults; unknown keys are rejected.
AppConfig load_config(const std::string& config_path, const std::vector<std::string>& overrides);

// One line per config key: path, type, default. Backs `--help`.
std::string schema_help();

std::unique_ptr<EmbeddingProvider> make_provider(const AppConfig& cfg);

}  // namespace scene

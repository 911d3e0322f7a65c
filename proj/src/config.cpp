#include "scene/config.hpp"

#include <fstream>

namespace scene {

using nlohmann::json;

LadderSpec EvalConfig::ladder_spec() const {
    LadderSpec spec;
    spec.codec = parse_codec(codec);
    spec.qp_ladder = ladder;
    spec.preset = preset;
    if (interp == "cubic") {
        spec.interp = BdInterp::cubic;
    } else if (interp == "pchip") {
        spec.interp = BdInterp::pchip;
    } else {
        throw ValueError("eval.interp must be 'cubic' or 'pchip', got '" + interp + "'");
    }
    return spec;
}

MetricSpec EvalConfig::metric_spec() const {
    if (metric != "ms_ssim" && metric != "external") {
        throw ValueError("eval.metric must be 'ms_ssim' or 'external', got '" + metric + "'");
    }
    MetricSpec spec;
    spec.kind = metric;
    spec.external_csv_pattern = metric_csv;
    spec.msssim_scales = msssim_scales;
    return spec;
}

AppConfig default_config() { return AppConfig{}; }

json to_json(const AppConfig& cfg) {
    json j;
    j["model"] = {{"unshuffle_factor", cfg.model.unshuffle_factor},
                  {"block_channels", cfg.model.block_channels},
                  {"convs_per_block", cfg.model.convs_per_block},
                  {"num_base_kernels", cfg.model.num_base_kernels},
                  {"kernel_size", cfg.model.kernel_size},
                  {"control_hidden_dim", cfg.model.control_hidden_dim},
                  {"embed_dim", cfg.model.embed_dim},
                  {"input_channels", cfg.model.input_channels}};
    j["train"] = {{"lr", cfg.train.lr},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"patch_size", cfg.train.patch_size},
                  {"seed", cfg.train.seed},
                  {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},
                  {"eps", cfg.train.eps},
                  {"weight_decay", cfg.train.weight_decay},
                  {"hflip", cfg.train.hflip},
                  {"vflip", cfg.train.vflip},
                  {"random_crop", cfg.train.random_crop},
                  {"steps_per_epoch", cfg.train.steps_per_epoch},
                  {"checkpoint_every", cfg.train.checkpoint_every},
                  {"msssim_scales", cfg.train.msssim_scales},
                  {"data_dir", cfg.train.data_dir},
                  {"checkpoint_path", cfg.train.checkpoint_path},
                  {"log_path", cfg.train.log_path}};
    j["weights"] = {{"perceptual", cfg.train.weights.perceptual},
                    {"bitrate", cfg.train.weights.bitrate},
                    {"pre", cfg.train.weights.pre},
                    {"post", cfg.train.weights.post}};
    j["proxy"] = {{"quality", cfg.train.proxy.quality},
                  {"rounding", cfg.train.proxy.rounding == RoundingMode::straight_through
                                   ? "straight_through"
                                   : "soft"},
                  {"tau", cfg.train.proxy.tau},
                  {"quant_table", cfg.train.proxy.luma_quant_table}};
    j["embeddings"] = {{"provider", cfg.embeddings.provider},
                       {"seed", cfg.embeddings.seed},
                       {"path", cfg.embeddings.path}};
    j["harness"] = {{"encoder_bin", cfg.harness.encoder_bin},
                    {"timeout_sec", cfg.harness.timeout_sec},
                    {"parallel_jobs", cfg.harness.parallel_jobs},
                    {"h264_encode_template", cfg.harness.h264_encode_template},
                    {"h265_encode_template", cfg.harness.h265_encode_template},
                    {"decode_template", cfg.harness.decode_template}};
    j["eval"] = {{"codec", cfg.eval.codec},
                 {"ladder", cfg.eval.ladder},
                 {"preset", cfg.eval.preset},
                 {"metric", cfg.eval.metric},
                 {"metric_csv", cfg.eval.metric_csv},
                 {"interp", cfg.eval.interp},
                 {"msssim_scales", cfg.eval.msssim_scales},
                 {"workdir", cfg.eval.workdir}};
    return j;
}

namespace {

std::string type_name(const json& v) {
    if (v.is_boolean()) return "bool";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    if (v.is_object()) return "object";
    return v.type_name();
}

// Overlay `user` on `base`: keys must exist in base with matching types.
void merge_strict(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) {
        throw ValueError("config" + (path.empty() ? "" : " at " + path) + ": expected an object");
    }
    for (const auto& [key, value] : user.items()) {
        const std::string here = path.empty() ? key : path + "." + key;
        if (!base.contains(key)) {
            throw ValueError("config: unknown key '" + here + "'");
        }
        json& slot = base[key];
        if (slot.is_object()) {
            merge_strict(slot, value, here);
            continue;
        }
        const bool ok = (slot.is_number() && value.is_number()) ||
                        (slot.is_boolean() && value.is_boolean()) ||
                        (slot.is_string() && value.is_string()) ||
                        (slot.is_array() && value.is_array());
        if (!ok) {
            throw ValueError("config: key '" + here + "' expects " + type_name(slot) + ", got " +
                             type_name(value));
        }
        slot = value;
    }
}

template <typename T>
T field(const json& j, const char* group, const char* key) {
    try {
        return j.at(group).at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValueError(std::string("config: bad value at '") + group + "." + key +
                         "': " + e.what());
    }
}

void help_walk(const json& j, const std::string& path, std::string& out) {
    for (const auto& [key, value] : j.items()) {
        const std::string here = path.empty() ? key : path + "." + key;
        if (value.is_object()) {
            help_walk(value, here, out);
        } else {
            out += "  " + here + " (" + type_name(value) + ", default " + value.dump() + ")\n";
        }
    }
}

}  // namespace

AppConfig parse_config(const json& j) {
    AppConfig cfg;
    cfg.model.unshuffle_factor = field<std::int64_t>(j, "model", "unshuffle_factor");
    cfg.model.block_channels = field<std::int64_t>(j, "model", "block_channels");
    cfg.model.convs_per_block = field<std::int64_t>(j, "model", "convs_per_block");
    cfg.model.num_base_kernels = field<std::int64_t>(j, "model", "num_base_kernels");
    cfg.model.kernel_size = field<std::int64_t>(j, "model", "kernel_size");
    cfg.model.control_hidden_dim = field<std::int64_t>(j, "model", "control_hidden_dim");
    cfg.model.embed_dim = field<std::int64_t>(j, "model", "embed_dim");
    cfg.model.input_channels = field<std::int64_t>(j, "model", "input_channels");
    cfg.model.validate();

    cfg.train.lr = field<double>(j, "train", "lr");
    cfg.train.epochs = field<std::int64_t>(j, "train", "epochs");
    cfg.train.batch_size = field<std::int64_t>(j, "train", "batch_size");
    cfg.train.patch_size = field<std::int64_t>(j, "train", "patch_size");
    cfg.train.seed = field<std::uint64_t>(j, "train", "seed");
    cfg.train.beta1 = field<double>(j, "train", "beta1");
    cfg.train.beta2 = field<double>(j, "train", "beta2");
    cfg.train.eps = field<double>(j, "train", "eps");
    cfg.train.weight_decay = field<double>(j, "train", "weight_decay");
    cfg.train.hflip = field<bool>(j, "train", "hflip");
    cfg.train.vflip = field<bool>(j, "train", "vflip");
    cfg.train.random_crop = field<bool>(j, "train", "random_crop");
    cfg.train.steps_per_epoch = field<std::int64_t>(j, "train", "steps_per_epoch");
    cfg.train.checkpoint_every = field<std::int64_t>(j, "train", "checkpoint_every");
    cfg.train.msssim_scales = field<int>(j, "train", "msssim_scales");
    cfg.train.data_dir = field<std::string>(j, "train", "data_dir");
    cfg.train.checkpoint_path = field<std::string>(j, "train", "checkpoint_path");
    cfg.train.log_path = field<std::string>(j, "train", "log_path");

    cfg.train.weights.perceptual = field<double>(j, "weights", "perceptual");
    cfg.train.weights.bitrate = field<double>(j, "weights", "bitrate");
    cfg.train.weights.pre = field<double>(j, "weights", "pre");
    cfg.train.weights.post = field<double>(j, "weights", "post");
    cfg.train.weights.validate();

    cfg.train.proxy.quality = field<int>(j, "proxy", "quality");
    const std::string rounding = field<std::string>(j, "proxy", "rounding");
    if (rounding == "straight_through") {
        cfg.train.proxy.rounding = RoundingMode::straight_through;
    } else if (rounding == "soft") {
        cfg.train.proxy.rounding = RoundingMode::soft;
    } else {
        throw ValueError("config: proxy.rounding must be 'straight_through' or 'soft'");
    }
    cfg.train.proxy.tau = field<double>(j, "proxy", "tau");
    const auto table = field<std::vector<double>>(j, "proxy", "quant_table");
    if (table.size() != 64) {
        throw ValueError("config: proxy.quant_table must have 64 entries, got " +
                         std::to_string(table.size()));
    }
    std::copy(table.begin(), table.end(), cfg.train.proxy.luma_quant_table.begin());
    cfg.train.proxy.validate();
    cfg.train.validate();

    cfg.embeddings.provider = field<std::string>(j, "embeddings", "provider");
    if (cfg.embeddings.provider != "toy" && cfg.embeddings.provider != "file") {
        throw ValueError("config: embeddings.provider must be 'toy' or 'file'");
    }
    cfg.embeddings.seed = field<std::uint64_t>(j, "embeddings", "seed");
    cfg.embeddings.path = field<std::string>(j, "embeddings", "path");

    cfg.harness.encoder_bin = field<std::string>(j, "harness", "encoder_bin");
    cfg.harness.timeout_sec = field<double>(j, "harness", "timeout_sec");
    cfg.harness.parallel_jobs = field<int>(j, "harness", "parallel_jobs");
    cfg.harness.h264_encode_template =
        field<std::vector<std::string>>(j, "harness", "h264_encode_template");
    cfg.harness.h265_encode_template =
        field<std::vector<std::string>>(j, "harness", "h265_encode_template");
    cfg.harness.decode_template = field<std::vector<std::string>>(j, "harness", "decode_template");

    cfg.eval.codec = field<std::string>(j, "eval", "codec");
    cfg.eval.ladder = field<std::vector<int>>(j, "eval", "ladder");
    cfg.eval.preset = field<std::string>(j, "eval", "preset");
    cfg.eval.metric = field<std::string>(j, "eval", "metric");
    cfg.eval.metric_csv = field<std::string>(j, "eval", "metric_csv");
    cfg.eval.interp = field<std::string>(j, "eval", "interp");
    cfg.eval.msssim_scales = field<int>(j, "eval", "msssim_scales");
    cfg.eval.workdir = field<std::string>(j, "eval", "workdir");
    cfg.eval.ladder_spec();
    cfg.eval.metric_spec();
    return cfg;
}

AppConfig load_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    json merged = to_json(default_config());

    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) {
            throw IoError("cannot open config: " + config_path);
        }
        json user;
        try {
            f >> user;
        } catch (const json::exception& e) {
            throw ValueError(config_path + ": invalid JSON: " + e.what());
        }
        merge_strict(merged, user, "");
    }

    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) {
            throw ValueError("override '" + ov + "' is not of the form path.to.key=value");
        }
        const std::string path = ov.substr(0, eq);
        const std::string raw = ov.substr(eq + 1);
        json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
        if (value.is_discarded()) {
            value = raw;  // unquoted strings
        }
        json patch = value;
        std::size_t pos = path.size();
        std::string rest = path;
        while ((pos = rest.rfind('.')) != std::string::npos) {
            json wrap;
            wrap[rest.substr(pos + 1)] = patch;
            patch = std::move(wrap);
            rest = rest.substr(0, pos);
        }
        json wrap;
        wrap[rest] = patch;
        merge_strict(merged, wrap, "");
    }

    return parse_config(merged);
}

std::string schema_help() {
    std::string out = "configuration keys (JSON config file and --set overrides):\n";
    help_walk(to_json(default_config()), "", out);
    return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const AppConfig& cfg) {
    if (cfg.embeddings.provider == "toy") {
        return toy_provider(cfg.embeddings.seed, cfg.model.embed_dim);
    }
    auto provider = file_provider(cfg.embeddings.path);
    if (provider->embed_dim() != cfg.model.embed_dim) {
        throw ValueError("embedding file dimension " + std::to_string(provider->embed_dim()) +
                         " does not match model.embed_dim " +
                         std::to_string(cfg.model.embed_dim));
    }
    return provider;
}

}  // namespace scene

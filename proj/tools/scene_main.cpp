#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "scene/config.hpp"
#include "scene/fixtures.hpp"
#include "scene/infer.hpp"
#include "scene/semantics.hpp"
#include "scene/subprocess.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON configuration file");
    cmd->add_option("--set", opts.overrides,
                    "override a config key, e.g. --set train.lr=0.01 (repeatable)");
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&opts](const std::uint64_t s) {
            opts.overrides.push_back("train.seed=" + std::to_string(s));
        },
        "shorthand for --set train.seed=N");
}

int cmd_train(const CommonOpts& common, const std::string& data_dir,
              const std::string& resume) {
    scene::AppConfig cfg = scene::load_config(common.config_path, common.overrides);
    if (!data_dir.empty()) {
        cfg.train.data_dir = data_dir;
    }
    if (cfg.train.data_dir.empty()) {
        throw scene::ValueError("train: set train.data_dir or pass --data");
    }
    const scene::Dataset dataset = scene::load_dataset(cfg.train.data_dir);
    const std::vector<scene::Tensor> frames = dataset.training_frames();
    std::cout << "dataset: " << dataset.entries.size() << " clips, " << frames.size()
              << " training frames ("
              << dataset.split(true).size() << " validation clips held out)\n";
    auto provider = scene::make_provider(cfg);
    scene::train(cfg.model, cfg.train, frames, *provider, resume);
    std::cout << "checkpoint: " << cfg.train.checkpoint_path << "\n"
              << "log: " << cfg.train.log_path << "\n";
    return 0;
}

int cmd_enhance(const CommonOpts& common, const std::string& checkpoint, const std::string& input,
                const std::string& output) {
    scene::AppConfig cfg = scene::load_config(common.config_path, common.overrides);
    scene::SceneParams params = scene::load_checkpoint(checkpoint);
    cfg.model = params.config;  // provider must match the checkpoint
    auto provider = scene::make_provider(cfg);
    const scene::VideoClip clip = scene::read_y4m(input);
    const scene::VideoClip enhanced = scene::enhance_clip(clip, params, *provider);
    scene::write_y4m(enhanced, output);
    std::cout << "enhanced " << clip.frames.size() << " frames -> " << output << "\n";
    return 0;
}

void print_bd(const scene::BdRateResult& bd) {
    if (bd.defined()) {
        std::printf("BD-rate: %.2f%% (metric overlap [%.6g, %.6g])\n", *bd.percent, bd.overlap_lo,
                    bd.overlap_hi);
    } else {
        std::printf("BD-rate: undefined (%s)\n", bd.undefined_reason.c_str());
    }
    for (const auto& w : bd.warnings) {
        std::printf("warning: %s\n", w.c_str());
    }
}

int cmd_eval(const CommonOpts& common, const std::string& checkpoint, const std::string& input,
             std::string report_path) {
    scene::AppConfig cfg = scene::load_config(common.config_path, common.overrides);
    scene::SceneParams params = scene::load_checkpoint(checkpoint);
    cfg.model = params.config;
    auto provider = scene::make_provider(cfg);
    const scene::VideoClip clip = scene::read_y4m(input);
    const scene::EncoderHarness harness(cfg.harness);
    std::cout << "encoder: " << harness.encoder_bin() << "\n";

    const scene::CompareReport report =
        scene::compare_pipelines(clip, params, *provider, harness, cfg.eval.ladder_spec(),
                                 cfg.eval.metric_spec(), cfg.eval.workdir);
    if (report_path.empty()) {
        report_path = (fs::path(cfg.eval.workdir) / "rd_report.csv").string();
    }
    const scene::RdCurve curves[] = {report.anchor, report.enhanced};
    scene::write_rd_csv(report_path, curves);
    std::cout << "RD report: " << report_path << "\n";
    print_bd(report.bd);
    return 0;
}

int cmd_bdrate(const std::string& anchor_csv, const std::string& test_csv, bool pchip,
               const std::string& anchor_label, const std::string& test_label) {
    const scene::RdCurve anchor = scene::read_rd_csv(anchor_csv, anchor_label);
    const scene::RdCurve test = scene::read_rd_csv(test_csv, test_label);
    const scene::BdRateResult bd =
        scene::bd_rate(anchor, test, pchip ? scene::BdInterp::pchip : scene::BdInterp::cubic);
    print_bd(bd);
    return 0;
}

int cmd_gen_fixtures(const CommonOpts& common, const std::string& out_dir) {
    fs::create_directories(out_dir);
    fs::create_directories(fs::path(out_dir) / "data");

    // full default configuration, for reference and editing
    scene::AppConfig defaults = scene::default_config();
    std::ofstream(fs::path(out_dir) / "default.json") << scene::to_json(defaults).dump(2) << "\n";

    // desk-scale toy profile used by the acceptance workflow; explicit --set
    // overrides win over the profile
    std::vector<std::string> toy_overrides = {
        "model.block_channels=8",
        "model.num_base_kernels=2",
        "model.embed_dim=16",
        "model.control_hidden_dim=8",
        "train.patch_size=64",
        "train.batch_size=4",
        "train.epochs=4",
        "train.data_dir=" + (fs::path(out_dir) / "data").string(),
        "train.checkpoint_path=" + (fs::path(out_dir) / "toy_checkpoint.scn1").string(),
        "train.log_path=" + (fs::path(out_dir) / "toy_train.csv").string(),
        "eval.workdir=" + (fs::path(out_dir) / "eval_work").string(),
    };
    toy_overrides.insert(toy_overrides.end(), common.overrides.begin(), common.overrides.end());
    scene::AppConfig toy = scene::load_config(common.config_path, toy_overrides);
    std::ofstream(fs::path(out_dir) / "toy.json") << scene::to_json(toy).dump(2) << "\n";

    const scene::VideoClip clip_a = scene::make_synthetic_clip(8, 64, 64, 11);
    const scene::VideoClip clip_b = scene::make_synthetic_clip(8, 64, 64, 22);
    scene::write_y4m(clip_a, (fs::path(out_dir) / "data" / "clip_a.y4m").string());
    scene::write_y4m(clip_b, (fs::path(out_dir) / "data" / "clip_b.y4m").string());

    scene::SceneParams identity = scene::SceneParams::init(toy.model, toy.train.seed);
    scene::save_checkpoint(identity, (fs::path(out_dir) / "identity_toy.scn1").string());

    // file-provider companion: toy-encoder grids for clip_a, frame order
    auto toy_enc = scene::toy_provider(toy.embeddings.seed, toy.model.embed_dim);
    std::vector<scene::Tensor> grids;
    for (std::size_t i = 0; i < clip_a.frames.size(); ++i) {
        const std::int64_t idx[] = {static_cast<std::int64_t>(i)};
        grids.push_back(toy_enc->embed(clip_a.frames[i], idx));
    }
    scene::write_embedding_file((fs::path(out_dir) / "embeddings_clip_a.semb").string(), grids);

    std::cout << "fixtures written to " << out_dir << ":\n"
              << "  default.json, toy.json\n"
              << "  data/clip_a.y4m, data/clip_b.y4m\n"
              << "  identity_toy.scn1, embeddings_clip_a.semb\n";
    return 0;
}

int cmd_probe(const CommonOpts& common) {
    scene::AppConfig cfg = scene::load_config(common.config_path, common.overrides);
    const std::string bin = scene::probe_encoder(cfg.harness);
    const scene::ProcessResult r = scene::run_process({bin, "-version"}, 20.0);
    std::string first_line = r.std_out.substr(0, r.std_out.find('\n'));
    if (first_line.empty()) {
        first_line = r.std_err.substr(0, r.std_err.find('\n'));
    }
    std::cout << "encoder: " << bin << "\n" << first_line << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SCENE: semantic-aware, codec-aware video pre-processing"};
    app.require_subcommand(1);
    app.footer(scene::schema_help());

    CommonOpts train_opts, enhance_opts, eval_opts, fixtures_opts, probe_opts;
    std::string data_dir, resume, checkpoint, input, output, report_path;
    std::string anchor_csv, test_csv, anchor_label, test_label, out_dir = "fixtures";
    bool pchip = false;

    CLI::App* train = app.add_subcommand("train", "train a model on a directory of clips");
    add_common(train, train_opts);
    train->add_option("--data", data_dir, "dataset directory (overrides train.data_dir)");
    train->add_option("--resume", resume, "checkpoint to resume from");

    CLI::App* enhance = app.add_subcommand("enhance", "run the pre-processor over a Y4M clip");
    add_common(enhance, enhance_opts);
    enhance->add_option("--checkpoint", checkpoint, "SCN1 checkpoint")->required();
    enhance->add_option("--in", input, "input .y4m")->required();
    enhance->add_option("--out", output, "output .y4m")->required();

    CLI::App* eval = app.add_subcommand("eval", "compare codec-only vs enhance-then-encode");
    add_common(eval, eval_opts);
    eval->add_option("--checkpoint", checkpoint, "SCN1 checkpoint")->required();
    eval->add_option("--in", input, "input .y4m")->required();
    eval->add_option("--out", report_path, "RD report CSV path");

    CLI::App* bdrate = app.add_subcommand("bdrate", "BD-rate between two RD CSVs");
    bdrate->add_option("--anchor", anchor_csv, "anchor curve CSV")->required();
    bdrate->add_option("--test", test_csv, "test curve CSV")->required();
    bdrate->add_option("--anchor-label", anchor_label, "filter anchor rows by label");
    bdrate->add_option("--test-label", test_label, "filter test rows by label");
    bdrate->add_flag("--pchip", pchip, "piecewise-cubic-hermite interpolation");

    CLI::App* fixtures = app.add_subcommand("gen-fixtures", "write synthetic clips and configs");
    add_common(fixtures, fixtures_opts);
    fixtures->add_option("--out", out_dir, "output directory");

    CLI::App* probe = app.add_subcommand("probe", "verify the external encoder");
    add_common(probe, probe_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) {
            return cmd_train(train_opts, data_dir, resume);
        }
        if (enhance->parsed()) {
            return cmd_enhance(enhance_opts, checkpoint, input, output);
        }
        if (eval->parsed()) {
            return cmd_eval(eval_opts, checkpoint, input, report_path);
        }
        if (bdrate->parsed()) {
            return cmd_bdrate(anchor_csv, test_csv, pchip, anchor_label, test_label);
        }
        if (fixtures->parsed()) {
            return cmd_gen_fixtures(fixtures_opts, out_dir);
        }
        if (probe->parsed()) {
            return cmd_probe(probe_opts);
        }
    } catch (const scene::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

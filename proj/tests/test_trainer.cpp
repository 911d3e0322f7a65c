#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "scene/fixtures.hpp"
#include "scene/infer.hpp"
#include "scene/trainer.hpp"
#include "support/gradcheck.hpp"

using namespace scene;
using scene::testing::random_tensor;

namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "scene_trainer_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

ModelConfig toy_model() {
    ModelConfig cfg;
    cfg.block_channels = 8;
    cfg.num_base_kernels = 2;
    cfg.control_hidden_dim = 8;
    cfg.embed_dim = 16;
    return cfg;
}

TrainConfig toy_train(const std::string& dir) {
    TrainConfig cfg;
    cfg.patch_size = 16;
    cfg.batch_size = 2;
    cfg.epochs = 1;
    cfg.seed = 11;
    cfg.checkpoint_path = dir + "/ckpt.scn1";
    cfg.log_path = dir + "/log.csv";
    return cfg;
}

std::vector<Tensor> toy_frames(std::int64_t count, std::int64_t size, std::uint64_t seed) {
    const VideoClip clip = make_synthetic_clip(count, size, size, seed);
    return clip.frames;
}

// loss columns of a training log, ms column dropped
std::vector<std::string> log_rows_no_ms(const std::string& path) {
    std::ifstream f(path);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(f, line)) {
        const auto last = line.rfind(',');
        rows.push_back(line.substr(0, last));
    }
    return rows;
}

}  // namespace

TEST_CASE("sample_batch: deterministic per (seed, step), varies across steps") {
    const auto frames = toy_frames(4, 32, 1);
    TrainConfig cfg = toy_train(fresh_dir("sample"));
    cfg.batch_size = 3;

    const Batch a = sample_batch(frames, cfg, 5);
    const Batch b = sample_batch(frames, cfg, 5);
    CHECK(a.indices == b.indices);
    bool same = true;
    for (std::int64_t i = 0; i < a.frames.numel(); ++i) {
        same = same && a.frames[i] == b.frames[i];
    }
    CHECK(same);

    const Batch c = sample_batch(frames, cfg, 6);
    bool differs = c.indices != a.indices;
    for (std::int64_t i = 0; i < a.frames.numel() && !differs; ++i) {
        differs = a.frames[i] != c.frames[i];
    }
    CHECK(differs);

    TrainConfig big = cfg;
    big.patch_size = 48;
    CHECK_THROWS_AS(sample_batch(frames, big, 0), DimensionError);
}

TEST_CASE("train_step: identity model with only the pre term is a fixed point") {
    const ModelConfig mc = toy_model();
    SceneParams params = SceneParams::init(mc, 3);
    SceneParams before = params;

    TrainConfig cfg = toy_train(fresh_dir("fixed"));
    cfg.weights = {0.0, 0.0, 5.0, 0.0};
    cfg.weight_decay = 0.0;

    const auto frames = toy_frames(2, 16, 2);
    const Batch batch = sample_batch(frames, cfg, 0);
    ToyEmbeddingProvider provider(7, mc.embed_dim);
    TrainState state;
    const LossBreakdown bd = train_step(batch, params, state, provider, cfg);

    CHECK(bd.pre == 0.0);
    CHECK(bd.total == 0.0);
    std::vector<ParamRef> now = params.param_refs();
    std::vector<ParamRef> orig = before.param_refs();
    bool unchanged = true;
    for (std::size_t i = 0; i < now.size(); ++i) {
        auto a = now[i].tensor->data();
        auto b = orig[i].tensor->data();
        for (std::size_t k = 0; k < a.size(); ++k) {
            unchanged = unchanged && a[k] == b[k];
        }
    }
    CHECK(unchanged);
}

TEST_CASE("train_step: ten steps are bitwise reproducible") {
    const ModelConfig mc = toy_model();
    const auto frames = toy_frames(4, 16, 3);
    TrainConfig cfg = toy_train(fresh_dir("repro"));
    ToyEmbeddingProvider provider(7, mc.embed_dim);

    auto run = [&] {
        SceneParams params = SceneParams::init(mc, cfg.seed);
        TrainState state;
        std::vector<double> history;
        for (int step = 0; step < 10; ++step) {
            const Batch batch = sample_batch(frames, cfg, step);
            const LossBreakdown bd = train_step(batch, params, state, provider, cfg);
            history.push_back(bd.total);
            history.push_back(bd.perceptual);
            history.push_back(bd.bitrate);
            history.push_back(bd.pre);
            history.push_back(bd.post);
        }
        return history;
    };
    CHECK(run() == run());
}

TEST_CASE("train: an epoch over K samples with batch B performs ceil(K/B) steps") {
    const std::string dir = fresh_dir("steps");
    const ModelConfig mc = toy_model();
    TrainConfig cfg = toy_train(dir);
    cfg.batch_size = 4;
    cfg.epochs = 2;
    const auto frames = toy_frames(10, 16, 4);  // ceil(10/4) = 3 steps per epoch
    ToyEmbeddingProvider provider(7, mc.embed_dim);
    train(mc, cfg, frames, provider);

    const auto rows = log_rows_no_ms(cfg.log_path);
    CHECK(rows.size() == 1 + 6);  // header + 2 epochs * 3 steps
    CHECK(rows[0] == "step,perceptual,bitrate,pre,post,total");
}

TEST_CASE("train: resuming mid-run replays the uninterrupted run exactly") {
    const ModelConfig mc = toy_model();
    const auto frames = toy_frames(4, 16, 5);
    ToyEmbeddingProvider provider(7, mc.embed_dim);

    // uninterrupted: 6 steps
    const std::string dir_a = fresh_dir("uninterrupted");
    TrainConfig full = toy_train(dir_a);
    full.steps_per_epoch = 6;
    train(mc, full, frames, provider);
    const auto full_rows = log_rows_no_ms(full.log_path);

    // interrupted at step 3, then resumed to 6 with the same settings
    const std::string dir_b = fresh_dir("resumed");
    TrainConfig half = toy_train(dir_b);
    half.steps_per_epoch = 3;
    train(mc, half, frames, provider);

    TrainConfig rest = toy_train(dir_b);
    rest.steps_per_epoch = 6;
    train(mc, rest, frames, provider, half.checkpoint_path);
    const auto resumed_rows = log_rows_no_ms(rest.log_path);

    CHECK(full_rows == resumed_rows);

    // final checkpoints bit-exact
    std::ifstream fa(full.checkpoint_path, std::ios::binary);
    std::ifstream fb(rest.checkpoint_path, std::ios::binary);
    const std::vector<char> ba{std::istreambuf_iterator<char>(fa), {}};
    const std::vector<char> bb{std::istreambuf_iterator<char>(fb), {}};
    CHECK(ba == bb);
}

TEST_CASE("train state sidecar: round trip and mismatch detection") {
    const std::string dir = fresh_dir("state");
    const ModelConfig mc = toy_model();
    SceneParams params = SceneParams::init(mc, 3);

    TrainState state;
    state.opt.init(params.param_refs());
    state.step = 17;
    state.opt.step = 17;
    Rng rng(6);
    for (auto& m : state.opt.m) {
        for (auto& v : m) {
            v = rng.uniform(-1.0, 1.0);
        }
    }
    const std::string path = dir + "/ckpt.scn1.state";
    save_train_state(state, params, path);
    const TrainState loaded = load_train_state(path, params);
    CHECK(loaded.step == 17);
    CHECK(loaded.opt.step == 17);
    CHECK(loaded.opt.m == state.opt.m);
    CHECK(loaded.opt.v == state.opt.v);

    ModelConfig other = mc;
    other.block_channels = 4;
    SceneParams mismatched = SceneParams::init(other, 1);
    CHECK_THROWS_AS(load_train_state(path, mismatched), IntegrityError);
}

TEST_CASE("enhance: identity checkpoint passes frames through, output clamped") {
    const ModelConfig mc = toy_model();
    SceneParams params = SceneParams::init(mc, 9);  // zero tail = identity
    ToyEmbeddingProvider provider(7, mc.embed_dim);

    const VideoClip clip = make_synthetic_clip(2, 32, 32, 7);
    const VideoClip out = enhance_clip(clip, params, provider);
    REQUIRE(out.frames.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::int64_t k = 0; k < clip.frames[i].numel(); ++k) {
            CHECK(out.frames[i][k] == clip.frames[i][k]);
        }
    }

    // random weights: output still lands in [0, 1]
    Rng rng(8);
    params.for_each([&](const std::string&, Tensor& t) {
        for (auto& v : t.data()) {
            v = rng.uniform(-0.2, 0.2);
        }
    });
    const VideoClip wild = enhance_clip(clip, params, provider);
    for (const Tensor& f : wild.frames) {
        for (double v : f.data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("train config validation") {
    TrainConfig cfg = toy_train(fresh_dir("valid"));
    cfg.patch_size = 24;  // not a multiple of 16
    CHECK_THROWS_AS(cfg.validate(), ValueError);
    cfg = toy_train(fresh_dir("valid2"));
    cfg.lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValueError);
}

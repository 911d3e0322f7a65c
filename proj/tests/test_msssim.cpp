#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scene/fixtures.hpp"
#include "scene/msssim.hpp"
#include "support/gradcheck.hpp"
#include "support/reference_msssim.hpp"

using namespace scene;
using scene::testing::GradCheck;
using scene::testing::gradcheck_rel_err;
using scene::testing::random_tensor;

namespace {

Tensor add_noise(const Tensor& x, double amplitude, std::uint64_t seed) {
    Rng rng(seed);
    Tensor out = x;
    for (auto& v : out.data()) {
        v += amplitude * (rng.uniform() - 0.5);
    }
    return out;
}

}  // namespace

TEST_CASE("ms_ssim(x, x) == 1 within 1e-9") {
    const VideoClip clip = make_synthetic_clip(1, 64, 64, 3);
    int used = 0;
    const double v = ms_ssim(clip.frames[0], clip.frames[0], 5, &used);
    CHECK(std::abs(v - 1.0) < 1e-9);
    CHECK(used == 3);  // 64x64 supports 3 of the 5 standard scales
}

TEST_CASE("stronger noise scores lower") {
    const VideoClip clip = make_synthetic_clip(1, 64, 64, 4);
    const Tensor& x = clip.frames[0];
    const double weak = ms_ssim(x, add_noise(x, 0.02, 9), 5);
    const double strong = ms_ssim(x, add_noise(x, 0.15, 9), 5);
    CHECK(strong < weak);
    CHECK(weak < 1.0);
    CHECK(weak > 0.0);
}

TEST_CASE("agrees with the independent reference implementation") {
    const VideoClip clip = make_synthetic_clip(2, 64, 64, 5);
    const Tensor& a = clip.frames[0];
    const Tensor distorted = add_noise(clip.frames[1], 0.08, 13);

    const double lib = ms_ssim(distorted, a, 5);
    const double ref = scene::testing::reference_msssim(distorted, a, 5);
    CHECK(lib == doctest::Approx(ref).epsilon(1e-6));

    // also on a cleaner pair and at an explicit smaller scale count
    const double lib2 = ms_ssim(clip.frames[1], a, 2);
    const double ref2 = scene::testing::reference_msssim(clip.frames[1], a, 2);
    CHECK(lib2 == doctest::Approx(ref2).epsilon(1e-6));
}

TEST_CASE("gradient w.r.t. the first argument matches finite differences") {
    for (std::uint64_t seed : {1u, 2u}) {
        Rng rng(seed);
        Tensor a = random_tensor({1, 1, 32, 32}, rng, 0.2, 0.8);
        const Tensor b = random_tensor({1, 1, 32, 32}, rng, 0.2, 0.8);

        Tape t;
        Var va = t.leaf(a);
        Var v = ms_ssim(t, va, t.constant(b), 2);
        t.backward(v);

        auto forward = [&b](const std::vector<Tensor>& in) {
            Tape tt;
            return tt.value(ms_ssim(tt, tt.constant(in[0]), tt.constant(b), 2)).item();
        };
        const double err = gradcheck_rel_err(
            forward, {a}, {t.grad(va)},
            GradCheck{.max_positions_per_input = 48, .position_seed = seed});
        CHECK(err < 1e-4);
    }
}

TEST_CASE("small inputs drop scales; too-small inputs error") {
    Rng rng(6);
    const Tensor x = random_tensor({1, 1, 16, 16}, rng, 0.0, 1.0);
    int used = 0;
    const double v = ms_ssim(x, x, 5, &used);
    CHECK(used == 1);
    CHECK(v == doctest::Approx(1.0));

    const Tensor tiny = random_tensor({1, 1, 8, 8}, rng, 0.0, 1.0);
    CHECK_THROWS_AS(ms_ssim(tiny, tiny, 5), DimensionError);
    CHECK_THROWS_AS(ms_ssim(x, x, 0), ValueError);
}

TEST_CASE("mismatched shapes are rejected") {
    Tensor a({1, 1, 32, 32}, 0.5);
    Tensor b({1, 1, 32, 16}, 0.5);
    CHECK_THROWS_AS(ms_ssim(a, b, 1), DimensionError);
}

TEST_CASE("value stays in (0, 1] for unrelated natural-range inputs") {
    Rng rng(8);
    const Tensor a = random_tensor({1, 3, 32, 32}, rng, 0.0, 1.0);
    const Tensor b = random_tensor({1, 3, 32, 32}, rng, 0.0, 1.0);
    const double v = ms_ssim(a, b, 2);
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
}

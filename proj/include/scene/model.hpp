#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scene/adamw.hpp"
#include "scene/tape.hpp"

namespace scene {

struct ModelConfig {
    std::int64_t unshuffle_factor = 2;
    std::int64_t block_channels = 64;
    std::int64_t convs_per_block = 3;
    std::int64_t num_base_kernels = 4;
    std::int64_t kernel_size = 3;
    std::int64_t control_hidden_dim = 64;
    std::int64_t embed_dim = 1152;
    std::int64_t input_channels = 3;

    void validate() const;
    std::int64_t coeff_dim() const { return convs_per_block * block_channels * num_base_kernels; }
    bool operator==(const ModelConfig&) const = default;
};

// Two 1x1 convs mapping a source feature map to assembly coefficients.
struct ControlModuleParams {
    Tensor w1, b1;  // (hidden, source, 1, 1), (1, hidden, 1, 1)
    Tensor w2, b2;  // (coeff_dim, hidden, 1, 1), (1, coeff_dim, 1, 1)
};

// Per conv layer: E base kernels of shape (C, C, k, k) plus one bias.
struct AssembledLayerParams {
    std::vector<Tensor> bases;
    Tensor bias;  // (1, C, 1, 1)
};

struct AssembledBlockParams {
    std::vector<AssembledLayerParams> layers;  // convs_per_block entries
};

struct SceneParams {
    ModelConfig config;
    Tensor stem_w, stem_b;
    AssembledBlockParams block1, block2;
    ControlModuleParams control1, control2;
    Tensor tail_w, tail_b;

    // Kaiming-uniform convs/bases; zero tail (identity at init); control
    // second layer zero with bias 1/E so every assembled kernel starts as
    // the mean of its base kernels.
    static SceneParams init(const ModelConfig& cfg, std::uint64_t seed);

    // Fixed enumeration order shared by the optimizer, checkpoints and
    // param_count: stem, block1, control1, block2, control2, tail.
    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
    std::vector<ParamRef> param_refs();
    std::int64_t actual_param_count();
};

std::int64_t param_count(const ModelConfig& cfg);

// ---- tape-side model -------------------------------------------------------

struct ControlVars {
    Var w1, b1, w2, b2;
};
struct AssembledLayerVars {
    std::vector<Var> bases;
    Var bias;
};
struct BlockVars {
    std::vector<AssembledLayerVars> layers;
};
struct SceneVars {
    ModelConfig config;
    Var stem_w, stem_b;
    BlockVars block1, block2;
    ControlVars control1, control2;
    Var tail_w, tail_b;
};

// Put every parameter on the tape, as tracked leaves (trainable) or
// constants (inference).
SceneVars to_tape(Tape& t, SceneParams& params, bool trainable);

// Vars in the same order as SceneParams::for_each / param_refs.
std::vector<Var> param_vars(const SceneVars& vars);

// Coefficient layout throughout: channel c*E + i of a (N, C*E, 1, 1) tensor
// holds Coeff[c, i]; a control module emits all convs_per_block layers
// stacked, layer l occupying channels [l*C*E, (l+1)*C*E).

// 1x1 conv -> ReLU -> 1x1 conv -> global average pool.
Var control_forward(Tape& t, Var source, const ControlVars& control);

// Pure kernel assembly for one layer: W[c] = sum_i coeff[c*E + i] * bases[i][c].
Tensor assemble_kernels(std::span<const Tensor> bases, std::span<const double> coeff);

// Per-sample assembled convolution (same padding). coeff: (N, C*E, 1, 1).
Var assembled_conv2d(Tape& t, Var x, std::span<const Var> bases, Var coeff, Var bias);

// Three assembled convs; ReLU after all but the last.
Var assembled_block_forward(Tape& t, Var x, const BlockVars& block, Var block_coeff);

// Full network: unshuffle -> stem -> block1 (coeffs from the embedding) ->
// block2 (coeffs from block1's output) -> tail -> shuffle -> + input.
// Output is pre-clamp; inference clamps to [0,1] separately.
Var scene_forward(Tape& t, Var frame, const SceneVars& vars, Var embedding);

// ---- checkpoints (SCN1) ----------------------------------------------------
// Layout: "SCN1", 8 u32 config fields (unshuffle_factor, input_channels,
// block_channels, convs_per_block, num_base_kernels, kernel_size,
// control_hidden_dim, embed_dim), parameters as raw little-endian f64 in
// for_each order, trailing CRC32 over all preceding bytes.
void save_checkpoint(SceneParams& params, const std::string& path);
SceneParams load_checkpoint(const std::string& path);

}  // namespace scene

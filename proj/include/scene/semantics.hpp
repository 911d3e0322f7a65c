#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scene/tensor.hpp"

namespace scene {

// Source of per-frame semantic feature grids (N, D, h, w). Implementations
// are read-only after construction and deterministic per input.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::int64_t embed_dim() const = 0;

    // frames: (N, 3, H, W); indices: dataset positions of each frame, used
    // by file-backed providers (index-based association) and ignored by
    // content-based ones. Returns (N, D, h, w).
    virtual Tensor embed(const Tensor& frames, std::span<const std::int64_t> indices) const = 0;
};

// Frozen random-projection conv stack standing in for a real vision encoder:
// four stride-2 3x3 convs with ReLU mapping 3 -> D channels, so a HxW frame
// yields an (D, H/16, W/16) grid. Weights derive from the seed alone.
class ToyEmbeddingProvider final : public EmbeddingProvider {
public:
    ToyEmbeddingProvider(std::uint64_t seed, std::int64_t embed_dim);
    std::int64_t embed_dim() const override { return dim_; }
    Tensor embed(const Tensor& frames, std::span<const std::int64_t> indices) const override;

private:
    std::int64_t dim_;
    std::vector<Tensor> weights_;
    std::vector<Tensor> biases_;
};

// ---- embedding files (SEMB) -------------------------------------------------
// Layout: "SEMB", u32 version (1), u32 D, u32 h, u32 w, u32 frame count,
// then count grids of D*h*w little-endian f32 values, trailing CRC32.
// Stored as f32 (encoder outputs), upcast to f64 on load.

void write_embedding_file(const std::string& path, std::span<const Tensor> grids);

class FileEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit FileEmbeddingProvider(const std::string& path);
    std::int64_t embed_dim() const override { return dim_; }
    std::int64_t frame_count() const { return static_cast<std::int64_t>(grids_.size()); }
    Tensor embed(const Tensor& frames, std::span<const std::int64_t> indices) const override;

private:
    std::int64_t dim_;
    std::vector<Tensor> grids_;  // each (1, D, h, w)
};

std::unique_ptr<EmbeddingProvider> file_provider(const std::string& path);
std::unique_ptr<EmbeddingProvider> toy_provider(std::uint64_t seed, std::int64_t embed_dim);

}  // namespace scene

#include "scene/semantics.hpp"

#include <algorithm>
#include <cmath>

#include "scene/ops.hpp"
#include "scene/rng.hpp"
#include "scene/serial.hpp"

namespace scene {

ToyEmbeddingProvider::ToyEmbeddingProvider(std::uint64_t seed, std::int64_t embed_dim)
    : dim_(embed_dim) {
    if (embed_dim < 1) {
        throw ValueError("toy provider: embed_dim must be positive");
    }
    Rng rng(mix_seeds(seed, 0x7E4B));
    const std::int64_t widths[5] = {3, std::min<std::int64_t>(embed_dim, 16),
                                    std::min<std::int64_t>(embed_dim, 32),
                                    std::min<std::int64_t>(embed_dim, 64), embed_dim};
    for (int l = 0; l < 4; ++l) {
        const std::int64_t cin = widths[l];
        const std::int64_t cout = widths[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(cin * 9));
        Tensor w({cout, cin, 3, 3});
        for (auto& v : w.data()) {
            v = rng.uniform(-bound, bound);
        }
        weights_.push_back(std::move(w));
        biases_.push_back(Tensor({1, cout, 1, 1}, 0.0));
    }
}

Tensor ToyEmbeddingProvider::embed(const Tensor& frames,
                                   std::span<const std::int64_t> indices) const {
    (void)indices;  // content-based, index association irrelevant
    if (frames.shape().h < 16 || frames.shape().w < 16) {
        throw DimensionError("toy provider: frames must be at least 16x16, got " +
                             frames.shape().str());
    }
    Tensor h = frames;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        h = ops::conv2d_forward(h, weights_[l], biases_[l].data(), 1, 1, /*stride=*/2);
        h = ops::relu(h);
    }
    return h;
}

void write_embedding_file(const std::string& path, std::span<const Tensor> grids) {
    if (grids.empty()) {
        throw ValueError("embedding file: no grids to write");
    }
    const TensorShape s = grids[0].shape();
    for (const Tensor& g : grids) {
        if (!(g.shape() == s)) {
            throw DimensionError("embedding file: all grids must share one shape");
        }
        if (g.shape().n != 1) {
            throw DimensionError("embedding file: grids must be single-frame (1, D, h, w)");
        }
    }
    ByteWriter w;
    w.magic("SEMB");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(s.c));
    w.u32(static_cast<std::uint32_t>(s.h));
    w.u32(static_cast<std::uint32_t>(s.w));
    w.u32(static_cast<std::uint32_t>(grids.size()));
    for (const Tensor& g : grids) {
        for (double v : g.data()) {
            w.f32(static_cast<float>(v));
        }
    }
    w.finish_crc();
    w.write_file(path);
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    r.check_crc();
    r.expect_magic("SEMB");
    const std::uint32_t version = r.u32();
    if (version != 1) {
        throw IntegrityError(path + ": unsupported embedding file version " +
                             std::to_string(version));
    }
    const std::int64_t d = r.u32();
    const std::int64_t h = r.u32();
    const std::int64_t w = r.u32();
    const std::int64_t count = r.u32();
    if (d < 1 || h < 1 || w < 1 || count < 1) {
        throw IntegrityError(path + ": degenerate embedding dimensions");
    }
    dim_ = d;
    for (std::int64_t i = 0; i < count; ++i) {
        Tensor g({1, d, h, w});
        r.f32_into_f64(g.data());
        if (!g.all_finite()) {
            throw IntegrityError(path + ": non-finite embedding in frame " + std::to_string(i));
        }
        grids_.push_back(std::move(g));
    }
    if (!r.at_crc_tail()) {
        throw IntegrityError(path + ": trailing bytes after embedding payload");
    }
}

Tensor FileEmbeddingProvider::embed(const Tensor& frames,
                                    std::span<const std::int64_t> indices) const {
    const std::int64_t n = frames.shape().n;
    if (static_cast<std::int64_t>(indices.size()) != n) {
        throw DimensionError("file provider: need one index per frame");
    }
    const TensorShape gs = grids_[0].shape();
    Tensor out({n, gs.c, gs.h, gs.w});
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t idx = indices[static_cast<std::size_t>(i)];
        if (idx < 0 || idx >= frame_count()) {
            throw ValueError("file provider: frame index " + std::to_string(idx) +
                             " out of range [0, " + std::to_string(frame_count()) + ")");
        }
        const Tensor& g = grids_[static_cast<std::size_t>(idx)];
        std::copy(g.data().begin(), g.data().end(), out.data().data() + out.offset(i, 0, 0, 0));
    }
    return out;
}

std::unique_ptr<EmbeddingProvider> file_provider(const std::string& path) {
    return std::make_unique<FileEmbeddingProvider>(path);
}

std::unique_ptr<EmbeddingProvider> toy_provider(std::uint64_t seed, std::int64_t embed_dim) {
    return std::make_unique<ToyEmbeddingProvider>(seed, embed_dim);
}

}  // namespace scene

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scene/tensor.hpp"

namespace scene {

// Handle to a value recorded on a Tape.
struct Var {
    std::int64_t id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Ops append nodes in execution order; backward() walks
// them in reverse, accumulating adjoints. Leaf gradients persist across
// backward() calls (repeated backward without zero_grad() adds up); interior
// adjoints are scratch, re-seeded on every call.
//
// Every recorded output is checked for finiteness, so any op that produces
// NaN/Inf fails immediately with the op's name.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Tracked input: gradients accumulate into grad(v).
    Var leaf(Tensor value);
    // Untracked input: backward never propagates into it.
    Var constant(Tensor value);

    const Tensor& value(Var v) const;
    // Accumulated gradient of a tracked leaf (zeros before the first backward).
    const Tensor& grad(Var v) const;

    void backward(Var loss);
    void zero_grad();

    std::size_t node_count() const { return nodes_.size(); }

    struct Ctx {
        Tape& tape;
        std::span<const double> out_adjoint;
        bool needs(Var input) const;
        void add_to(Var input, std::span<const double> g);
        void add_to(Var input, const Tensor& g) { add_to(input, g.data()); }

    private:
        friend class Tape;
        Ctx(Tape& t, std::span<const double> adj) : tape(t), out_adjoint(adj) {}
    };
    using BackwardFn = std::function<void(Ctx&)>;

    // Records an interior node. `fn` may be empty for ops no gradient flows
    // through (all inputs constant).
    Var record(const char* op, Tensor out, std::vector<Var> inputs, BackwardFn fn);

    bool requires_grad(Var v) const;

private:
    struct Node {
        Tensor value;
        Tensor leaf_grad;  // tracked leaves only
        std::vector<Var> inputs;
        BackwardFn fn;
        bool needs_grad = false;
        bool tracked_leaf = false;
    };

    const Node& node(Var v) const;
    std::vector<Node> nodes_;
    std::vector<std::vector<double>> scratch_;
};

// ---- taped operations ------------------------------------------------------

// Model-facing convolution: stride 1, zero-padded to keep spatial size
// ("same"), square kernel of size 1 or 3.
Var conv2d(Tape& t, Var x, Var w, Var b);

// General convolution used internally (Gaussian windows etc.).
Var conv2d_any(Tape& t, Var x, Var w, Var b, std::int64_t pad_h, std::int64_t pad_w);

Var relu(Tape& t, Var x);
Var pixel_unshuffle(Tape& t, Var x, std::int64_t factor);
Var pixel_shuffle(Tape& t, Var x, std::int64_t factor);
Var global_avg_pool(Tape& t, Var x);
Var avg_pool2(Tape& t, Var x);

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var div(Tape& t, Var a, Var b);
Var affine(Tape& t, Var x, double scale, double shift);  // x*scale + shift
Var pow_const(Tape& t, Var x, double e);

Var sum_all(Tape& t, Var x);   // -> (1,1,1,1)
Var mean_all(Tape& t, Var x);  // -> (1,1,1,1)

// Mean absolute difference; subgradient 0 where a == b.
Var l1_loss(Tape& t, Var a, Var b);

Var reshape(Tape& t, Var x, TensorShape shape);
Var slice_channels(Tape& t, Var x, std::int64_t c0, std::int64_t c1);

}  // namespace scene

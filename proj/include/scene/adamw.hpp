#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scene/tensor.hpp"

namespace scene {

struct AdamwConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// Named reference to a parameter tensor owned elsewhere. The gradient lives
// in the tensor's grad buffer.
struct ParamRef {
    std::string name;
    Tensor* tensor = nullptr;
};

// First and second moments per parameter, plus the shared step counter.
struct AdamwState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step = 0;

    void init(const std::vector<ParamRef>& params);
    bool initialized() const { return !m.empty(); }
};

// Decoupled AdamW with bias correction. Weight decay shrinks the parameter
// before the adaptive step:  theta -= lr*wd*theta;  then the Adam update.
// Throws ValueError naming the parameter if its gradient is non-finite.
void adamw_step(std::vector<ParamRef>& params, AdamwState& state, const AdamwConfig& cfg);

}  // namespace scene

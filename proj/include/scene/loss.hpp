#pragma once

#include <memory>

#include "scene/tape.hpp"

namespace scene {

struct LossWeights {
    double perceptual = 1e-2;
    double bitrate = 1.0;
    double pre = 5.0;
    double post = 1.0;

    void validate() const;
};

struct LossBreakdown {
    double perceptual = 0.0;
    double bitrate = 0.0;
    double pre = 0.0;
    double post = 0.0;
    double total = 0.0;
};

// Seam for the perceptual term. The default is 1 - MS-SSIM; a differentiable
// VMAF could be slotted in here without touching the trainer.
class PerceptualLoss {
public:
    virtual ~PerceptualLoss() = default;
    virtual Var build(Tape& t, Var pred, Var target) const = 0;
};

class MsSsimPerceptualLoss : public PerceptualLoss {
public:
    explicit MsSsimPerceptualLoss(int scales = 5) : scales_(scales) {}
    Var build(Tape& t, Var pred, Var target) const override;

private:
    int scales_;
};

struct LossVars {
    Var total;
    LossBreakdown values;
};

// total = wp*perceptual + wb*bitrate + w1*pre + w2*post, summed left to
// right in that order. pre/post are L1 against the input frame; perceptual
// compares the proxied frame against the input. Terms with zero weight are
// excluded from the graph entirely (their values are still reported).
LossVars total_loss(Tape& t, Var input_frame, Var enhanced, Var proxied, Var symbols,
                    const LossWeights& weights,
                    const PerceptualLoss* perceptual = nullptr);

}  // namespace scene

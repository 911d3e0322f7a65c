#include "scene/loss.hpp"

#include <cmath>

#include "scene/msssim.hpp"
#include "scene/ops.hpp"
#include "scene/proxy.hpp"

namespace scene {

void LossWeights::validate() const {
    if (perceptual < 0.0 || bitrate < 0.0 || pre < 0.0 || post < 0.0) {
        throw ValueError("loss weights must be non-negative");
    }
}

Var MsSsimPerceptualLoss::build(Tape& t, Var pred, Var target) const {
    return affine(t, ms_ssim(t, pred, target, scales_), -1.0, 1.0);  // 1 - msssim
}

LossVars total_loss(Tape& t, Var input_frame, Var enhanced, Var proxied, Var symbols,
                    const LossWeights& weights, const PerceptualLoss* perceptual) {
    weights.validate();
    ensure_same_shape(t.value(input_frame), t.value(enhanced), "total_loss");
    ensure_same_shape(t.value(input_frame), t.value(proxied), "total_loss");

    const MsSsimPerceptualLoss default_perceptual;
    const PerceptualLoss& perc = perceptual ? *perceptual : default_perceptual;

    LossVars out;

    // Each term is built taped only when its weight participates; values for
    // reporting always come from the same forward arithmetic.
    Var perc_var{}, rate_var{}, pre_var{}, post_var{};
    if (weights.perceptual > 0.0) {
        perc_var = perc.build(t, proxied, input_frame);
        out.values.perceptual = t.value(perc_var).item();
    } else {
        Tape scratch;
        out.values.perceptual =
            scratch
                .value(perc.build(scratch, scratch.constant(t.value(proxied)),
                                  scratch.constant(t.value(input_frame))))
                .item();
    }
    if (weights.bitrate > 0.0) {
        rate_var = bitrate_estimate(t, symbols);
        out.values.bitrate = t.value(rate_var).item();
    } else {
        out.values.bitrate = bitrate_estimate(t.value(symbols));
    }
    if (weights.pre > 0.0) {
        pre_var = l1_loss(t, enhanced, input_frame);
        out.values.pre = t.value(pre_var).item();
    } else {
        out.values.pre = ops::l1_loss(t.value(enhanced), t.value(input_frame));
    }
    if (weights.post > 0.0) {
        post_var = l1_loss(t, proxied, input_frame);
        out.values.post = t.value(post_var).item();
    } else {
        out.values.post = ops::l1_loss(t.value(proxied), t.value(input_frame));
    }

    Var total{};
    auto accumulate = [&](Var term, double w) {
        if (!(w > 0.0) || !term.valid()) {
            return;
        }
        Var scaled = affine(t, term, w, 0.0);
        total = total.valid() ? add(t, total, scaled) : scaled;
    };
    accumulate(perc_var, weights.perceptual);
    accumulate(rate_var, weights.bitrate);
    accumulate(pre_var, weights.pre);
    accumulate(post_var, weights.post);
    if (!total.valid()) {
        total = t.constant(Tensor::scalar(0.0));
    }

    // Reported total is the same left-to-right weighted sum: identical
    // floating-point operations to the taped expression above.
    double value = 0.0;
    bool first = true;
    auto fold = [&](double w, double v) {
        if (!(w > 0.0)) {
            return;
        }
        const double term = w * v;
        value = first ? term : value + term;
        first = false;
    };
    fold(weights.perceptual, out.values.perceptual);
    fold(weights.bitrate, out.values.bitrate);
    fold(weights.pre, out.values.pre);
    fold(weights.post, out.values.post);
    out.values.total = value;
    out.total = total;

    if (!std::isfinite(out.values.total)) {
        throw ValueError("total_loss: non-finite total");
    }
    return out;
}

}  // namespace scene

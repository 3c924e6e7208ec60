#pragma once

#include "wavlink/adapt.hpp"
#include "wavlink/tensor.hpp"

#include <vector>

namespace wavlink {

// Temperature lives in log space so tau stays positive; tau is clamped to
// kMaxTemperature by the trainer after each step.
constexpr double kMaxTemperature = 100.0;

struct LossParams {
    TensorPtr log_temperature; // [1]
    TensorPtr siglip_bias;     // [1]

    double temperature() const;
    static LossParams init_for(LossKind kind);
};

struct MatryoshkaSpec {
    std::vector<int> dims; // strictly descending, dims[0] == embedding dim

    void validate(int full_dim) const;
};

// Symmetric InfoNCE over the batch similarity matrix: softmax cross-entropy
// with diagonal targets, averaged over the audio->text and text->audio
// directions with equal weight.
TensorPtr clip_loss(const TensorPtr& ua, const TensorPtr& ut, const LossParams& params);

// Pairwise sigmoid loss: logits tau*<ua_i, ut_j> + bias, diagonal labelled
// positive, everything else negative, summed over all pairs and divided by
// the batch size.
TensorPtr siglip_loss(const TensorPtr& ua, const TensorPtr& ut, const LossParams& params);

// Mean of the base loss over prefix slices of the normalized embeddings at
// each ladder dimension. renormalize_slices rescales each slice back to unit
// norm before the base loss; the default applies the loss to the raw slice.
TensorPtr matryoshka_loss(const TensorPtr& ua, const TensorPtr& ut,
                          const MatryoshkaSpec& spec, LossKind base,
                          const LossParams& params, bool renormalize_slices = false);

} // namespace wavlink

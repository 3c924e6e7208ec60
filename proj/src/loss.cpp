#include "wavlink/loss.hpp"

#include "wavlink/errors.hpp"
#include "wavlink/ops.hpp"

#include <cmath>

namespace wavlink {

double LossParams::temperature() const {
    return std::exp(log_temperature->data[0]);
}

LossParams LossParams::init_for(LossKind kind) {
    LossParams p;
    if (kind == LossKind::clip) {
        p.log_temperature = scalar_tensor(std::log(1.0 / 0.07), true);
        p.siglip_bias = scalar_tensor(0.0, true);
    } else {
        p.log_temperature = scalar_tensor(std::log(10.0), true);
        p.siglip_bias = scalar_tensor(-10.0, true);
    }
    return p;
}

void MatryoshkaSpec::validate(int full_dim) const {
    if (dims.empty()) throw ValidationError("matryoshka spec: empty ladder");
    if (dims.front() != full_dim) {
        throw ValidationError("matryoshka spec: ladder must start at the embedding dim " +
                              std::to_string(full_dim));
    }
    for (size_t i = 1; i < dims.size(); ++i) {
        if (dims[i] <= 0 || dims[i] >= dims[i - 1]) {
            throw ValidationError("matryoshka spec: dims must be strictly descending");
        }
    }
}

namespace {

void check_batch(const TensorPtr& ua, const TensorPtr& ut) {
    if (ua->shape.size() != 2 || ut->shape.size() != 2) {
        throw ValidationError("contrastive loss: embeddings must be 2-D batches");
    }
    if (ua->shape != ut->shape) {
        throw ValidationError("contrastive loss: batch shapes differ: " +
                              ua->shape_str() + " vs " + ut->shape_str());
    }
}

} // namespace

TensorPtr clip_loss(const TensorPtr& ua, const TensorPtr& ut, const LossParams& params) {
    check_batch(ua, ut);
    const int b = ua->shape[0];
    auto tau = ops::exp_elem(params.log_temperature);
    auto logits = ops::scalar_affine(ops::matmul(ua, ops::transpose(ut)), tau, nullptr);
    std::vector<int> diag(b);
    for (int i = 0; i < b; ++i) diag[i] = i;
    auto row_ce = ops::softmax_cross_entropy(logits, diag);
    auto col_ce = ops::softmax_cross_entropy(ops::transpose(logits), diag);
    return ops::scale(ops::add(row_ce, col_ce), 0.5);
}

TensorPtr siglip_loss(const TensorPtr& ua, const TensorPtr& ut, const LossParams& params) {
    check_batch(ua, ut);
    const int b = ua->shape[0];
    auto tau = ops::exp_elem(params.log_temperature);
    auto logits = ops::scalar_affine(ops::matmul(ua, ops::transpose(ut)), tau,
                                     params.siglip_bias);
    // -label: +1 off-diagonal, -1 on the diagonal, so softplus(-l*z) = softplus(neg*z)
    std::vector<double> neg(static_cast<size_t>(b) * b, 1.0);
    for (int i = 0; i < b; ++i) neg[static_cast<size_t>(i) * b + i] = -1.0;
    auto signed_logits = ops::mul(logits, make_tensor({b, b}, std::move(neg), false));
    return ops::scale(ops::sum_all(ops::softplus(signed_logits)), 1.0 / b);
}

TensorPtr matryoshka_loss(const TensorPtr& ua, const TensorPtr& ut,
                          const MatryoshkaSpec& spec, LossKind base,
                          const LossParams& params, bool renormalize_slices) {
    check_batch(ua, ut);
    spec.validate(ua->shape[1]);
    TensorPtr total;
    for (int dk : spec.dims) {
        auto uak = ops::slice_cols(ua, 0, dk);
        auto utk = ops::slice_cols(ut, 0, dk);
        if (renormalize_slices) {
            uak = ops::l2_normalize_rows(uak);
            utk = ops::l2_normalize_rows(utk);
        }
        auto lk = base == LossKind::clip ? clip_loss(uak, utk, params)
                                         : siglip_loss(uak, utk, params);
        total = total ? ops::add(total, lk) : lk;
    }
    return ops::scale(total, 1.0 / static_cast<double>(spec.dims.size()));
}

} // namespace wavlink

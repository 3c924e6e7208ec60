#include "wavlink/optim.hpp"

#include "wavlink/errors.hpp"

#include <cmath>

namespace wavlink {

double cosine_warmup_lr(int64_t step, int64_t total_steps, const TrainConfig& cfg) {
    if (total_steps <= 0) throw ValidationError("cosine_warmup_lr: total_steps must be > 0");
    if (step < 0 || step > total_steps) {
        throw ValidationError("cosine_warmup_lr: step outside [0, total_steps]");
    }
    const int64_t warmup = std::max<int64_t>(
        1, static_cast<int64_t>(std::floor(cfg.warmup_fraction * total_steps)));
    if (step <= warmup) {
        return cfg.lr_peak * static_cast<double>(step) / static_cast<double>(warmup);
    }
    const double progress = static_cast<double>(step - warmup) /
                            static_cast<double>(total_steps - warmup);
    const double pi = 3.14159265358979323846;
    return cfg.lr_peak * 0.5 * (1.0 + std::cos(pi * progress));
}

void clip_gradients(ParamStore& params, const TrainableMask& mask, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const auto& [name, t] : params.items()) {
        if (!mask.count(name)) continue;
        for (double g : t->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (const auto& [name, t] : params.items()) {
        if (!mask.count(name)) continue;
        for (double& g : t->grad) g *= scale;
    }
}

void adamw_step(ParamStore& params, const TrainableMask& mask, AdamState& state,
                double lr, const TrainConfig& cfg) {
    for (const auto& [name, t] : params.items()) {
        if (!mask.count(name)) continue;
        if (t->grad.size() != t->data.size()) {
            throw NumericError("adamw_step: missing gradient for trainable tensor " + name);
        }
        for (double g : t->grad) {
            if (!std::isfinite(g)) {
                throw NumericError("adamw_step: non-finite gradient in tensor " + name);
            }
        }
    }

    state.step += 1;
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    for (const auto& [name, t] : params.items()) {
        if (!mask.count(name)) continue;
        auto& m = state.m[name];
        auto& v = state.v[name];
        if (m.size() != t->data.size()) m.assign(t->data.size(), 0.0);
        if (v.size() != t->data.size()) v.assign(t->data.size(), 0.0);
        for (size_t i = 0; i < t->data.size(); ++i) {
            const double g = t->grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            t->data[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps) +
                                cfg.weight_decay * t->data[i]);
        }
    }
}

} // namespace wavlink

#pragma once

#include "wavlink/adapt.hpp"
#include "wavlink/config.hpp"
#include "wavlink/params.hpp"

#include <map>
#include <vector>

namespace wavlink {

// Linear warmup to lr_peak over warmup_fraction of the run, cosine decay to
// zero afterwards.
double cosine_warmup_lr(int64_t step, int64_t total_steps, const TrainConfig& cfg);

struct AdamState {
    int64_t step{0};
    std::map<std::string, std::vector<double>> m;
    std::map<std::string, std::vector<double>> v;
};

// Decoupled-weight-decay Adam with bias correction, applied only to tensors
// named by the mask. Rejects the step on a non-finite gradient.
void adamw_step(ParamStore& params, const TrainableMask& mask, AdamState& state,
                double lr, const TrainConfig& cfg);

// Global-norm gradient clip over the masked tensors (no-op for max_norm<=0).
void clip_gradients(ParamStore& params, const TrainableMask& mask, double max_norm);

} // namespace wavlink

#pragma once

#include "wavlink/rng.hpp"
#include "wavlink/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace wavlink {

struct GradCheckReport {
    std::string op_name;
    double max_relative_error{0.0};
    double tolerance{0.0};
    bool passed{false};
    size_t coords_checked{0};
};

struct GradCheckOptions {
    double step{1e-5};
    // < 0 checks every coordinate; otherwise a deterministic random subset
    // per input (keeps composite checks under control)
    int max_coords_per_input{-1};
    uint64_t subsample_seed{17};
};

// Compares analytic gradients of a scalar-valued function against central
// finite differences with step scaled to the input magnitude. The error
// metric is |analytic - numeric| / max(1, |analytic|, |numeric|), i.e.
// relative for O(1) gradients and absolute below that.
GradCheckReport grad_check(const std::string& op_name,
                           const std::function<TensorPtr(const std::vector<TensorPtr>&)>& fn,
                           const std::vector<TensorPtr>& inputs,
                           double tolerance,
                           const GradCheckOptions& opts = {});

} // namespace wavlink

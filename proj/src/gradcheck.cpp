#include "wavlink/gradcheck.hpp"

#include "wavlink/errors.hpp"

#include <algorithm>
#include <cmath>

namespace wavlink {

GradCheckReport grad_check(const std::string& op_name,
                           const std::function<TensorPtr(const std::vector<TensorPtr>&)>& fn,
                           const std::vector<TensorPtr>& inputs,
                           double tolerance,
                           const GradCheckOptions& opts) {
    for (const auto& in : inputs) {
        if (!all_finite(*in)) {
            throw NumericError("grad_check(" + op_name + "): non-finite input");
        }
        in->requires_grad = true;
        in->zero_grad();
    }

    auto loss = fn(inputs);
    if (loss->numel() != 1) {
        throw ValidationError("grad_check(" + op_name + "): function must return a scalar");
    }
    backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (const auto& in : inputs) {
        in->ensure_grad();
        for (double g : in->grad) {
            if (!std::isfinite(g)) {
                throw NumericError("grad_check(" + op_name + "): non-finite analytic gradient");
            }
        }
        analytic.push_back(in->grad);
    }

    GradCheckReport report;
    report.op_name = op_name;
    report.tolerance = tolerance;

    Rng pick(opts.subsample_seed);
    for (size_t t = 0; t < inputs.size(); ++t) {
        auto& in = inputs[t];
        const size_t n = in->data.size();
        std::vector<size_t> coords;
        if (opts.max_coords_per_input < 0 ||
            n <= static_cast<size_t>(opts.max_coords_per_input)) {
            coords.resize(n);
            for (size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            for (int i = 0; i < opts.max_coords_per_input; ++i) {
                coords.push_back(pick.uniform_index(n));
            }
            std::sort(coords.begin(), coords.end());
            coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        }
        for (size_t idx : coords) {
            const double orig = in->data[idx];
            const double h = opts.step * std::max(1.0, std::abs(orig));
            in->data[idx] = orig + h;
            const double fp = fn(inputs)->data[0];
            in->data[idx] = orig - h;
            const double fm = fn(inputs)->data[0];
            in->data[idx] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[t][idx];
            const double err = std::abs(a - numeric) /
                               std::max({1.0, std::abs(a), std::abs(numeric)});
            report.max_relative_error = std::max(report.max_relative_error, err);
            ++report.coords_checked;
        }
    }
    report.passed = report.max_relative_error <= tolerance;
    return report;
}

} // namespace wavlink

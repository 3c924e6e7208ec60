#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace wavlink {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Node of a reverse-mode autodiff graph. Values are 64-bit floats in
// row-major order. Ops allocate a fresh node per result; parameters are
// leaf nodes reused across steps, so callers zero grads between steps.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad; // allocated lazily, same length as data
    bool requires_grad{false};

    std::vector<TensorPtr> parents;
    // accumulates d(loss)/d(parent) into parents' grad buffers given this
    // node's grad; null for leaves
    std::function<void(Tensor&)> backward_fn;

    size_t numel() const {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }
    int rows() const { return shape.empty() ? 1 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

    void ensure_grad();
    void zero_grad();

    std::string shape_str() const;
};

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data,
                      bool requires_grad = false);
TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);
TensorPtr full(std::vector<int> shape, double value, bool requires_grad = false);
TensorPtr scalar_tensor(double value, bool requires_grad = false);

// Runs reverse-mode accumulation from a scalar loss node. Seeds the loss
// grad with 1 and walks the graph in reverse topological order.
void backward(const TensorPtr& loss);

bool all_finite(const Tensor& t);

// While alive, ops produce detached results (no graph recorded) even when
// inputs require grad. Thread-local, nestable.
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

} // namespace wavlink

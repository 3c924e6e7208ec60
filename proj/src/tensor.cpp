#include "wavlink/tensor.hpp"

#include "wavlink/errors.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace wavlink {

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) {
        grad.assign(data.size(), 0.0);
    }
}

void Tensor::zero_grad() {
    grad.assign(data.size(), 0.0);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data,
                      bool requires_grad) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ValidationError("tensor extent must be positive");
        n *= static_cast<size_t>(d);
    }
    if (n != data.size()) {
        throw ValidationError("tensor data length " + std::to_string(data.size()) +
                              " does not match shape product " + std::to_string(n));
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(data);
    t->requires_grad = requires_grad;
    if (requires_grad) t->ensure_grad();
    return t;
}

TensorPtr zeros(std::vector<int> shape, bool requires_grad) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return make_tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

TensorPtr full(std::vector<int> shape, double value, bool requires_grad) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return make_tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

TensorPtr scalar_tensor(double value, bool requires_grad) {
    return make_tensor({1}, {value}, requires_grad);
}

void backward(const TensorPtr& loss) {
    if (!loss) throw ValidationError("backward: null loss node");
    if (loss->numel() != 1) {
        throw ValidationError("backward requires a scalar node, got " + loss->shape_str());
    }

    // iterative post-order DFS; parent visit order is fixed so accumulation
    // order (and therefore bit-level results) is deterministic
    std::vector<Tensor*> topo;
    std::unordered_set<Tensor*> visited;
    struct Frame {
        Tensor* node;
        size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({loss.get(), 0});
    visited.insert(loss.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Tensor* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && visited.insert(p).second) {
                stack.push_back({p, 0});
            }
        } else {
            topo.push_back(f.node);
            stack.pop_back();
        }
    }

    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Tensor* t = *it;
        if (t->backward_fn) {
            for (auto& p : t->parents) {
                if (p->requires_grad) p->ensure_grad();
            }
            t->backward_fn(*t);
        }
    }
}

bool all_finite(const Tensor& t) {
    for (double x : t.data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

namespace {
thread_local int g_no_grad_depth = 0;
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

bool grad_enabled() { return g_no_grad_depth == 0; }

} // namespace wavlink

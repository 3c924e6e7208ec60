#pragma once

#include "wavlink/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace wavlink {

// Named parameter registry. Iteration follows insertion order so optimizer
// sweeps, checkpoints and masks are deterministic.
class ParamStore {
public:
    void add(const std::string& name, const TensorPtr& t);
    bool contains(const std::string& name) const;
    const TensorPtr& get(const std::string& name) const;

    const std::vector<std::pair<std::string, TensorPtr>>& items() const { return items_; }
    std::vector<std::string> names() const;
    size_t size() const { return items_.size(); }

    void zero_grads();
    size_t total_elements() const;

private:
    std::vector<std::pair<std::string, TensorPtr>> items_;
    std::map<std::string, size_t> index_;
};

} // namespace wavlink

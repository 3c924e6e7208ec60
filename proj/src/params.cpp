#include "wavlink/params.hpp"

#include "wavlink/errors.hpp"

namespace wavlink {

void ParamStore::add(const std::string& name, const TensorPtr& t) {
    if (!t) throw ValidationError("ParamStore: null tensor for " + name);
    if (index_.count(name)) throw ValidationError("ParamStore: duplicate name " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, t);
}

bool ParamStore::contains(const std::string& name) const {
    return index_.count(name) != 0;
}

const TensorPtr& ParamStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("ParamStore: unknown parameter " + name);
    return items_[it->second].second;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [name, _] : items_) out.push_back(name);
    return out;
}

void ParamStore::zero_grads() {
    for (auto& [_, t] : items_) t->zero_grad();
}

size_t ParamStore::total_elements() const {
    size_t n = 0;
    for (const auto& [_, t] : items_) n += t->numel();
    return n;
}

} // namespace wavlink

#ifndef BDEKIT_PARAM_STORE_HPP
#define BDEKIT_PARAM_STORE_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "bdekit/tensor.hpp"

namespace bdekit::nn {

template <typename T>
struct ParamEntry {
    std::string path;
    Tensor4<T> tensor;
    std::vector<T> m, v; // Adam moment estimates, allocated on first step
};

/// Flat registry of named parameters. Registration order is fixed, so
/// optimizer sweeps and checkpoint layout are reproducible.
template <typename T>
class ParamStore {
public:
    /// Returns the stored tensor by value: Tensor4 is a shared handle, and a
    /// reference into the entry vector would dangle after the next add.
    Tensor4<T> add(const std::string& path, Tensor4<T> tensor) {
        if (index_.count(path))
            throw InternalError("duplicate parameter path: " + path);
        tensor.node()->requires_grad = true;
        index_[path] = entries_.size();
        entries_.push_back({path, std::move(tensor), {}, {}});
        return entries_.back().tensor;
    }

    bool contains(const std::string& path) const { return index_.count(path); }

    Tensor4<T>& at(const std::string& path) {
        auto it = index_.find(path);
        if (it == index_.end())
            throw InternalError("unknown parameter path: " + path);
        return entries_[it->second].tensor;
    }
    const Tensor4<T>& at(const std::string& path) const {
        auto it = index_.find(path);
        if (it == index_.end())
            throw InternalError("unknown parameter path: " + path);
        return entries_[it->second].tensor;
    }

    std::vector<ParamEntry<T>>& entries() { return entries_; }
    const std::vector<ParamEntry<T>>& entries() const { return entries_; }

    size_t total_parameters() const {
        size_t n = 0;
        for (const auto& e : entries_) n += e.tensor.numel();
        return n;
    }

    /// Allocates a zeroed gradient for every parameter. Doing the allocation
    /// here means a parameter untouched by the following backward pass ends
    /// the step with an explicit zero gradient instead of a missing buffer.
    void zero_grad() {
        for (auto& e : entries_) {
            e.tensor.node()->ensure_grad();
            e.tensor.zero_grad();
        }
    }

private:
    std::vector<ParamEntry<T>> entries_;
    std::unordered_map<std::string, size_t> index_;
};

template <typename T>
struct AdamState {
    T learning_rate = T(1e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    int64_t t = 0; // completed steps
};

/// One Adam update over every parameter that received a gradient in the
/// last backward pass. Parameters without a gradient are an error: silently
/// skipping them would hide a disconnected graph.
template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state) {
    state.t += 1;
    const T bc1 = T(1) - std::pow(state.beta1, static_cast<T>(state.t));
    const T bc2 = T(1) - std::pow(state.beta2, static_cast<T>(state.t));
    for (auto& e : params.entries()) {
        if (!e.tensor.has_grad())
            throw InternalError("parameter " + e.path +
                                " has no gradient; was it used in the graph?");
        auto& value = e.tensor.values();
        const auto& grad = e.tensor.grad();
        if (e.m.empty()) {
            e.m.assign(value.size(), T(0));
            e.v.assign(value.size(), T(0));
        }
        for (size_t i = 0; i < value.size(); ++i) {
            const T g = grad[i];
            e.m[i] = state.beta1 * e.m[i] + (T(1) - state.beta1) * g;
            e.v[i] = state.beta2 * e.v[i] + (T(1) - state.beta2) * g * g;
            const T mhat = e.m[i] / bc1;
            const T vhat = e.v[i] / bc2;
            value[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

} // namespace bdekit::nn

#endif

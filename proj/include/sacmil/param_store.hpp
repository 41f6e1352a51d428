#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sacmil/tensor.hpp"

namespace sacmil {

// Named trainable arrays in deterministic creation order. Each parameter's
// gradient slot is the tensor's own grad buffer, co-shaped by construction.
template <typename S>
class ParamStore {
public:
    TensorPtr<S> create(const std::string& name, TensorPtr<S> value) {
        for (const auto& [n, t] : items_)
            if (n == name) throw ContractError("duplicate parameter name: " + name);
        value->ensure_grad();
        items_.emplace_back(name, value);
        return value;
    }

    TensorPtr<S> get(const std::string& name) const {
        for (const auto& [n, t] : items_)
            if (n == name) return t;
        throw ContractError("unknown parameter: " + name);
    }

    std::size_t count() const { return items_.size(); }

    std::size_t value_count() const {
        std::size_t n = 0;
        for (const auto& [name, t] : items_) n += t->size();
        return n;
    }

    void zero_grads() {
        for (auto& [name, t] : items_) t->zero_grad();
    }

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::vector<std::pair<std::string, TensorPtr<S>>> items_;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam. Moments are zero at creation; the step counter
// advances once per update and gradients are cleared after each step.
template <typename S>
class Adam {
public:
    Adam(ParamStore<S>& params, AdamConfig cfg) : cfg_(cfg) {
        for (auto& [name, t] : params) {
            m_.emplace_back(t->size(), S(0));
            v_.emplace_back(t->size(), S(0));
        }
    }

    void step(ParamStore<S>& params) {
        if (params.count() != m_.size())
            throw ContractError("adam state does not match parameter store layout");
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        std::size_t slot = 0;
        for (auto& [name, p] : params) {
            if (p->size() != m_[slot].size())
                throw ContractError("adam state shape drift for parameter " + name);
            auto& m = m_[slot];
            auto& v = v_[slot];
            for (std::size_t i = 0; i < p->size(); ++i) {
                const S g = p->grad[i];
                m[i] = static_cast<S>(cfg_.beta1) * m[i] + static_cast<S>(1.0 - cfg_.beta1) * g;
                v[i] = static_cast<S>(cfg_.beta2) * v[i] + static_cast<S>(1.0 - cfg_.beta2) * g * g;
                const double mhat = static_cast<double>(m[i]) / bc1;
                const double vhat = static_cast<double>(v[i]) / bc2;
                p->data[i] -= static_cast<S>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
            }
            ++slot;
        }
        params.zero_grads();
    }

    std::size_t steps() const { return t_; }

private:
    AdamConfig cfg_;
    std::size_t t_ = 0;
    std::vector<std::vector<S>> m_;
    std::vector<std::vector<S>> v_;
};

// Glorot-uniform fan-based init for a fan_in x fan_out map.
template <typename S>
TensorPtr<S> glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return uniform<S>({fan_in, fan_out}, rng, -a, a);
}

}  // namespace sacmil

#include "rtraj/optim.hpp"

#include <cmath>

namespace rtraj {

Adam::Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& [name, t] : params_) {
        (void)name;
        m_.emplace_back(t.size(), 0.0);
        v_.emplace_back(t.size(), 0.0);
    }
}

void Adam::zero_grad() {
    for (auto& [name, t] : params_) {
        (void)name;
        t.clear_grad();
    }
}

void Adam::clip_global_norm(double max_norm) {
    double sq = 0.0;
    for (auto& [name, t] : params_) {
        (void)name;
        if (!t.has_grad()) continue;
        for (double g : t.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    const double s = max_norm / norm;
    for (auto& [name, t] : params_) {
        (void)name;
        if (!t.has_grad()) continue;
        auto* node = t.node();
        for (auto& g : node->grad) g *= s;
    }
}

void Adam::step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& [name, t] = params_[k];
        auto vals = t.values_mut();
        auto& m = m_[k];
        auto& v = v_[k];
        const bool has_grad = t.has_grad();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double g = has_grad ? t.node()->grad[i] : 0.0;
            if (std::isnan(g)) {
                throw NumericError("adam: NaN gradient for parameter '" + name + "'");
            }
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            vals[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

Adam::Snapshot Adam::snapshot() const { return {step_, m_, v_}; }

void Adam::restore(const Snapshot& s) {
    if (s.m.size() != params_.size() || s.v.size() != params_.size()) {
        throw IoError("adam restore: slot count mismatch");
    }
    for (std::size_t k = 0; k < params_.size(); ++k) {
        if (s.m[k].size() != params_[k].second.size() ||
            s.v[k].size() != params_[k].second.size()) {
            throw IoError("adam restore: moment shape mismatch for '" + params_[k].first + "'");
        }
    }
    step_ = s.step;
    m_ = s.m;
    v_ = s.v;
}

}  // namespace rtraj

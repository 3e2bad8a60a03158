#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rtraj/tensor.hpp"

namespace rtraj {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed, ordered parameter list. Parameters with
/// no gradient buffer are treated as zero-gradient; a NaN gradient raises
/// NumericError naming the parameter.
class Adam {
  public:
    Adam() = default;
    Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg = {});

    void zero_grad();
    /// Scales all gradients so their joint L2 norm is at most max_norm.
    void clip_global_norm(double max_norm);
    void step();

    std::size_t step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }
    const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }

    struct Snapshot {
        std::size_t step = 0;
        std::vector<std::vector<double>> m, v;
    };
    Snapshot snapshot() const;
    void restore(const Snapshot& s);

  private:
    std::vector<std::pair<std::string, Tensor>> params_;
    std::vector<std::vector<double>> m_, v_;
    AdamConfig cfg_;
    std::size_t step_ = 0;
};

}  // namespace rtraj

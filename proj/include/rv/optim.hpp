#pragma once

#include "rv/rng.hpp"
#include "rv/tensor.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace rv {

struct Param {
    std::string name;
    Tensor2 value;
    Tensor2 grad;
    Tensor2 m;  // first moment
    Tensor2 v;  // second moment
};

// Named parameters with matching gradient and moment buffers, kept in
// insertion order so every walk over them is deterministic.
class ParamStore {
public:
    Param& add(const std::string& name, Tensor2 init);
    Param& get(const std::string& name);
    const Param& get(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    std::vector<Param>& all() { return params_; }
    const std::vector<Param>& all() const { return params_; }

    size_t param_count() const;  // total scalar count
    void zero_grad();

    // Global-norm clip across all gradients; returns the pre-clip norm.
    double clip_global_norm(double max_norm);

    double grad_norm() const;

    // Adam with bias correction; t is the 1-based step index.
    void adam_step(double lr, double beta1, double beta2, double eps, int64_t t);

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, size_t> index_;
};

// Truncated normal init (resamples beyond 2 sigma).
Tensor2 trunc_normal(RngStream& rng, int rows, int cols, double stddev);

}  // namespace rv

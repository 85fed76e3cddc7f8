#include "rv/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace rv {

Param& ParamStore::add(const std::string& name, Tensor2 init) {
    if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    index_[name] = params_.size();
    Param p;
    p.name = name;
    p.grad = Tensor2(init.rows, init.cols);
    p.m = Tensor2(init.rows, init.cols);
    p.v = Tensor2(init.rows, init.cols);
    p.value = std::move(init);
    params_.push_back(std::move(p));
    return params_.back();
}

Param& ParamStore::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return params_[it->second];
}

const Param& ParamStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return params_[it->second];
}

size_t ParamStore::param_count() const {
    size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& p : params_)
        std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

double ParamStore::grad_norm() const {
    double s = 0.0;
    for (const auto& p : params_)
        for (double g : p.grad.data) s += g * g;
    return std::sqrt(s);
}

double ParamStore::clip_global_norm(double max_norm) {
    double n = grad_norm();
    if (max_norm > 0.0 && n > max_norm) {
        double scale = max_norm / n;
        for (auto& p : params_)
            for (double& g : p.grad.data) g *= scale;
    }
    return n;
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps, int64_t t) {
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (auto& p : params_) {
        for (size_t i = 0; i < p.value.data.size(); ++i) {
            double g = p.grad.data[i];
            p.m.data[i] = beta1 * p.m.data[i] + (1.0 - beta1) * g;
            p.v.data[i] = beta2 * p.v.data[i] + (1.0 - beta2) * g * g;
            double mhat = p.m.data[i] / bc1;
            double vhat = p.v.data[i] / bc2;
            p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

Tensor2 trunc_normal(RngStream& rng, int rows, int cols, double stddev) {
    Tensor2 t(rows, cols);
    for (double& x : t.data) {
        double z;
        do {
            z = rng.normal();
        } while (std::fabs(z) > 2.0);
        x = z * stddev;
    }
    return t;
}

}  // namespace rv

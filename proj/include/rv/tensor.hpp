#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rv {

// Row-major dense matrix of doubles. The single storage type for
// parameters, activations and gradients.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
    Tensor2(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<size_t>(r) * c)
            throw std::invalid_argument("Tensor2: data length != rows*cols");
    }

    static Tensor2 zeros(int r, int c) { return Tensor2(r, c); }
    static Tensor2 full(int r, int c, double v) {
        Tensor2 t(r, c);
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    size_t size() const { return data.size(); }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    double* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;

    std::string shape_str() const;
};

// Eigen-backed products. C = A*B, A^T*B, A*B^T.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);

// In-place accumulate: dst += src (same shape).
void add_inplace(Tensor2& dst, const Tensor2& src);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

// v / ||v||_2, or the first basis vector when ||v||_2 <= eps_norm.
// Returns true in .second when the input was degenerate.
inline constexpr double kEpsNorm = 1e-12;
std::pair<std::vector<double>, bool> unit_normalize(const std::vector<double>& v,
                                                    double eps_norm = kEpsNorm);

// GELU, tanh approximation: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))).
double gelu(double x);
double gelu_grad(double x);

// -log(sigmoid(x)) and its derivative, overflow-safe for |x| up to ~700.
double softplus_neg(double x);
double softplus_neg_grad(double x);

}  // namespace rv

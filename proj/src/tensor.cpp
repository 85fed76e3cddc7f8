#include "rv/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace rv {

namespace {
// Graph building allocates and frees large activation buffers every batch.
// Keep those pages in the heap instead of handing them back to the kernel,
// otherwise page faults dominate the training loop.
struct AllocatorTuning {
    AllocatorTuning() {
#if defined(__GLIBC__)
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
    }
};
const AllocatorTuning g_allocator_tuning;
}  // namespace

namespace {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;
}  // namespace

bool Tensor2::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string Tensor2::shape_str() const {
    std::ostringstream os;
    os << "[" << rows << "x" << cols << "]";
    return os.str();
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
    Tensor2 c(a.rows, b.cols);
    MMap(c.data.data(), c.rows, c.cols).noalias() =
        CMap(a.data.data(), a.rows, a.cols) * CMap(b.data.data(), b.rows, b.cols);
    return c;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("matmul_tn: shape mismatch " + a.shape_str() + "^T * " + b.shape_str());
    Tensor2 c(a.cols, b.cols);
    MMap(c.data.data(), c.rows, c.cols).noalias() =
        CMap(a.data.data(), a.rows, a.cols).transpose() * CMap(b.data.data(), b.rows, b.cols);
    return c;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.cols)
        throw std::invalid_argument("matmul_nt: shape mismatch " + a.shape_str() + " * " + b.shape_str() + "^T");
    Tensor2 c(a.rows, b.rows);
    MMap(c.data.data(), c.rows, c.cols).noalias() =
        CMap(a.data.data(), a.rows, a.cols) * CMap(b.data.data(), b.rows, b.cols).transpose();
    return c;
}

void add_inplace(Tensor2& dst, const Tensor2& src) {
    if (!dst.same_shape(src))
        throw std::invalid_argument("add_inplace: shape mismatch");
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::pair<std::vector<double>, bool> unit_normalize(const std::vector<double>& v, double eps_norm) {
    if (v.empty()) throw std::invalid_argument("unit_normalize: empty vector");
    double n = norm2(v);
    if (n <= eps_norm) {
        std::vector<double> e(v.size(), 0.0);
        e[0] = 1.0;
        return {e, true};
    }
    std::vector<double> u(v.size());
    for (size_t i = 0; i < v.size(); ++i) u[i] = v[i] / n;
    return {u, false};
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu(double x) {
    double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    return 0.5 * x * (1.0 + t);
}

double gelu_grad(double x) {
    double inner = kGeluC * (x + kGeluA * x * x * x);
    double t = std::tanh(inner);
    double dinner = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

double softplus_neg(double x) {
    // -log(sigmoid(x)) = log(1 + exp(-x)), computed in the stable branch.
    if (x >= 0.0) return std::log1p(std::exp(-x));
    return -x + std::log1p(std::exp(x));
}

double softplus_neg_grad(double x) {
    // d/dx -log(sigmoid(x)) = -sigmoid(-x)
    if (x >= 0.0) {
        double e = std::exp(-x);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(x));
}

}  // namespace rv

#include "rv/graph.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace rv {

namespace {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Stride = Eigen::OuterStride<>;
using CBlock = Eigen::Map<const EMat, 0, Stride>;
using MBlock = Eigen::Map<EMat, 0, Stride>;

CBlock cblock(const Tensor2& t, int row0, int nrows, int col0, int ncols) {
    return CBlock(t.data.data() + static_cast<size_t>(row0) * t.cols + col0, nrows, ncols,
                  Stride(t.cols));
}
MBlock mblock(Tensor2& t, int row0, int nrows, int col0, int ncols) {
    return MBlock(t.data.data() + static_cast<size_t>(row0) * t.cols + col0, nrows, ncols,
                  Stride(t.cols));
}
}  // namespace

Node* Graph::make(Tensor2 val) {
    auto n = std::make_unique<Node>();
    n->grad = Tensor2(val.rows, val.cols);
    n->val = std::move(val);
    nodes_.push_back(std::move(n));
    return nodes_.back().get();
}

Node* Graph::input(Tensor2 v) { return make(std::move(v)); }

Node* Graph::matmul(Node* a, Node* b) {
    Node* out = make(rv::matmul(a->val, b->val));
    out->backward_fn = [a, b, out] {
        add_inplace(a->grad, matmul_nt(out->grad, b->val));
        add_inplace(b->grad, matmul_tn(a->val, out->grad));
    };
    return out;
}

Node* Graph::add(Node* a, Node* b) {
    if (!a->val.same_shape(b->val))
        throw std::invalid_argument("add: shape mismatch " + a->val.shape_str() + " vs " + b->val.shape_str());
    Tensor2 v = a->val;
    add_inplace(v, b->val);
    Node* out = make(std::move(v));
    out->backward_fn = [a, b, out] {
        add_inplace(a->grad, out->grad);
        add_inplace(b->grad, out->grad);
    };
    return out;
}

Node* Graph::add_rowvec(Node* x, Node* bias) {
    if (bias->val.rows != 1 || bias->val.cols != x->val.cols)
        throw std::invalid_argument("add_rowvec: bias must be [1 x cols]");
    Tensor2 v = x->val;
    for (int r = 0; r < v.rows; ++r) {
        double* p = v.row_ptr(r);
        for (int c = 0; c < v.cols; ++c) p[c] += bias->val.data[c];
    }
    Node* out = make(std::move(v));
    out->backward_fn = [x, bias, out] {
        add_inplace(x->grad, out->grad);
        for (int r = 0; r < out->grad.rows; ++r) {
            const double* p = out->grad.row_ptr(r);
            for (int c = 0; c < out->grad.cols; ++c) bias->grad.data[c] += p[c];
        }
    };
    return out;
}

Node* Graph::scale_add(Node* a, double alpha, double beta) {
    Tensor2 v = a->val;
    for (double& x : v.data) x = alpha * x + beta;
    Node* out = make(std::move(v));
    out->backward_fn = [a, alpha, out] {
        for (size_t i = 0; i < a->grad.data.size(); ++i)
            a->grad.data[i] += alpha * out->grad.data[i];
    };
    return out;
}

Node* Graph::gelu(Node* x) {
    Tensor2 v = x->val;
    for (double& e : v.data) e = rv::gelu(e);
    Node* out = make(std::move(v));
    out->backward_fn = [x, out] {
        for (size_t i = 0; i < x->grad.data.size(); ++i)
            x->grad.data[i] += out->grad.data[i] * gelu_grad(x->val.data[i]);
    };
    return out;
}

Node* Graph::layer_norm(Node* x, Node* gain, Node* bias, double eps) {
    const int R = x->val.rows, C = x->val.cols;
    if (gain->val.rows != 1 || gain->val.cols != C || bias->val.rows != 1 || bias->val.cols != C)
        throw std::invalid_argument("layer_norm: gain/bias must be [1 x cols]");
    Tensor2 v(R, C);
    auto xhat = std::make_shared<Tensor2>(R, C);
    auto inv_std = std::make_shared<std::vector<double>>(R);
    for (int r = 0; r < R; ++r) {
        const double* xr = x->val.row_ptr(r);
        double mu = 0.0;
        for (int c = 0; c < C; ++c) mu += xr[c];
        mu /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) var += (xr[c] - mu) * (xr[c] - mu);
        var /= C;
        double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        double* hr = xhat->row_ptr(r);
        double* vr = v.row_ptr(r);
        for (int c = 0; c < C; ++c) {
            hr[c] = (xr[c] - mu) * is;
            vr[c] = hr[c] * gain->val.data[c] + bias->val.data[c];
        }
    }
    Node* out = make(std::move(v));
    out->backward_fn = [x, gain, bias, out, xhat, inv_std, C] {
        const int R = out->grad.rows;
        for (int r = 0; r < R; ++r) {
            const double* dy = out->grad.row_ptr(r);
            const double* hr = xhat->row_ptr(r);
            double m1 = 0.0, m2 = 0.0;
            for (int c = 0; c < C; ++c) {
                double dxh = dy[c] * gain->val.data[c];
                m1 += dxh;
                m2 += dxh * hr[c];
            }
            m1 /= C;
            m2 /= C;
            double is = (*inv_std)[r];
            double* dx = x->grad.row_ptr(r);
            for (int c = 0; c < C; ++c) {
                double dxh = dy[c] * gain->val.data[c];
                dx[c] += is * (dxh - m1 - hr[c] * m2);
                gain->grad.data[c] += dy[c] * hr[c];
                bias->grad.data[c] += dy[c];
            }
        }
    };
    return out;
}

Node* Graph::attention(Node* q, Node* k, Node* v, int n_seq, int heads, const AttnMask& mask) {
    const int H = q->val.cols;
    const int tq = mask.tq, tkv = mask.tkv;
    if (H != k->val.cols || H != v->val.cols)
        throw std::invalid_argument("attention: column mismatch");
    if (H % heads != 0) throw std::invalid_argument("attention: cols not divisible by heads");
    if (q->val.rows != n_seq * tq || k->val.rows != n_seq * tkv || v->val.rows != n_seq * tkv)
        throw std::invalid_argument("attention: row/sequence mismatch");
    if (mask.allow.size() != static_cast<size_t>(tq) * tkv)
        throw std::invalid_argument("attention: mask size mismatch");
    const int dh = H / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor2 out_v(n_seq * tq, H);
    // Softmax probabilities kept for backward: [n_seq*heads*tq x tkv] flat.
    auto probs = std::make_shared<std::vector<double>>(
        static_cast<size_t>(n_seq) * heads * tq * tkv, 0.0);

    std::vector<double> z(static_cast<size_t>(tq) * tkv);
    for (int s = 0; s < n_seq; ++s) {
        for (int h = 0; h < heads; ++h) {
            auto Qh = cblock(q->val, s * tq, tq, h * dh, dh);
            auto Kh = cblock(k->val, s * tkv, tkv, h * dh, dh);
            auto Vh = cblock(v->val, s * tkv, tkv, h * dh, dh);
            Eigen::Map<EMat> Z(z.data(), tq, tkv);
            Z.noalias() = Qh * Kh.transpose() * scale;
            double* P = probs->data() + (static_cast<size_t>(s) * heads + h) * tq * tkv;
            for (int i = 0; i < tq; ++i) {
                const uint8_t* allow = mask.allow.data() + static_cast<size_t>(i) * tkv;
                double* zi = z.data() + static_cast<size_t>(i) * tkv;
                double m = -1e300;
                for (int j = 0; j < tkv; ++j)
                    if (allow[j] && zi[j] > m) m = zi[j];
                double sum = 0.0;
                double* pi = P + static_cast<size_t>(i) * tkv;
                for (int j = 0; j < tkv; ++j) {
                    pi[j] = allow[j] ? std::exp(zi[j] - m) : 0.0;
                    sum += pi[j];
                }
                for (int j = 0; j < tkv; ++j) pi[j] /= sum;
            }
            Eigen::Map<const EMat> Pm(P, tq, tkv);
            mblock(out_v, s * tq, tq, h * dh, dh).noalias() = Pm * Vh;
        }
    }

    Node* out = make(std::move(out_v));
    out->backward_fn = [q, k, v, out, probs, n_seq, heads, tq, tkv, dh, scale] {
        EMat dP(tq, tkv), dZ(tq, tkv);
        for (int s = 0; s < n_seq; ++s) {
            for (int h = 0; h < heads; ++h) {
                auto Qh = cblock(q->val, s * tq, tq, h * dh, dh);
                auto Kh = cblock(k->val, s * tkv, tkv, h * dh, dh);
                auto Vh = cblock(v->val, s * tkv, tkv, h * dh, dh);
                auto dO = cblock(out->grad, s * tq, tq, h * dh, dh);
                Eigen::Map<const EMat> Pm(
                    probs->data() + (static_cast<size_t>(s) * heads + h) * tq * tkv, tq, tkv);
                dP.noalias() = dO * Vh.transpose();
                for (int i = 0; i < tq; ++i) {
                    double rowsum = (dP.row(i).array() * Pm.row(i).array()).sum();
                    dZ.row(i) = Pm.row(i).array() * (dP.row(i).array() - rowsum);
                }
                mblock(q->grad, s * tq, tq, h * dh, dh).noalias() += dZ * Kh * scale;
                mblock(k->grad, s * tkv, tkv, h * dh, dh).noalias() += dZ.transpose() * Qh * scale;
                mblock(v->grad, s * tkv, tkv, h * dh, dh).noalias() += Pm.transpose() * dO;
            }
        }
    };
    return out;
}

Node* Graph::concat_rows(const std::vector<Node*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
    const int C = parts[0]->val.cols;
    int R = 0;
    for (Node* p : parts) {
        if (p->val.cols != C) throw std::invalid_argument("concat_rows: column mismatch");
        R += p->val.rows;
    }
    Tensor2 v(R, C);
    int r0 = 0;
    for (Node* p : parts) {
        std::copy(p->val.data.begin(), p->val.data.end(), v.data.begin() + static_cast<size_t>(r0) * C);
        r0 += p->val.rows;
    }
    Node* out = make(std::move(v));
    std::vector<Node*> ps = parts;
    out->backward_fn = [ps, out] {
        const int C = out->grad.cols;
        int r0 = 0;
        for (Node* p : ps) {
            const double* src = out->grad.data.data() + static_cast<size_t>(r0) * C;
            for (size_t i = 0; i < p->grad.data.size(); ++i) p->grad.data[i] += src[i];
            r0 += p->val.rows;
        }
    };
    return out;
}

Node* Graph::gather_rows(Node* x, std::vector<int> idx) {
    const int C = x->val.cols;
    Tensor2 v(static_cast<int>(idx.size()), C);
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= x->val.rows)
            throw std::invalid_argument("gather_rows: index out of range");
        std::copy(x->val.row_ptr(idx[i]), x->val.row_ptr(idx[i]) + C, v.row_ptr(static_cast<int>(i)));
    }
    Node* out = make(std::move(v));
    auto ix = std::make_shared<std::vector<int>>(std::move(idx));
    out->backward_fn = [x, out, ix] {
        const int C = out->grad.cols;
        for (size_t i = 0; i < ix->size(); ++i) {
            const double* src = out->grad.row_ptr(static_cast<int>(i));
            double* dst = x->grad.row_ptr((*ix)[i]);
            for (int c = 0; c < C; ++c) dst[c] += src[c];
        }
    };
    return out;
}

Node* Graph::row_normalize(Node* x, double eps_sq) {
    const int R = x->val.rows, C = x->val.cols;
    Tensor2 v(R, C);
    auto inv = std::make_shared<std::vector<double>>(R);
    for (int r = 0; r < R; ++r) {
        const double* xr = x->val.row_ptr(r);
        double s = eps_sq;
        for (int c = 0; c < C; ++c) s += xr[c] * xr[c];
        double iv = 1.0 / std::sqrt(s);
        (*inv)[r] = iv;
        double* vr = v.row_ptr(r);
        for (int c = 0; c < C; ++c) vr[c] = xr[c] * iv;
    }
    Node* out = make(std::move(v));
    out->backward_fn = [x, out, inv] {
        const int C = out->grad.cols;
        for (int r = 0; r < out->grad.rows; ++r) {
            const double* dy = out->grad.row_ptr(r);
            const double* xr = x->val.row_ptr(r);
            double iv = (*inv)[r];
            double xdy = 0.0;
            for (int c = 0; c < C; ++c) xdy += xr[c] * dy[c];
            double* dx = x->grad.row_ptr(r);
            for (int c = 0; c < C; ++c)
                dx[c] += iv * dy[c] - xr[c] * xdy * iv * iv * iv;
        }
    };
    return out;
}

Node* Graph::rowwise_dot(Node* a, Node* b) {
    if (!a->val.same_shape(b->val)) throw std::invalid_argument("rowwise_dot: shape mismatch");
    const int R = a->val.rows, C = a->val.cols;
    Tensor2 v(R, 1);
    for (int r = 0; r < R; ++r) {
        double s = 0.0;
        const double* ar = a->val.row_ptr(r);
        const double* br = b->val.row_ptr(r);
        for (int c = 0; c < C; ++c) s += ar[c] * br[c];
        v.data[r] = s;
    }
    Node* out = make(std::move(v));
    out->backward_fn = [a, b, out] {
        const int C = a->val.cols;
        for (int r = 0; r < out->grad.rows; ++r) {
            double g = out->grad.data[r];
            const double* ar = a->val.row_ptr(r);
            const double* br = b->val.row_ptr(r);
            double* da = a->grad.row_ptr(r);
            double* db = b->grad.row_ptr(r);
            for (int c = 0; c < C; ++c) {
                da[c] += g * br[c];
                db[c] += g * ar[c];
            }
        }
    };
    return out;
}

Node* Graph::mean_all(Node* x) {
    const double n = static_cast<double>(x->val.size());
    if (n == 0) throw std::invalid_argument("mean_all: empty tensor");
    double s = 0.0;
    for (double e : x->val.data) s += e;
    Tensor2 v(1, 1);
    v.data[0] = s / n;
    Node* out = make(std::move(v));
    out->backward_fn = [x, out, n] {
        double g = out->grad.data[0] / n;
        for (double& e : x->grad.data) e += g;
    };
    return out;
}

Node* Graph::softplus_neg(Node* x) {
    Tensor2 v = x->val;
    for (double& e : v.data) e = rv::softplus_neg(e);
    Node* out = make(std::move(v));
    out->backward_fn = [x, out] {
        for (size_t i = 0; i < x->grad.data.size(); ++i)
            x->grad.data[i] += out->grad.data[i] * softplus_neg_grad(x->val.data[i]);
    };
    return out;
}

void Graph::backward(Node* out, const Tensor2* upstream) {
    if (upstream) {
        if (!upstream->same_shape(out->grad))
            throw std::invalid_argument("backward: upstream gradient shape mismatch");
        out->grad = *upstream;
    } else {
        std::fill(out->grad.data.begin(), out->grad.data.end(), 1.0);
    }
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn();
    }
}

}  // namespace rv

#pragma once

#include "rv/tensor.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace rv {

// One value in a reverse-mode tape. Nodes are created by Graph ops in
// topological order; grad buffers match val shapes and start zeroed.
struct Node {
    Tensor2 val;
    Tensor2 grad;
    std::function<void()> backward_fn;  // empty for leaves
};

// Attention mask shared across sequences: allow[i*tkv + j] != 0 means query
// row i may attend key row j.
struct AttnMask {
    int tq = 0;
    int tkv = 0;
    std::vector<uint8_t> allow;

    static AttnMask full(int tq, int tkv) {
        AttnMask m{tq, tkv, std::vector<uint8_t>(static_cast<size_t>(tq) * tkv, 1)};
        return m;
    }
};

// Define-by-run tape over Tensor2. Values are computed eagerly at op
// construction; backward() walks nodes in reverse creation order. A graph
// supports a single backward pass; build a fresh one per evaluation.
class Graph {
public:
    Node* input(Tensor2 v);

    Node* matmul(Node* a, Node* b);
    Node* add(Node* a, Node* b);
    Node* add_rowvec(Node* x, Node* bias);           // bias [1 x C]
    Node* scale_add(Node* a, double alpha, double beta);  // alpha*a + beta
    Node* gelu(Node* x);
    Node* layer_norm(Node* x, Node* gain, Node* bias, double eps = 1e-5);
    Node* attention(Node* q, Node* k, Node* v, int n_seq, int heads, const AttnMask& mask);
    Node* concat_rows(const std::vector<Node*>& parts);
    Node* gather_rows(Node* x, std::vector<int> idx);
    Node* row_normalize(Node* x, double eps_sq = 1e-12);
    Node* rowwise_dot(Node* a, Node* b);             // [R x C],[R x C] -> [R x 1]
    Node* mean_all(Node* x);                         // -> [1 x 1]
    Node* softplus_neg(Node* x);                     // elementwise -log(sigmoid(x))

    Node* affine(Node* x, Node* w, Node* b) { return add_rowvec(matmul(x, w), b); }

    // Seeds the output gradient (all-ones when upstream is null) and
    // propagates to every node, accumulating parameter gradients in leaves.
    void backward(Node* out, const Tensor2* upstream = nullptr);

    size_t size() const { return nodes_.size(); }

private:
    Node* make(Tensor2 val);
    std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace rv

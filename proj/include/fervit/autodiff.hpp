#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fervit/rng.hpp"
#include "fervit/tensor.hpp"

namespace fervit {

// Named learnable (or fixed) array. Gradients accumulate across micro-batches
// until the optimizer consumes them.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Tensor v, bool train = true)
        : name(std::move(n)), value(std::move(v)), grad(value.shape()), trainable(train) {}

    void zero_grad() { grad.zero(); }
};

namespace ad {

// One forward evaluation tape. Nodes are created in topological order, so the
// reverse creation order is a valid backward schedule. The builder owns every
// node; Val handles stay valid for the builder's lifetime.
class Builder {
public:
    struct Node {
        Tensor value;
        Tensor grad; // lazily allocated on first contribution
        bool needs_grad = false;
        Parameter* param = nullptr;
        std::function<void()> backprop;
    };

    struct Val {
        Node* node = nullptr;
        const Tensor& value() const { return node->value; }
        const std::vector<std::size_t>& shape() const { return node->value.shape(); }
    };

    Builder() = default;
    Builder(const Builder&) = delete;
    Builder& operator=(const Builder&) = delete;

    Val constant(Tensor t);
    Val param(Parameter& p);

    // elementwise / broadcast
    Val add(Val a, Val b);                 // same shape
    Val add_bias(Val x, Val b);            // b broadcast over all but the last dim
    Val mul(Val a, Val b);                 // hadamard
    Val scale(Val x, double c);
    Val gelu(Val x);
    Val dropout(Val x, double p, Rng& rng, bool training);

    // linear algebra
    Val matmul(Val a, Val b);              // (m,k) x (k,n)
    Val bmm(Val a, Val b);                 // (B,m,k) x (B,k,n)
    Val transpose_last2(Val x);            // rank 2 or 3

    // shape plumbing
    Val reshape(Val x, std::vector<std::size_t> shape);
    Val expand_batch(Val x, std::size_t batch);          // (m,n) -> (B,m,n)
    Val split_heads(Val x, std::size_t heads);           // (B,N,H*d) -> (B*H,N,d)
    Val merge_heads(Val x, std::size_t heads);           // (B*H,N,d) -> (B,N,H*d)
    Val select_mid(Val x, std::size_t index);            // (B,G,D) -> (B,D) at G=index
    Val concat_lastdim(const std::vector<Val>& parts);   // (B,f_i) -> (B, sum f_i)
    Val slice_lastdim(Val x, std::size_t start, std::size_t len);

    // reductions / losses
    Val softmax_lastdim(Val x);
    Val layernorm(Val x, Val gamma, Val beta, double eps = 1e-5);
    Val sum_all(Val x);
    Val cross_entropy(Val logits, const std::vector<int>& targets);

    // Run reverse-mode on a scalar loss. Parameter gradients ACCUMULATE into
    // Parameter::grad (callers zero them between optimizer steps).
    void backward(Val loss);

private:
    Node* make(Tensor value, bool needs_grad);
    Tensor& grad_of(Node* n);

    std::vector<std::unique_ptr<Node>> nodes_;
};

using Val = Builder::Val;

} // namespace ad
} // namespace fervit

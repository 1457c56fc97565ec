// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace dgsa {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

namespace detail {

// One recorded op on the tape. Nodes are created in program order and carry a
// strictly increasing sequence number; backward() replays reachable nodes in
// reverse sequence order, which is a valid reverse-topological order because
// every input of a node was created before the node itself.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily, same extent as value
    bool requires_grad = false;
    std::uint64_t seq = 0;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void()> backward;  // distributes this->grad into inputs

    std::size_t size() const { return value.size(); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
    }
};

std::uint64_t next_seq();

}  // namespace detail

// Value-semantics handle to a tape node. Copies alias the same node. Tensors
// produced by ops are treated as immutable; only leaves (parameters, inputs)
// are ever mutated in place, by the optimizer and by gradcheck.
class Tensor {
   public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    std::size_t ndim() const { return node_->shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    const std::vector<double>& data() const { return node_->value; }
    // In-place mutation of a leaf's values (optimizer steps, finite-difference
    // probes). Must not be called on op outputs.
    std::vector<double>& mutable_data() { return node_->value; }

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    const std::vector<double>& grad() const;
    std::vector<double>& mutable_grad();
    void zero_grad();

    double item() const;
    double at(std::size_t r, std::size_t c) const;

    std::shared_ptr<detail::Node> node() const { return node_; }
    static Tensor wrap(std::shared_ptr<detail::Node> n) {
        Tensor t;
        t.node_ = std::move(n);
        return t;
    }

   private:
    std::shared_ptr<detail::Node> node_;
};

// ---- ops ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor softmax_rows(const Tensor& s);
Tensor sigmoid(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor gelu_tanh(const Tensor& x);
Tensor exp(const Tensor& x);

// Binary elementwise ops accept equal shapes or a scalar (1-element) operand;
// no other broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

// x / sqrt(mean(x^2, last axis) + eps) * gain, applied per last-axis slice.
Tensor rmsnorm(const Tensor& x, const Tensor& gain, double eps = 1e-6);

// Inverted dropout: train mode zeroes elements with probability p and scales
// survivors by 1/(1-p); eval mode is the identity.
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);

// Mean over the batch of -log softmax(logits)[label].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& a, Shape shape);

// diag(s) * a: scales row t of a by s[t].
Tensor row_scale(const Tensor& a, const Tensor& s);
// a + ones * b^T: adds b to every row of a.
Tensor add_bias(const Tensor& a, const Tensor& b);
// out[i] = table[ids[i]]; backward scatter-adds into the table rows.
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
Tensor mean_rows(const Tensor& a);  // {m,n} -> {1,n}
Tensor sum_all(const Tensor& a);    // -> {1}

// Reverse-mode sweep from a scalar loss. Visits each reachable node exactly
// once; leaf grads accumulate across calls until zero_grad().
void backward(const Tensor& loss);

// ---- gradient checking ----------------------------------------------------

struct GradCheckResult {
    bool pass = false;
    double max_rel_err = 0.0;
    std::vector<double> per_leaf_max;  // one entry per checked leaf
    std::string worst;                 // "leaf k elem i" of the worst element
};

// Central-difference check of d f / d leaves against the tape's gradients.
// f must be a deterministic scalar function of the current leaf values; it is
// evaluated twice up front to verify that. Relative error is
// |a - n| / max(1, |a|, |n|) so near-zero gradients degrade to absolute error.
GradCheckResult gradcheck(const std::function<Tensor()>& f, const std::vector<Tensor>& leaves,
                          double h = 1e-5, double tol = 1e-6);

}  // namespace dgsa

// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace dgsa {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

namespace detail {

std::uint64_t next_seq() {
    // Thread-local so independent runs on different threads never contend;
    // a single run is single-threaded, so its tape order is total.
    thread_local std::uint64_t counter = 0;
    return ++counter;
}

}  // namespace detail

namespace {

using detail::Node;

std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->seq = detail::next_seq();
    return n;
}

void require_2d(const Tensor& t, const char* op) {
    if (t.ndim() != 2)
        throw DimensionError(std::string(op) + ": expected a 2-d tensor, got " + shape_str(t.shape()));
}

// Register out = op(inputs...) on the tape when any input needs gradients.
Tensor finish(std::shared_ptr<Node> out, std::initializer_list<Tensor> ins,
              std::function<void()> bw) {
    bool need = false;
    for (const auto& t : ins) need = need || t.requires_grad();
    if (need) {
        out->requires_grad = true;
        for (const auto& t : ins) out->inputs.push_back(t.node());
        out->backward = std::move(bw);
    }
    return Tensor::wrap(std::move(out));
}

// dense kernels; the  *_acc variants accumulate (used by backward rules)
void mm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
           std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c(m x k) += a(m x n) * b(k x n)^T
void mm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
               std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            c[i * k + p] += acc;
        }
    }
}

// c(k x n) += a(m x k)^T * b(m x n)
void mm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

enum class EwKind { add, sub, mul };

Tensor elementwise_binary(const Tensor& a, const Tensor& b, EwKind kind, const char* name) {
    const bool a_scalar = a.size() == 1;
    const bool b_scalar = b.size() == 1;
    if (!(a.shape() == b.shape() || a_scalar || b_scalar))
        throw DimensionError(std::string(name) + ": incompatible shapes " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()) +
                             " (only equal shapes or a scalar operand broadcast)");

    const Shape& out_shape = a_scalar ? b.shape() : a.shape();
    const std::size_t n = numel(out_shape);
    std::vector<double> out(n);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = av[a_scalar ? 0 : i];
        const double y = bv[b_scalar ? 0 : i];
        switch (kind) {
            case EwKind::add: out[i] = x + y; break;
            case EwKind::sub: out[i] = x - y; break;
            case EwKind::mul: out[i] = x * y; break;
        }
    }
    auto node = make_node(out_shape, std::move(out));
    Node* self = node.get();
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return finish(std::move(node), {a, b}, [self, an, bn, kind, a_scalar, b_scalar, n]() {
        const auto& g = self->grad;
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                double d = g[i];
                if (kind == EwKind::mul) d *= bn->value[b_scalar ? 0 : i];
                an->grad[a_scalar ? 0 : i] += d;
            }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                double d = g[i];
                switch (kind) {
                    case EwKind::add: break;
                    case EwKind::sub: d = -d; break;
                    case EwKind::mul: d *= an->value[a_scalar ? 0 : i]; break;
                }
                bn->grad[b_scalar ? 0 : i] += d;
            }
        }
    });
}

Tensor unary_op(const Tensor& x, const std::function<double(double)>& fwd,
                // d/dx expressed from (x, y) so ops can reuse the output
                const std::function<double(double, double)>& dfdx) {
    const std::size_t n = x.size();
    std::vector<double> out(n);
    const auto& xv = x.data();
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(xv[i]);
    auto node = make_node(x.shape(), std::move(out));
    Node* self = node.get();
    Node* xn = x.node().get();
    return finish(std::move(node), {x}, [self, xn, dfdx, n]() {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
            xn->grad[i] += self->grad[i] * dfdx(xn->value[i], self->value[i]);
    });
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return from(std::move(shape), {}, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    std::vector<double> data(numel(shape), v);
    return from(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
    const std::size_t n = numel(shape);
    if (data.empty()) data.assign(n, 0.0);
    if (data.size() != n)
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    auto node = make_node(std::move(shape), std::move(data));
    node->requires_grad = requires_grad;
    return wrap(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

std::size_t Tensor::rows() const {
    require_2d(*this, "rows");
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    require_2d(*this, "cols");
    return node_->shape[1];
}

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty())
        throw UsageError("tensor has no gradient (backward not run or requires_grad unset)");
    return node_->grad;
}

std::vector<double>& Tensor::mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
    if (size() != 1) throw UsageError("item() on non-scalar tensor " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    require_2d(*this, "at");
    return node_->value[r * node_->shape[1] + c];
}

// ---- ops --------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1];
    const std::size_t k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw DimensionError("matmul: inner extents differ, " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    std::vector<double> out(m * n);
    mm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
    auto node = make_node({m, n}, std::move(out));
    Node* self = node.get();
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return finish(std::move(node), {a, b}, [self, an, bn, m, k, n]() {
        const double* g = self->grad.data();
        if (an->requires_grad) {
            an->ensure_grad();
            mm_nt_acc(g, bn->value.data(), an->grad.data(), m, n, k);  // dA = G B^T
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            mm_tn_acc(an->value.data(), g, bn->grad.data(), m, k, n);  // dB = A^T G
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_2d(a, "transpose");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    std::vector<double> out(m * n);
    const auto& av = a.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
    auto node = make_node({n, m}, std::move(out));
    Node* self = node.get();
    Node* an = a.node().get();
    return finish(std::move(node), {a}, [self, an, m, n]() {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += self->grad[j * m + i];
    });
}

Tensor softmax_rows(const Tensor& s) {
    require_2d(s, "softmax_rows");
    const std::size_t m = s.shape()[0], n = s.shape()[1];
    const auto& sv = s.data();
    for (double v : sv)
        if (!std::isfinite(v)) throw NumericError("softmax_rows: non-finite input entry");
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = sv.data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp(row[j] - mx);
            out[i * n + j] = e;
            sum += e;
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= sum;
    }
    auto node = make_node({m, n}, std::move(out));
    Node* self = node.get();
    Node* sn = s.node().get();
    return finish(std::move(node), {s}, [self, sn, m, n]() {
        if (!sn->requires_grad) return;
        sn->ensure_grad();
        // per row: ds_j = y_j * (g_j - sum_k g_k y_k)
        for (std::size_t i = 0; i < m; ++i) {
            const double* y = self->value.data() + i * n;
            const double* g = self->grad.data() + i * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
            double* ds = sn->grad.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) ds[j] += y[j] * (g[j] - dot);
        }
    });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor silu(const Tensor& x) {
    return unary_op(
        x,
        [](double v) { return v / (1.0 + std::exp(-v)); },
        [](double v, double) {
            const double s = 1.0 / (1.0 + std::exp(-v));
            return s * (1.0 + v * (1.0 - s));
        });
}

namespace {
constexpr double kGeluC = 0.7978845608028653558798921198687;  // sqrt(2/pi)
constexpr double kGeluK = 0.044715;
}  // namespace

Tensor gelu_tanh(const Tensor& x) {
    // tanh approximation: 0.5 x (1 + tanh(c (x + 0.044715 x^3)))
    return unary_op(
        x,
        [](double v) {
            const double u = kGeluC * (v + kGeluK * v * v * v);
            return 0.5 * v * (1.0 + std::tanh(u));
        },
        [](double v, double) {
            const double u = kGeluC * (v + kGeluK * v * v * v);
            const double t = std::tanh(u);
            return 0.5 * (1.0 + t) +
                   0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluK * v * v);
        });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise_binary(a, b, EwKind::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise_binary(a, b, EwKind::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise_binary(a, b, EwKind::mul, "mul"); }

Tensor scale(const Tensor& a, double c) {
    return unary_op(
        a, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Tensor add_scalar(const Tensor& a, double c) {
    return unary_op(
        a, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor rmsnorm(const Tensor& x, const Tensor& gain, double eps) {
    if (eps <= 0.0) throw ConfigError("rmsnorm: eps must be > 0");
    const std::size_t d = x.shape().back();
    if (gain.ndim() != 1 || gain.shape()[0] != d)
        throw DimensionError("rmsnorm: gain shape " + shape_str(gain.shape()) +
                             " does not match feature width " + std::to_string(d));
    const std::size_t slices = x.size() / d;
    std::vector<double> out(x.size());
    std::vector<double> inv_rms(slices);
    const auto& xv = x.data();
    const auto& gv = gain.data();
    for (std::size_t s = 0; s < slices; ++s) {
        const double* row = xv.data() + s * d;
        double ms = 0.0;
        for (std::size_t j = 0; j < d; ++j) ms += row[j] * row[j];
        ms /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(ms + eps);
        inv_rms[s] = inv;
        for (std::size_t j = 0; j < d; ++j) out[s * d + j] = row[j] * inv * gv[j];
    }
    auto node = make_node(x.shape(), std::move(out));
    Node* self = node.get();
    Node* xn = x.node().get();
    Node* gn = gain.node().get();
    return finish(std::move(node), {x, gain}, [self, xn, gn, slices, d, inv_rms]() {
        const auto& g = self->grad;
        for (std::size_t s = 0; s < slices; ++s) {
            const double inv = inv_rms[s];
            const double* xrow = xn->value.data() + s * d;
            const double* grow = g.data() + s * d;
            if (xn->requires_grad) {
                xn->ensure_grad();
                // dx_j = gain_j g_j inv - x_j inv^3 / d * sum_k g_k gain_k x_k
                double dot = 0.0;
                for (std::size_t k = 0; k < d; ++k) dot += grow[k] * gn->value[k] * xrow[k];
                const double coef = dot * inv * inv * inv / static_cast<double>(d);
                double* dx = xn->grad.data() + s * d;
                for (std::size_t j = 0; j < d; ++j)
                    dx[j] += gn->value[j] * grow[j] * inv - xrow[j] * coef;
            }
            if (gn->requires_grad) {
                gn->ensure_grad();
                for (std::size_t j = 0; j < d; ++j) gn->grad[j] += grow[j] * xrow[j] * inv;
            }
        }
    });
}

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0)
        throw ConfigError("dropout: probability must satisfy 0 <= p < 1, got " + std::to_string(p));
    if (!training || p == 0.0) {
        // identity pass-through that still participates in the tape
        return scale(x, 1.0);
    }
    const std::size_t n = x.size();
    const double inv_keep = 1.0 / (1.0 - p);
    std::vector<double> mask(n);
    for (std::size_t i = 0; i < n; ++i) mask[i] = rng.uniform() < p ? 0.0 : inv_keep;
    std::vector<double> out(n);
    const auto& xv = x.data();
    for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] * mask[i];
    auto node = make_node(x.shape(), std::move(out));
    Node* self = node.get();
    Node* xn = x.node().get();
    return finish(std::move(node), {x}, [self, xn, mask = std::move(mask), n]() {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) xn->grad[i] += self->grad[i] * mask[i];
    });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    require_2d(logits, "cross_entropy");
    const std::size_t b = logits.shape()[0], c = logits.shape()[1];
    if (labels.size() != b)
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(b) + " logit rows");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw DataError("cross_entropy: label " + std::to_string(y) + " out of range [0, " +
                            std::to_string(c) + ")");
    const auto& lv = logits.data();
    // keep row softmax for the backward rule
    std::vector<double> probs(b * c);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = lv.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double e = std::exp(row[j] - mx);
            probs[i * c + j] = e;
            sum += e;
        }
        for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= sum;
        loss -= std::log(probs[i * c + static_cast<std::size_t>(labels[i])]);
    }
    loss /= static_cast<double>(b);
    auto node = make_node({1}, {loss});
    Node* self = node.get();
    Node* ln = logits.node().get();
    return finish(std::move(node), {logits},
                  [self, ln, probs = std::move(probs), labels, b, c]() {
                      if (!ln->requires_grad) return;
                      ln->ensure_grad();
                      const double g = self->grad[0] / static_cast<double>(b);
                      for (std::size_t i = 0; i < b; ++i)
                          for (std::size_t j = 0; j < c; ++j) {
                              double d = probs[i * c + j];
                              if (j == static_cast<std::size_t>(labels[i])) d -= 1.0;
                              ln->grad[i * c + j] += g * d;
                          }
                  });
}

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
    require_2d(a, "slice_rows");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    if (r0 >= r1 || r1 > m)
        throw DimensionError("slice_rows: range [" + std::to_string(r0) + ", " + std::to_string(r1) +
                             ") out of " + std::to_string(m) + " rows");
    std::vector<double> out(a.data().begin() + r0 * n, a.data().begin() + r1 * n);
    auto node = make_node({r1 - r0, n}, std::move(out));
    Node* self = node.get();
    Node* an = a.node().get();
    return finish(std::move(node), {a}, [self, an, r0, n]() {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < self->grad.size(); ++i) an->grad[r0 * n + i] += self->grad[i];
    });
}

Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
    require_2d(a, "slice_cols");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    if (c0 >= c1 || c1 > n)
        throw DimensionError("slice_cols: range [" + std::to_string(c0) + ", " + std::to_string(c1) +
                             ") out of " + std::to_string(n) + " columns");
    const std::size_t w = c1 - c0;
    std::vector<double> out(m * w);
    const auto& av = a.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = av[i * n + c0 + j];
    auto node = make_node({m, w}, std::move(out));
    Node* self = node.get();
    Node* an = a.node().get();
    return finish(std::move(node), {a}, [self, an, m, n, c0, w]() {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) an->grad[i * n + c0 + j] += self->grad[i * w + j];
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw UsageError("concat_rows: empty input list");
    const std::size_t n = parts[0].cols();
    std::size_t m = 0;
    for (const auto& p : parts) {
        if (p.cols() != n)
            throw DimensionError("concat_rows: column mismatch " + shape_str(p.shape()));
        m += p.rows();
    }
    std::vector<double> out;
    out.reserve(m * n);
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    auto node = make_node({m, n}, std::move(out));
    Node* self = node.get();
    std::vector<Node*> ins;
    std::vector<std::size_t> sizes;
    bool need = false;
    for (const auto& p : parts) {
        ins.push_back(p.node().get());
        sizes.push_back(p.size());
        need = need || p.requires_grad();
    }
    if (need) {
        self->requires_grad = true;
        for (const auto& p : parts) self->inputs.push_back(p.node());
        self->backward = [self, ins, sizes]() {
            std::size_t off = 0;
            for (std::size_t k = 0; k < ins.size(); ++k) {
                if (ins[k]->requires_grad) {
                    ins[k]->ensure_grad();
                    for (std::size_t i = 0; i < sizes[k]; ++i)
                        ins[k]->grad[i] += self->grad[off + i];
                }
                off += sizes[k];
            }
        };
    }
    return Tensor::wrap(std::move(node));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw UsageError("concat_cols: empty input list");
    const std::size_t m = parts[0].rows();
    std::size_t n = 0;
    for (const auto& p : parts) {
        if (p.rows() != m) throw DimensionError("concat_cols: row mismatch " + shape_str(p.shape()));
        n += p.cols();
    }
    std::vector<double> out(m * n);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t w = p.cols();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) out[i * n + off + j] = p.data()[i * w + j];
        off += w;
    }
    auto node = make_node({m, n}, std::move(out));
    Node* self = node.get();
    std::vector<Node*> ins;
    std::vector<std::size_t> widths;
    bool need = false;
    for (const auto& p : parts) {
        ins.push_back(p.node().get());
        widths.push_back(p.cols());
        need = need || p.requires_grad();
    }
    if (need) {
        self->requires_grad = true;
        for (const auto& p : parts) self->inputs.push_back(p.node());
        self->backward = [self, ins, widths, m, n]() {
            std::size_t off2 = 0;
            for (std::size_t k = 0; k < ins.size(); ++k) {
                const std::size_t w = widths[k];
                if (ins[k]->requires_grad) {
                    ins[k]->ensure_grad();
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < w; ++j)
                            ins[k]->grad[i * w + j] += self->grad[i * n + off2 + j];
                }
                off2 += w;
            }
        };
    }
    return Tensor::wrap(std::move(node));
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size())
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                             shape_str(shape));
    auto node = make_node(std::move(shape), a.data());
    Node* self = node.get();
    Node* an = a.node().get();
    return finish(std::move(node), {a}, [self, an]() {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < self->grad.size(); ++i) an->grad[i] += self->grad[i];
    });
}

Tensor row_scale(const Tensor& a, const Tensor& s) {
    require_2d(a, "row_scale");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    if (s.size() != m)
        throw DimensionError("row_scale: scale vector " + shape_str(s.shape()) + " for " +
                             std::to_string(m) + " rows");
    std::vector<double> out(m * n);
    const auto& av = a.data();
    const auto& sv = s.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] * sv[i];
    auto node = make_node({m, n}, std::move(out));
    Node* self = node.get();
    Node* an = a.node().get();
    Node* sn = s.node().get();
    return finish(std::move(node), {a, s}, [self, an, sn, m, n]() {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    an->grad[i * n + j] += self->grad[i * n + j] * sn->value[i];
        }
        if (sn->requires_grad) {
            sn->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    acc += self->grad[i * n + j] * an->value[i * n + j];
                sn->grad[i] += acc;
            }
        }
    });
}

Tensor add_bias(const Tensor& a, const Tensor& b) {
    require_2d(a, "add_bias");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    if (b.size() != n)
        throw DimensionError("add_bias: bias " + shape_str(b.shape()) + " for " + std::to_string(n) +
                             " columns");
    std::vector<double> out(m * n);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
    auto node = make_node({m, n}, std::move(out));
    Node* self = node.get();
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return finish(std::move(node), {a, b}, [self, an, bn, m, n]() {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < m * n; ++i) an->grad[i] += self->grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) bn->grad[j] += self->grad[i * n + j];
        }
    });
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
    require_2d(table, "gather_rows");
    const std::size_t v = table.shape()[0], d = table.shape()[1];
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            throw DataError("gather_rows: index " + std::to_string(id) + " out of range [0, " +
                            std::to_string(v) + ")");
    const std::size_t m = ids.size();
    std::vector<double> out(m * d);
    const auto& tv = table.data();
    for (std::size_t i = 0; i < m; ++i)
        std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
    auto node = make_node({m, d}, std::move(out));
    Node* self = node.get();
    Node* tn = table.node().get();
    return finish(std::move(node), {table}, [self, tn, ids, d]() {
        if (!tn->requires_grad) return;
        tn->ensure_grad();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            double* dst = tn->grad.data() + static_cast<std::size_t>(ids[i]) * d;
            const double* src = self->grad.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    });
}

Tensor mean_rows(const Tensor& a) {
    require_2d(a, "mean_rows");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    std::vector<double> out(n, 0.0);
    const auto& av = a.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += av[i * n + j];
    for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
    auto node = make_node({1, n}, std::move(out));
    Node* self = node.get();
    Node* an = a.node().get();
    return finish(std::move(node), {a}, [self, an, m, n]() {
        if (!an->requires_grad) return;
        an->ensure_grad();
        const double inv = 1.0 / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += self->grad[j] * inv;
    });
}

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto node = make_node({1}, {s});
    Node* self = node.get();
    Node* an = a.node().get();
    return finish(std::move(node), {a}, [self, an]() {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (auto& g : an->grad) g += self->grad[0];
    });
}

// ---- backward ---------------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw UsageError("backward: loss must be a scalar tensor");
    auto root = loss.node();
    if (!root->requires_grad) return;  // nothing reachable needs gradients

    // Collect the reachable requires-grad subgraph, then replay it in reverse
    // tape order. Iterative DFS; each node enters `order` exactly once.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{root.get()};
    seen.insert(root.get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& in : n->inputs) {
            Node* p = in.get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back(p);
            }
        }
    }
    std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->seq > b->seq; });

    // Op outputs get a fresh gradient buffer every sweep; only leaves keep
    // accumulating across calls.
    for (Node* n : order)
        if (n->backward) n->grad.clear();

    root->ensure_grad();
    root->grad[0] += 1.0;
    for (Node* n : order)
        if (n->backward && !n->grad.empty()) n->backward();
}

// ---- gradcheck ---------------------------------------------------------------

namespace {
double rel_err(double a, double n) {
    const double denom = std::max({1.0, std::abs(a), std::abs(n)});
    return std::abs(a - n) / denom;
}
}  // namespace

GradCheckResult gradcheck(const std::function<Tensor()>& f, const std::vector<Tensor>& leaves,
                          double h, double tol) {
    auto eval = [&]() {
        Tensor y = f();
        if (!y.defined() || y.size() != 1)
            throw UsageError("gradcheck: f must return a scalar tensor");
        return y;
    };

    const double y0 = eval().item();
    const double y1 = eval().item();
    if (y0 != y1)
        throw NumericError("gradcheck: f is not deterministic under fixed inputs (" +
                           std::to_string(y0) + " vs " + std::to_string(y1) + ")");

    for (auto leaf : leaves) leaf.zero_grad();
    backward(eval());

    std::vector<std::vector<double>> analytic;
    analytic.reserve(leaves.size());
    for (const auto& leaf : leaves)
        analytic.push_back(leaf.has_grad() ? leaf.grad() : std::vector<double>(leaf.size(), 0.0));

    GradCheckResult res;
    res.per_leaf_max.assign(leaves.size(), 0.0);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        Tensor leaf = leaves[k];
        auto& vals = leaf.mutable_data();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double orig = vals[i];
            vals[i] = orig + h;
            const double fp = eval().item();
            vals[i] = orig - h;
            const double fm = eval().item();
            vals[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double e = rel_err(analytic[k][i], numeric);
            res.per_leaf_max[k] = std::max(res.per_leaf_max[k], e);
            if (e > res.max_rel_err) {
                res.max_rel_err = e;
                res.worst = "leaf " + std::to_string(k) + " elem " + std::to_string(i);
            }
        }
    }
    res.pass = res.max_rel_err <= tol;
    return res;
}

}  // namespace dgsa

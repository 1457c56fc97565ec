// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "tensor.hpp"

namespace dgsa {

// Head geometry for the dual-stream attention variants: each head carries an
// excitatory and an inhibitory query/key stream of width d_half and a value
// stream of width 2*d_half, so h heads exactly tile d_model.
struct HeadLayout {
    int d_model = 0;
    int heads = 0;
    int d_half = 0;

    static HeadLayout make(int d_model, int heads);
    int value_width() const { return 2 * d_half; }
};

// Learnable state of one attention layer. The lambda_* vectors are used only
// by the differential-attention baseline; gate weights only by the gated
// variant. norm_gain is shared across heads (length 2*d_half).
struct AttentionParams {
    Tensor w_q, w_k, w_v;  // d_model x d_model
    Tensor w_g;            // d_model x heads
    Tensor b_g;            // heads
    Tensor w_o;            // d_model x d_model
    Tensor norm_gain;      // 2*d_half
    Tensor lambda_q1, lambda_k1, lambda_q2, lambda_k2;  // d_half each
    double lambda_init = 0.8;
};

// Detached per-layer map snapshot for inspection and rollout. a_plus/a_minus
// rows are stochastic; fused rows sum to 2g-1 and entries lie in [-1, 1].
struct AttentionMaps {
    int heads = 0;
    int n = 0;
    std::vector<std::vector<double>> a_plus;   // heads x (n*n)
    std::vector<std::vector<double>> a_minus;  // heads x (n*n)
    std::vector<std::vector<double>> fused;    // heads x (n*n), signed
    std::vector<double> gate;                  // n*heads, row-major
};

struct StreamSplit {
    Tensor q_full;  // X W_Q, kept for the optional attention residual
    std::vector<Tensor> q_plus, q_minus, k_plus, k_minus;  // per head, N x d_half
    std::vector<Tensor> v;                                 // per head, N x 2*d_half
};

struct MdgsaOutput {
    Tensor y;
    AttentionMaps maps;
};

// Layer-indexed constant 0.8 - 0.6 exp(-0.3 (l - 1)) for 1-based layer l;
// strictly increasing, range [0.2, 0.8).
double lambda_init_schedule(int layer);

// Projects X with W_Q/W_K/W_V and slices the per-head dual streams.
StreamSplit split_streams(const Tensor& x, const AttentionParams& params, const HeadLayout& layout);

// softmax_rows(Q K^T / sqrt(width(Q))): one stream's row-stochastic map.
Tensor scaled_softmax_scores(const Tensor& q, const Tensor& k);

// sigmoid(X W_g + b_g): one gate scalar per (token, head).
Tensor token_head_gate(const Tensor& x, const Tensor& w_g, const Tensor& b_g);

// Per head i and token t: g[t,i] * a_plus_row - (1 - g[t,i]) * a_minus_row.
std::vector<Tensor> fuse_gated_maps(const std::vector<Tensor>& a_plus,
                                    const std::vector<Tensor>& a_minus, const Tensor& gate);

// exp(<lq1, lk1>) - exp(<lq2, lk2>) + lambda_init, as a scalar graph tensor.
Tensor diff_lambda_tensor(const AttentionParams& params);
double diff_lambda_value(const AttentionParams& params);

// (1 - lambda_l) * rmsnorm over each head's features; `hv` is one head's N x 2d' slab.
Tensor headwise_groupnorm(const Tensor& hv, const Tensor& norm_gain, double lambda_l,
                          double eps = 1e-6);

struct MdgsaConfig {
    int layer = 1;                // 1-based, feeds the lambda_init schedule
    bool lambda_fixed = false;    // override: hold lambda_init at 0.8
    bool residual = false;        // add the projected queries to the output
    bool residual_from_input = false;  // residual adds X instead of X W_Q
};

double resolve_lambda_init(const MdgsaConfig& cfg);

// Full gated dual-stream attention block (projections, dual softmax, gate,
// fusion, AV, head-wise norm, concat, output projection, optional residual).
MdgsaOutput mdgsa_forward(const Tensor& x, const AttentionParams& params, const HeadLayout& layout,
                          const MdgsaConfig& cfg);

// Differential-attention baseline: per head A1 - lambda A2 applied to V, with
// a shared learned scalar lambda, then (1 - lambda_init) GroupNorm and W_O.
MdgsaOutput diff_attn_forward(const Tensor& x, const AttentionParams& params,
                              const HeadLayout& layout, const MdgsaConfig& cfg);

// Standard multi-head attention (per-head width d_model/h, no gate, no norm).
MdgsaOutput vanilla_mha_forward(const Tensor& x, const Tensor& w_q, const Tensor& w_k,
                                const Tensor& w_v, const Tensor& w_o, int heads);

// Rate model of lateral inhibition: r_i = phi(e_i - alpha * sum_{j in N(i)} e_j).
// Reference implementation backing the docs and tests only.
std::vector<double> lateral_inhibition_reference(const std::vector<double>& stimulus, double alpha,
                                                 const std::vector<std::vector<int>>& neighborhood,
                                                 const std::function<double(double)>& phi);

}  // namespace dgsa

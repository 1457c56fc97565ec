// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "attention.hpp"

#include <cmath>
#include <string>

namespace dgsa {

namespace {

std::vector<double> detach(const Tensor& t) { return t.data(); }

AttentionMaps snapshot_maps(const std::vector<Tensor>& a_plus, const std::vector<Tensor>& a_minus,
                            const std::vector<Tensor>& fused, const Tensor& gate, int heads,
                            int n) {
    AttentionMaps maps;
    maps.heads = heads;
    maps.n = n;
    for (int i = 0; i < heads; ++i) {
        maps.a_plus.push_back(detach(a_plus[i]));
        maps.a_minus.push_back(detach(a_minus[i]));
        maps.fused.push_back(detach(fused[i]));
    }
    if (gate.defined()) maps.gate = detach(gate);
    return maps;
}

}  // namespace

HeadLayout HeadLayout::make(int d_model, int heads) {
    if (d_model <= 0 || heads <= 0)
        throw ConfigError("head layout: d_model and heads must be positive");
    if (d_model % (2 * heads) != 0)
        throw ConfigError("head layout: d_model=" + std::to_string(d_model) +
                          " is not divisible by 2*heads=" + std::to_string(2 * heads));
    return HeadLayout{d_model, heads, d_model / (2 * heads)};
}

double lambda_init_schedule(int layer) {
    if (layer < 1)
        throw ConfigError("lambda_init schedule: layer index must be >= 1, got " +
                          std::to_string(layer));
    // 0.8 - 0.6 exp(-0.3 (l-1)), written so layer 1 lands on 0.2 exactly
    return 0.2 + 0.6 * (1.0 - std::exp(-0.3 * (layer - 1)));
}

double resolve_lambda_init(const MdgsaConfig& cfg) {
    return cfg.lambda_fixed ? 0.8 : lambda_init_schedule(cfg.layer);
}

StreamSplit split_streams(const Tensor& x, const AttentionParams& params,
                          const HeadLayout& layout) {
    if (x.ndim() != 2 || x.shape()[1] != static_cast<std::size_t>(layout.d_model))
        throw DimensionError("split_streams: input " + shape_str(x.shape()) +
                             " does not match d_model=" + std::to_string(layout.d_model));
    StreamSplit s;
    s.q_full = matmul(x, params.w_q);
    Tensor k_full = matmul(x, params.w_k);
    Tensor v_full = matmul(x, params.w_v);
    const std::size_t dh = static_cast<std::size_t>(layout.d_half);
    for (int i = 0; i < layout.heads; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * 2 * dh;
        s.q_plus.push_back(slice_cols(s.q_full, base, base + dh));
        s.q_minus.push_back(slice_cols(s.q_full, base + dh, base + 2 * dh));
        s.k_plus.push_back(slice_cols(k_full, base, base + dh));
        s.k_minus.push_back(slice_cols(k_full, base + dh, base + 2 * dh));
        s.v.push_back(slice_cols(v_full, base, base + 2 * dh));
    }
    return s;
}

Tensor scaled_softmax_scores(const Tensor& q, const Tensor& k) {
    if (q.cols() != k.cols())
        throw DimensionError("scaled scores: query width " + shape_str(q.shape()) +
                             " vs key width " + shape_str(k.shape()));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    return softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_d));
}

Tensor token_head_gate(const Tensor& x, const Tensor& w_g, const Tensor& b_g) {
    return sigmoid(add_bias(matmul(x, w_g), b_g));
}

std::vector<Tensor> fuse_gated_maps(const std::vector<Tensor>& a_plus,
                                    const std::vector<Tensor>& a_minus, const Tensor& gate) {
    if (a_plus.size() != a_minus.size())
        throw DimensionError("fuse_gated_maps: stream head counts differ");
    const std::size_t heads = a_plus.size();
    if (gate.cols() != heads)
        throw DimensionError("fuse_gated_maps: gate has " + std::to_string(gate.cols()) +
                             " columns for " + std::to_string(heads) + " heads");
    const std::size_t n = gate.rows();
    std::vector<Tensor> fused;
    fused.reserve(heads);
    for (std::size_t i = 0; i < heads; ++i) {
        if (a_plus[i].rows() != n || a_plus[i].cols() != n)
            throw DimensionError("fuse_gated_maps: map " + shape_str(a_plus[i].shape()) +
                                 " incompatible with gate rows " + std::to_string(n));
        Tensor g_col = reshape(slice_cols(gate, i, i + 1), {n});
        Tensor g_comp = add_scalar(scale(g_col, -1.0), 1.0);  // 1 - g
        fused.push_back(sub(row_scale(a_plus[i], g_col), row_scale(a_minus[i], g_comp)));
    }
    return fused;
}

Tensor diff_lambda_tensor(const AttentionParams& params) {
    Tensor d1 = sum_all(mul(params.lambda_q1, params.lambda_k1));
    Tensor d2 = sum_all(mul(params.lambda_q2, params.lambda_k2));
    return add_scalar(sub(exp(d1), exp(d2)), params.lambda_init);
}

double diff_lambda_value(const AttentionParams& params) {
    return diff_lambda_tensor(params).item();
}

Tensor headwise_groupnorm(const Tensor& hv, const Tensor& norm_gain, double lambda_l, double eps) {
    if (lambda_l <= 0.0 || lambda_l >= 1.0)
        throw ConfigError("headwise groupnorm: lambda must lie in (0, 1)");
    return scale(rmsnorm(hv, norm_gain, eps), 1.0 - lambda_l);
}

MdgsaOutput mdgsa_forward(const Tensor& x, const AttentionParams& params, const HeadLayout& layout,
                          const MdgsaConfig& cfg) {
    const double lambda_l = resolve_lambda_init(cfg);
    StreamSplit s = split_streams(x, params, layout);

    std::vector<Tensor> a_plus, a_minus;
    for (int i = 0; i < layout.heads; ++i) {
        a_plus.push_back(scaled_softmax_scores(s.q_plus[i], s.k_plus[i]));
        a_minus.push_back(scaled_softmax_scores(s.q_minus[i], s.k_minus[i]));
    }
    Tensor gate = token_head_gate(x, params.w_g, params.b_g);
    std::vector<Tensor> fused = fuse_gated_maps(a_plus, a_minus, gate);

    std::vector<Tensor> heads_out;
    for (int i = 0; i < layout.heads; ++i) {
        Tensor h = matmul(fused[i], s.v[i]);
        heads_out.push_back(headwise_groupnorm(h, params.norm_gain, lambda_l));
    }
    Tensor o = matmul(concat_cols(heads_out), params.w_o);
    Tensor y = cfg.residual ? add(cfg.residual_from_input ? x : s.q_full, o) : o;

    MdgsaOutput out;
    out.y = y;
    out.maps =
        snapshot_maps(a_plus, a_minus, fused, gate, layout.heads, static_cast<int>(x.rows()));
    return out;
}

MdgsaOutput diff_attn_forward(const Tensor& x, const AttentionParams& params,
                              const HeadLayout& layout, const MdgsaConfig& cfg) {
    const double lambda_init = resolve_lambda_init(cfg);
    StreamSplit s = split_streams(x, params, layout);

    Tensor lambda = diff_lambda_tensor(params);
    std::vector<Tensor> a1, a2, fused;
    for (int i = 0; i < layout.heads; ++i) {
        a1.push_back(scaled_softmax_scores(s.q_plus[i], s.k_plus[i]));
        a2.push_back(scaled_softmax_scores(s.q_minus[i], s.k_minus[i]));
        fused.push_back(sub(a1[i], mul(a2[i], lambda)));
    }

    std::vector<Tensor> heads_out;
    for (int i = 0; i < layout.heads; ++i) {
        Tensor h = matmul(fused[i], s.v[i]);
        heads_out.push_back(headwise_groupnorm(h, params.norm_gain, lambda_init));
    }
    Tensor o = matmul(concat_cols(heads_out), params.w_o);
    Tensor y = cfg.residual ? add(cfg.residual_from_input ? x : s.q_full, o) : o;

    MdgsaOutput out;
    out.y = y;
    out.maps = snapshot_maps(a1, a2, fused, Tensor(), layout.heads, static_cast<int>(x.rows()));
    return out;
}

MdgsaOutput vanilla_mha_forward(const Tensor& x, const Tensor& w_q, const Tensor& w_k,
                                const Tensor& w_v, const Tensor& w_o, int heads) {
    const std::size_t d_model = x.cols();
    if (heads <= 0 || d_model % static_cast<std::size_t>(heads) != 0)
        throw ConfigError("vanilla attention: d_model=" + std::to_string(d_model) +
                          " is not divisible by heads=" + std::to_string(heads));
    const std::size_t dh = d_model / static_cast<std::size_t>(heads);
    Tensor q = matmul(x, w_q);
    Tensor k = matmul(x, w_k);
    Tensor v = matmul(x, w_v);

    std::vector<Tensor> maps, heads_out;
    for (int i = 0; i < heads; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * dh;
        Tensor a = scaled_softmax_scores(slice_cols(q, base, base + dh),
                                         slice_cols(k, base, base + dh));
        maps.push_back(a);
        heads_out.push_back(matmul(a, slice_cols(v, base, base + dh)));
    }
    MdgsaOutput out;
    out.y = matmul(concat_cols(heads_out), w_o);
    // vanilla maps are their own (nonnegative) fused maps; the inhibitory
    // stream is identically zero
    out.maps.heads = heads;
    out.maps.n = static_cast<int>(x.rows());
    for (int i = 0; i < heads; ++i) {
        out.maps.a_plus.push_back(maps[i].data());
        out.maps.a_minus.emplace_back(maps[i].size(), 0.0);
        out.maps.fused.push_back(maps[i].data());
    }
    return out;
}

std::vector<double> lateral_inhibition_reference(const std::vector<double>& stimulus, double alpha,
                                                 const std::vector<std::vector<int>>& neighborhood,
                                                 const std::function<double(double)>& phi) {
    if (alpha < 0.0) throw ConfigError("lateral inhibition: alpha must be >= 0");
    if (neighborhood.size() != stimulus.size())
        throw DimensionError("lateral inhibition: neighborhood list size mismatch");
    std::vector<double> response(stimulus.size());
    for (std::size_t i = 0; i < stimulus.size(); ++i) {
        double pooled = 0.0;
        for (int j : neighborhood[i]) pooled += stimulus.at(static_cast<std::size_t>(j));
        response[i] = phi(stimulus[i] - alpha * pooled);
    }
    return response;
}

}  // namespace dgsa

// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "model.hpp"

#include <cmath>

namespace dgsa {

void ModelConfig::validate() const {
    if (depth < 1) throw ConfigError("model: depth must be >= 1");
    if (d_model < 2) throw ConfigError("model: d_model must be >= 2");
    if (heads < 1) throw ConfigError("model: heads must be >= 1");
    if (n_classes < 2) throw ConfigError("model: n_classes must be >= 2");
    if (gate_depth != 1)
        throw ConfigError("model: gate_depth must be 1 (deeper gate MLPs are not supported)");
    if (n_dropout_layers != 1 && n_dropout_layers != 2)
        throw ConfigError("model: n_dropout_layers must be 1 or 2");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
        throw ConfigError("model: dropout_p must satisfy 0 <= p < 1");
    const double e2 = 2.0, e4 = 4.0, e163 = 16.0 / 3.0;
    if (std::abs(ffn_expansion - e2) > 1e-9 && std::abs(ffn_expansion - e4) > 1e-9 &&
        std::abs(ffn_expansion - e163) > 1e-9)
        throw ConfigError("model: ffn_expansion must be one of 2, 4, 16/3");
    if (variant == Variant::vanilla) {
        if (d_model % heads != 0)
            throw ConfigError("model: d_model must be divisible by heads for the vanilla variant");
    } else if (d_model % (2 * heads) != 0) {
        throw ConfigError("model: d_model must be divisible by 2*heads for dual-stream variants");
    }
    if (task == Task::text) {
        if (vocab_size < 4) throw ConfigError("model: vocab_size must be >= 4");
        if (max_seq_len < 1) throw ConfigError("model: max_seq_len must be >= 1");
    } else {
        if (patch_size < 1 || image_size < 1 || channels < 1)
            throw ConfigError("model: invalid vision geometry");
        if (image_size % patch_size != 0)
            throw ConfigError("model: image_size=" + std::to_string(image_size) +
                              " is not divisible by patch_size=" + std::to_string(patch_size));
    }
    if (ffn_inner_width() < 1) throw ConfigError("model: FFN inner width must be >= 1");
}

int ModelConfig::ffn_inner_width() const {
    if (ffn_activation == FfnActivation::swiglu)
        return static_cast<int>(std::floor(ffn_expansion * d_model / 2.0));
    return static_cast<int>(std::floor(ffn_expansion * d_model));
}

namespace {

Tensor init_matrix(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> w(fan_in * fan_out);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    return Tensor::from({fan_in, fan_out}, std::move(w), true);
}

Tensor init_rows(std::size_t rows, std::size_t d, Rng& rng) {
    // embedding-style tables: fan-in taken as the embedding width
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> w(rows * d);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    return Tensor::from({rows, d}, std::move(w), true);
}

Tensor init_vector(std::size_t n, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> w(n);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    return Tensor::from({n}, std::move(w), true);
}

}  // namespace

LayerStack build_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(hash_combine(seed, 0x6D6F64656CULL));
    LayerStack st;
    st.cfg = cfg;
    const std::size_t d = static_cast<std::size_t>(cfg.d_model);
    if (cfg.variant != Variant::vanilla) st.layout = HeadLayout::make(cfg.d_model, cfg.heads);

    auto reg = [&st](const std::string& name, const Tensor& t, bool no_decay = false) {
        st.registry.push_back({name, t, no_decay});
    };

    if (cfg.task == Task::text) {
        st.embedding = init_rows(static_cast<std::size_t>(cfg.vocab_size), d, rng);
        reg("embedding", st.embedding);
        st.pos = init_rows(static_cast<std::size_t>(cfg.max_seq_len), d, rng);
        reg("pos", st.pos);
    } else {
        st.embedding = init_matrix(static_cast<std::size_t>(cfg.patch_dim()), d, rng);
        reg("patch_proj", st.embedding);
        st.class_token = init_rows(1, d, rng);
        reg("class_token", st.class_token);
        st.pos = init_rows(static_cast<std::size_t>(cfg.n_patches() + 1), d, rng);
        reg("pos", st.pos);
    }

    for (int l = 0; l < cfg.depth; ++l) {
        LayerParams lp;
        const std::string pre = "layer" + std::to_string(l) + ".";
        lp.attn_norm_gain = Tensor::full({d}, 1.0, true);
        reg(pre + "attn_norm_gain", lp.attn_norm_gain, true);

        AttentionParams& ap = lp.attn;
        ap.w_q = init_matrix(d, d, rng);
        ap.w_k = init_matrix(d, d, rng);
        ap.w_v = init_matrix(d, d, rng);
        ap.w_o = init_matrix(d, d, rng);
        reg(pre + "attn.w_q", ap.w_q);
        reg(pre + "attn.w_k", ap.w_k);
        reg(pre + "attn.w_v", ap.w_v);
        reg(pre + "attn.w_o", ap.w_o);
        ap.lambda_init = cfg.lambda_fixed ? 0.8 : lambda_init_schedule(l + 1);
        if (cfg.variant == Variant::dgsa) {
            // zero-init gate: balanced excitation/inhibition (g = 0.5) at start
            ap.w_g = Tensor::zeros({d, static_cast<std::size_t>(cfg.heads)}, true);
            ap.b_g = Tensor::zeros({static_cast<std::size_t>(cfg.heads)}, true);
            reg(pre + "attn.w_g", ap.w_g);
            reg(pre + "attn.b_g", ap.b_g, true);
        } else if (cfg.variant == Variant::diff) {
            const std::size_t dh = static_cast<std::size_t>(st.layout.d_half);
            ap.lambda_q1 = init_vector(dh, rng);
            ap.lambda_k1 = init_vector(dh, rng);
            ap.lambda_q2 = init_vector(dh, rng);
            ap.lambda_k2 = init_vector(dh, rng);
            reg(pre + "attn.lambda_q1", ap.lambda_q1);
            reg(pre + "attn.lambda_k1", ap.lambda_k1);
            reg(pre + "attn.lambda_q2", ap.lambda_q2);
            reg(pre + "attn.lambda_k2", ap.lambda_k2);
        }
        if (cfg.variant != Variant::vanilla) {
            ap.norm_gain =
                Tensor::full({static_cast<std::size_t>(st.layout.value_width())}, 1.0, true);
            reg(pre + "attn.norm_gain", ap.norm_gain, true);
        }

        lp.ffn_norm_gain = Tensor::full({d}, 1.0, true);
        reg(pre + "ffn_norm_gain", lp.ffn_norm_gain, true);
        const std::size_t m = static_cast<std::size_t>(cfg.ffn_inner_width());
        if (cfg.ffn_activation == FfnActivation::swiglu) {
            lp.ffn.w_up = init_matrix(d, 2 * m, rng);
        } else {
            lp.ffn.w_up = init_matrix(d, m, rng);
        }
        lp.ffn.w_down = init_matrix(m, d, rng);
        reg(pre + "ffn.w_up", lp.ffn.w_up);
        reg(pre + "ffn.w_down", lp.ffn.w_down);
        st.layers.push_back(std::move(lp));
    }

    st.final_norm_gain = Tensor::full({d}, 1.0, true);
    reg("final_norm_gain", st.final_norm_gain, true);
    st.cls_w = init_matrix(d, static_cast<std::size_t>(cfg.n_classes), rng);
    st.cls_b = Tensor::zeros({static_cast<std::size_t>(cfg.n_classes)}, true);
    reg("cls_w", st.cls_w);
    reg("cls_b", st.cls_b, true);
    return st;
}

std::vector<double> patchify(const std::vector<double>& image, int channels, int image_size,
                             int patch_size) {
    if (image_size % patch_size != 0)
        throw ConfigError("patchify: image_size=" + std::to_string(image_size) +
                          " not divisible by patch_size=" + std::to_string(patch_size));
    const int grid = image_size / patch_size;
    const int pd = channels * patch_size * patch_size;
    std::vector<double> out(static_cast<std::size_t>(grid) * grid * pd);
    std::size_t row = 0;
    for (int pr = 0; pr < grid; ++pr)
        for (int pc = 0; pc < grid; ++pc, ++row)
            for (int c = 0; c < channels; ++c)
                for (int y = 0; y < patch_size; ++y)
                    for (int x = 0; x < patch_size; ++x) {
                        const std::size_t src =
                            (static_cast<std::size_t>(c) * image_size +
                             (pr * patch_size + y)) * image_size +
                            (pc * patch_size + x);
                        out[row * pd + (static_cast<std::size_t>(c) * patch_size + y) * patch_size +
                            x] = image[src];
                    }
    return out;
}

std::vector<double> unpatchify(const std::vector<double>& patches, int channels, int image_size,
                               int patch_size) {
    const int grid = image_size / patch_size;
    const int pd = channels * patch_size * patch_size;
    std::vector<double> out(static_cast<std::size_t>(channels) * image_size * image_size);
    std::size_t row = 0;
    for (int pr = 0; pr < grid; ++pr)
        for (int pc = 0; pc < grid; ++pc, ++row)
            for (int c = 0; c < channels; ++c)
                for (int y = 0; y < patch_size; ++y)
                    for (int x = 0; x < patch_size; ++x) {
                        const std::size_t dst =
                            (static_cast<std::size_t>(c) * image_size +
                             (pr * patch_size + y)) * image_size +
                            (pc * patch_size + x);
                        out[dst] = patches[row * pd +
                                           (static_cast<std::size_t>(c) * patch_size + y) *
                                               patch_size +
                                           x];
                    }
    return out;
}

namespace {

Tensor apply_dropout_slot(const Tensor& x, const FfnDropout& drop) {
    if (!drop.training || drop.p == 0.0 || drop.rng == nullptr) return x;
    return dropout(x, drop.p, true, *drop.rng);
}

}  // namespace

Tensor swiglu_ffn(const Tensor& x, const Tensor& w_up, const Tensor& w_down,
                  const FfnDropout& drop) {
    const std::size_t two_m = w_up.cols();
    if (two_m % 2 != 0) throw DimensionError("swiglu: up-projection width must be even");
    const std::size_t m = two_m / 2;
    if (w_down.rows() != m)
        throw DimensionError("swiglu: down-projection " + shape_str(w_down.shape()) +
                             " does not match split width " + std::to_string(m));
    Tensor u = matmul(x, w_up);
    Tensor a = slice_cols(u, 0, m);
    Tensor b = slice_cols(u, m, two_m);
    Tensor act = mul(a, silu(b));
    act = apply_dropout_slot(act, drop);  // slot 1: between activation and down-projection
    Tensor y = matmul(act, w_down);
    if (drop.n_layers >= 2) y = apply_dropout_slot(y, drop);  // slot 2: after down-projection
    return y;
}

Tensor gelu_ffn(const Tensor& x, const Tensor& w1, const Tensor& w2, const FfnDropout& drop) {
    Tensor h = gelu_tanh(matmul(x, w1));
    h = apply_dropout_slot(h, drop);
    Tensor y = matmul(h, w2);
    if (drop.n_layers >= 2) y = apply_dropout_slot(y, drop);
    return y;
}

namespace {

MdgsaOutput attention_block(const LayerStack& st, int layer, const Tensor& x) {
    const ModelConfig& cfg = st.cfg;
    const LayerParams& lp = st.layers[layer];
    MdgsaConfig mc;
    mc.layer = layer + 1;
    mc.lambda_fixed = cfg.lambda_fixed;
    mc.residual = cfg.residual_in_attention;
    mc.residual_from_input = cfg.residual_source == ResidualSource::input;
    switch (cfg.variant) {
        case Variant::dgsa: return mdgsa_forward(x, lp.attn, st.layout, mc);
        case Variant::diff: return diff_attn_forward(x, lp.attn, st.layout, mc);
        case Variant::vanilla:
            return vanilla_mha_forward(x, lp.attn.w_q, lp.attn.w_k, lp.attn.w_v, lp.attn.w_o,
                                       cfg.heads);
    }
    throw ConfigError("model: unknown variant");
}

// pre-norm encoder over one sample; returns the 1 x n_classes logits row
Tensor sample_logits(const LayerStack& st, const Sample& sample, bool training, Rng& rng,
                     ForwardCapture* capture) {
    const ModelConfig& cfg = st.cfg;
    Tensor x;
    if (cfg.task == Task::text) {
        if (sample.tokens.empty()) throw DataError("model: empty token sequence");
        if (static_cast<int>(sample.tokens.size()) > cfg.max_seq_len)
            throw DataError("model: sequence of length " + std::to_string(sample.tokens.size()) +
                            " exceeds max_seq_len=" + std::to_string(cfg.max_seq_len));
        Tensor emb = gather_rows(st.embedding, sample.tokens);
        x = add(emb, slice_rows(st.pos, 0, sample.tokens.size()));
    } else {
        const std::size_t expected =
            static_cast<std::size_t>(cfg.channels) * cfg.image_size * cfg.image_size;
        if (sample.image.size() != expected)
            throw DataError("model: image has " + std::to_string(sample.image.size()) +
                            " values, expected " + std::to_string(expected));
        std::vector<double> patches =
            patchify(sample.image, cfg.channels, cfg.image_size, cfg.patch_size);
        Tensor pt = Tensor::from({static_cast<std::size_t>(cfg.n_patches()),
                                  static_cast<std::size_t>(cfg.patch_dim())},
                                 std::move(patches));
        Tensor proj = matmul(pt, st.embedding);
        x = concat_rows({st.class_token, proj});
        x = add(x, slice_rows(st.pos, 0, static_cast<std::size_t>(cfg.n_patches()) + 1));
    }

    FfnDropout drop{cfg.dropout_p, cfg.n_dropout_layers, training, &rng};
    for (int l = 0; l < cfg.depth; ++l) {
        const LayerParams& lp = st.layers[l];
        Tensor attn_in = rmsnorm(x, lp.attn_norm_gain);
        MdgsaOutput attn = attention_block(st, l, attn_in);
        if (capture) capture->layer_maps.push_back(std::move(attn.maps));
        x = add(x, attn.y);
        Tensor ffn_in = rmsnorm(x, lp.ffn_norm_gain);
        Tensor ffn_out = cfg.ffn_activation == FfnActivation::swiglu
                             ? swiglu_ffn(ffn_in, lp.ffn.w_up, lp.ffn.w_down, drop)
                             : gelu_ffn(ffn_in, lp.ffn.w_up, lp.ffn.w_down, drop);
        x = add(x, ffn_out);
    }

    Tensor xn = rmsnorm(x, st.final_norm_gain);
    // vision reads the class token; text mean-pools over (unpadded) tokens
    Tensor pooled = cfg.task == Task::vision ? slice_rows(xn, 0, 1) : mean_rows(xn);
    if (capture) {
        capture->final_norm_output = xn;
        capture->pooled = pooled;
    }
    return add_bias(matmul(pooled, st.cls_w), st.cls_b);
}

}  // namespace

Tensor model_forward(const LayerStack& stack, const std::vector<const Sample*>& batch,
                     bool training, Rng& dropout_rng, ForwardCapture* capture) {
    if (batch.empty()) throw UsageError("model_forward: empty batch");
    std::vector<Tensor> rows;
    rows.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        rows.push_back(sample_logits(stack, *batch[i], training, dropout_rng,
                                     i == 0 ? capture : nullptr));
    return rows.size() == 1 ? rows[0] : concat_rows(rows);
}

long long count_params(const LayerStack& stack) {
    long long n = 0;
    for (const auto& p : stack.registry) n += static_cast<long long>(p.value.size());
    return n;
}

std::vector<std::pair<std::string, long long>> count_params_by_group(const LayerStack& stack) {
    std::vector<std::pair<std::string, long long>> out;
    for (const auto& p : stack.registry)
        out.emplace_back(p.name, static_cast<long long>(p.value.size()));
    return out;
}

std::vector<Tensor> trainable_params(const LayerStack& stack) {
    std::vector<Tensor> out;
    out.reserve(stack.registry.size());
    for (const auto& p : stack.registry) out.push_back(p.value);
    return out;
}

}  // namespace dgsa

// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attention.hpp"
#include "data.hpp"
#include "tensor.hpp"

namespace dgsa {

enum class Variant { vanilla, diff, dgsa };
enum class Task { text, vision };
enum class FfnActivation { swiglu, gelu };
enum class ResidualSource { qproj, input };

struct ModelConfig {
    Variant variant = Variant::dgsa;
    Task task = Task::text;
    int depth = 2;
    int d_model = 64;
    int heads = 4;
    double ffn_expansion = 2.0;  // one of 2, 4, 16/3
    FfnActivation ffn_activation = FfnActivation::swiglu;
    double dropout_p = 0.1;
    int n_dropout_layers = 1;
    bool residual_in_attention = false;
    ResidualSource residual_source = ResidualSource::qproj;
    bool lambda_fixed = false;  // hold lambda_init at 0.8 instead of the schedule
    int gate_depth = 1;         // single linear layer + sigmoid; no other value exists
    int n_classes = 2;
    // text
    int vocab_size = 64;
    int max_seq_len = 16;
    // vision
    int image_size = 12;
    int patch_size = 4;
    int channels = 1;

    void validate() const;
    int ffn_inner_width() const;  // m: post-split width (swiglu) or hidden width (gelu)
    int n_patches() const { return (image_size / patch_size) * (image_size / patch_size); }
    int patch_dim() const { return channels * patch_size * patch_size; }
};

struct NamedParam {
    std::string name;
    Tensor value;
    bool no_decay = false;  // biases and norm gains are excluded from weight decay
};

struct FfnParams {
    Tensor w_up;    // swiglu: d x 2m; gelu: d x m
    Tensor w_down;  // m x d
};

struct LayerParams {
    AttentionParams attn;
    FfnParams ffn;
    Tensor attn_norm_gain;  // pre-attention RMSNorm gain, d_model
    Tensor ffn_norm_gain;   // pre-FFN RMSNorm gain, d_model
};

// A built model: structured parameters plus a flat registry in declaration
// order (the checkpoint order and the optimizer's parameter list).
struct LayerStack {
    ModelConfig cfg;
    HeadLayout layout;       // dual-stream variants; unused for vanilla
    Tensor embedding;        // text: vocab x d; vision: patch_dim x d projection
    Tensor class_token;      // vision only, 1 x d
    Tensor pos;              // learnable positions x d
    std::vector<LayerParams> layers;
    Tensor final_norm_gain;  // d_model
    Tensor cls_w;            // d_model x n_classes
    Tensor cls_b;            // n_classes
    std::vector<NamedParam> registry;
};

LayerStack build_model(const ModelConfig& cfg, std::uint64_t seed);

// Non-overlapping row-major patches, channel-major within a patch; invertible.
std::vector<double> patchify(const std::vector<double>& image, int channels, int image_size,
                             int patch_size);
std::vector<double> unpatchify(const std::vector<double>& patches, int channels, int image_size,
                               int patch_size);

struct FfnDropout {
    double p = 0.0;
    int n_layers = 1;
    bool training = false;
    Rng* rng = nullptr;
};

// up-project to 2m, split halves (a, b), a * silu(b), down-project. Dropout
// slot 1 sits after the activation, slot 2 after the down-projection.
Tensor swiglu_ffn(const Tensor& x, const Tensor& w_up, const Tensor& w_down,
                  const FfnDropout& drop);
// two-matrix FFN with tanh-approximated GeLU; same dropout slots.
Tensor gelu_ffn(const Tensor& x, const Tensor& w1, const Tensor& w2, const FfnDropout& drop);

// Optional per-sample capture of attention maps and the final-norm output
// (used by the rollout command and by tests). Captures batch item 0.
struct ForwardCapture {
    std::vector<AttentionMaps> layer_maps;  // one per layer
    Tensor final_norm_output;               // tokens x d_model
    Tensor pooled;                          // 1 x d_model
};

Tensor model_forward(const LayerStack& stack, const std::vector<const Sample*>& batch,
                     bool training, Rng& dropout_rng, ForwardCapture* capture = nullptr);

long long count_params(const LayerStack& stack);
std::vector<std::pair<std::string, long long>> count_params_by_group(const LayerStack& stack);

std::vector<Tensor> trainable_params(const LayerStack& stack);

}  // namespace dgsa

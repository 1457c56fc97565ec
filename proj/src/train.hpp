// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "data.hpp"
#include "model.hpp"

namespace dgsa {

enum class LrSchedule { cosine, warmup_linear };

struct TrainConfig {
    int epochs = 10;
    int batch_size = 32;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    LrSchedule schedule = LrSchedule::warmup_linear;
    long warmup_steps = 1000;
    double lr_min = 0.0;
    double clip_norm = 1.0;  // 0 disables clipping
    std::uint64_t seed = 0;

    void validate(long total_steps) const;
};

struct OptimizerState {
    std::vector<std::vector<double>> m, v;  // first/second moments per parameter
    long step = 0;                          // completed steps

    static OptimizerState make(const std::vector<NamedParam>& params);
};

// Bias-corrected AdamW step with decoupled weight decay; decay is skipped for
// no_decay parameters (biases, norm gains). Parameters without gradients are
// left untouched.
void adamw_step(std::vector<NamedParam>& params, OptimizerState& state, const TrainConfig& cfg,
                double lr_t);

double cosine_lr(long step, long total, double lr_max, double lr_min);
double warmup_linear_lr(long step, long warmup, long total, double lr_max);

// Scales all gradients by max_norm/g when the global L2 norm g exceeds
// max_norm; returns the applied factor.
double clip_global_norm(std::vector<NamedParam>& params, double max_norm);

void zero_grads(std::vector<NamedParam>& params);

struct EpochReport {
    double mean_loss = 0.0;
    double accuracy = 0.0;
    std::vector<double> lr_trace;
};

// Receives one record per optimizer step.
using MetricsSink = std::function<void(long step, int epoch, double lr, double loss, double acc)>;

EpochReport train_epoch(LayerStack& stack, const Dataset& data, const TrainConfig& cfg,
                        OptimizerState& state, int epoch, long total_steps, Rng& dropout_rng,
                        const MetricsSink& sink);

struct EvalReport {
    double accuracy = 0.0;
    double mean_loss = 0.0;
    std::vector<long> per_class_count;
    std::vector<long> per_class_correct;
};

// Dropout-inert evaluation; argmax ties resolve to the lowest class index.
EvalReport evaluate(const LayerStack& stack, const Dataset& data);

int argmax_row(const Tensor& logits, std::size_t row);

}  // namespace dgsa

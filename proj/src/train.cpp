// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "train.hpp"

#include <cmath>

namespace dgsa {

void TrainConfig::validate(long total_steps) const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (lr <= 0.0) throw ConfigError("train: lr must be > 0");
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
        throw ConfigError("train: betas must lie in (0, 1)");
    if (adam_eps <= 0.0) throw ConfigError("train: adam eps must be > 0");
    if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    if (clip_norm < 0.0) throw ConfigError("train: clip_norm must be >= 0");
    if (schedule == LrSchedule::warmup_linear && warmup_steps > total_steps)
        throw ConfigError("train: warmup_steps=" + std::to_string(warmup_steps) +
                          " exceeds total steps " + std::to_string(total_steps));
}

OptimizerState OptimizerState::make(const std::vector<NamedParam>& params) {
    OptimizerState st;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const auto& p : params) {
        st.m.emplace_back(p.value.size(), 0.0);
        st.v.emplace_back(p.value.size(), 0.0);
    }
    return st;
}

void adamw_step(std::vector<NamedParam>& params, OptimizerState& state, const TrainConfig& cfg,
                double lr_t) {
    const long t = state.step + 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        if (!p.value.has_grad()) continue;
        const auto& g = p.value.grad();
        auto& theta = p.value.mutable_data();
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (std::isnan(g[i]))
                throw NumericError("adamw: NaN gradient in '" + p.name + "' at step " +
                                   std::to_string(t));
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] -= lr_t * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
            if (!p.no_decay && cfg.weight_decay > 0.0) theta[i] -= lr_t * cfg.weight_decay * theta[i];
        }
    }
    state.step = t;
}

double cosine_lr(long step, long total, double lr_max, double lr_min) {
    if (total <= 0) throw ConfigError("cosine lr: total steps must be > 0");
    const double phase = 3.14159265358979323846 * static_cast<double>(step) / total;
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

double warmup_linear_lr(long step, long warmup, long total, double lr_max) {
    if (warmup > total) throw ConfigError("warmup lr: warmup exceeds total steps");
    if (step < warmup) return lr_max * static_cast<double>(step) / static_cast<double>(warmup);
    if (step >= total) return 0.0;
    return lr_max * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

double clip_global_norm(std::vector<NamedParam>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params)
        if (p.value.has_grad())
            for (double g : p.value.grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return 1.0;
    const double factor = max_norm / norm;
    for (auto& p : params)
        if (p.value.has_grad())
            for (double& g : p.value.mutable_grad()) g *= factor;
    return factor;
}

void zero_grads(std::vector<NamedParam>& params) {
    for (auto& p : params) p.value.zero_grad();
}

namespace {

double schedule_lr(const TrainConfig& cfg, long step, long total_steps) {
    switch (cfg.schedule) {
        case LrSchedule::cosine: return cosine_lr(step, total_steps, cfg.lr, cfg.lr_min);
        case LrSchedule::warmup_linear:
            return warmup_linear_lr(step, cfg.warmup_steps, total_steps, cfg.lr);
    }
    throw ConfigError("train: unknown schedule");
}

}  // namespace

int argmax_row(const Tensor& logits, std::size_t row) {
    const std::size_t c = logits.cols();
    int best = 0;
    for (std::size_t j = 1; j < c; ++j)
        if (logits.at(row, j) > logits.at(row, best)) best = static_cast<int>(j);
    return best;  // strict > keeps the lowest index on ties
}

EpochReport train_epoch(LayerStack& stack, const Dataset& data, const TrainConfig& cfg,
                        OptimizerState& state, int epoch, long total_steps, Rng& dropout_rng,
                        const MetricsSink& sink) {
    if (data.samples.empty()) throw UsageError("train_epoch: empty dataset");
    // per-epoch shuffle from a derived seed, independent of dropout stream
    Rng shuffle_rng(hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> perm = shuffle_rng.permutation(data.samples.size());

    EpochReport report;
    double loss_sum = 0.0;
    long correct = 0;
    const std::size_t n = data.samples.size();
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
        std::vector<const Sample*> batch;
        std::vector<int> labels;
        for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(&data.samples[perm[i]]);
            labels.push_back(data.samples[perm[i]].label);
        }

        Tensor logits = model_forward(stack, batch, /*training=*/true, dropout_rng);
        Tensor loss = cross_entropy(logits, labels);
        if (!std::isfinite(loss.item()))
            throw NumericError("train: non-finite loss at step " + std::to_string(state.step + 1) +
                               " (epoch " + std::to_string(epoch) + ")");

        zero_grads(stack.registry);
        backward(loss);
        if (cfg.clip_norm > 0.0) clip_global_norm(stack.registry, cfg.clip_norm);
        const double lr_t = schedule_lr(cfg, state.step, total_steps);
        adamw_step(stack.registry, state, cfg, lr_t);

        long batch_correct = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (argmax_row(logits, i) == labels[i]) ++batch_correct;
        correct += batch_correct;
        loss_sum += loss.item() * static_cast<double>(labels.size());
        report.lr_trace.push_back(lr_t);
        if (sink)
            sink(state.step, epoch, lr_t, loss.item(),
                 static_cast<double>(batch_correct) / static_cast<double>(labels.size()));
    }
    report.mean_loss = loss_sum / static_cast<double>(n);
    report.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return report;
}

EvalReport evaluate(const LayerStack& stack, const Dataset& data) {
    if (data.samples.empty()) throw UsageError("evaluate: empty dataset");
    EvalReport rep;
    rep.per_class_count.assign(stack.cfg.n_classes, 0);
    rep.per_class_correct.assign(stack.cfg.n_classes, 0);
    Rng unused(0);  // eval mode never draws from it
    double loss_sum = 0.0;
    long correct = 0;
    const std::size_t kChunk = 64;
    for (std::size_t start = 0; start < data.samples.size(); start += kChunk) {
        const std::size_t stop = std::min(data.samples.size(), start + kChunk);
        std::vector<const Sample*> batch;
        std::vector<int> labels;
        for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(&data.samples[i]);
            labels.push_back(data.samples[i].label);
        }
        Tensor logits = model_forward(stack, batch, /*training=*/false, unused);
        Tensor loss = cross_entropy(logits, labels);
        loss_sum += loss.item() * static_cast<double>(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            ++rep.per_class_count[labels[i]];
            if (argmax_row(logits, i) == labels[i]) {
                ++correct;
                ++rep.per_class_correct[labels[i]];
            }
        }
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(data.samples.size());
    rep.mean_loss = loss_sum / static_cast<double>(data.samples.size());
    return rep;
}

}  // namespace dgsa

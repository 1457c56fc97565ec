// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "checkpoint.hpp"
#include "log.hpp"
#include "rollout.hpp"

namespace dgsa {

namespace {

namespace fs = std::filesystem;

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string hex_hash(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

long total_steps_for(const Dataset& train_data, const TrainConfig& tc) {
    const long steps_per_epoch =
        (static_cast<long>(train_data.size()) + tc.batch_size - 1) / tc.batch_size;
    return steps_per_epoch * tc.epochs;
}

Dataset load_csv_dataset(const RunConfig& cfg, bool eval_split) {
    const std::string train_path = cfg.get("data_path");
    if (train_path.empty()) throw ConfigError("config: csv data_kind needs data_path");
    TextCorpus train_corpus = read_tsv_corpus(train_path);
    Vocab vocab = build_vocab(train_corpus.texts,
                              static_cast<int>(std::stol(cfg.get("min_token_freq"))),
                              static_cast<int>(std::stol(cfg.get("max_vocab"))));
    const ModelConfig mc = cfg.model();
    if (vocab.size() > mc.vocab_size)
        throw ConfigError("config: corpus vocabulary of " + std::to_string(vocab.size()) +
                          " exceeds vocab_size=" + std::to_string(mc.vocab_size));
    const DatasetSpec spec = cfg.dataset(eval_split);
    const std::string path = eval_split ? cfg.get("eval_path") : train_path;
    if (path.empty()) throw ConfigError("config: csv eval needs eval_path");
    return load_tsv(path, vocab, spec.n_classes, mc.max_seq_len, spec.noise, spec.noise_level,
                    spec.seed);
}

}  // namespace

Dataset build_dataset(const RunConfig& cfg, bool eval_split) {
    const DatasetSpec spec = cfg.dataset(eval_split);
    switch (spec.kind) {
        case DataKind::synth_text: {
            const ModelConfig mc = cfg.model();
            if (mc.vocab_size < synth_text_vocab_span(spec.n_classes))
                throw ConfigError("config: vocab_size=" + std::to_string(mc.vocab_size) +
                                  " is below the synthetic task span of " +
                                  std::to_string(synth_text_vocab_span(spec.n_classes)));
            if (spec.seq_len > mc.max_seq_len)
                throw ConfigError("config: seq_len exceeds max_seq_len");
            return synth_token_task(spec);
        }
        case DataKind::synth_vision: {
            const ModelConfig mc = cfg.model();
            if (mc.task != Task::vision)
                throw ConfigError("config: synth_vision data requires task=vision");
            return synth_patch_task(spec);
        }
        case DataKind::idx_images: {
            if (spec.path.empty() || spec.labels_path.empty())
                throw ConfigError("config: idx data_kind needs data_path and labels_path");
            Dataset ds = load_idx(spec.path, spec.labels_path, spec.n_classes, spec.noise,
                                  spec.noise_level, spec.seed);
            const ModelConfig mc = cfg.model();
            if (ds.image_size != mc.image_size)
                throw ConfigError("config: idx images are " + std::to_string(ds.image_size) +
                                  "px, model expects image_size=" + std::to_string(mc.image_size));
            return ds;
        }
        case DataKind::csv_text: return load_csv_dataset(cfg, eval_split);
    }
    throw ConfigError("config: unknown data kind");
}

Report run_train(const RunConfig& cfg, const std::string& out_dir) {
    const ModelConfig mc = cfg.model();
    const TrainConfig tc = cfg.train();
    Dataset train_data = build_dataset(cfg, /*eval_split=*/false);
    const long total_steps = total_steps_for(train_data, tc);
    tc.validate(total_steps);

    fs::create_directories(out_dir);
    const std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
    const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
    std::ofstream metrics(metrics_path);
    if (!metrics) throw IoError("train: cannot write " + metrics_path);
    metrics << "step,epoch,lr,loss,acc\n";

    LayerStack stack = build_model(mc, tc.seed);
    OptimizerState opt = OptimizerState::make(stack.registry);
    Rng dropout_rng(hash_combine(tc.seed, 0x64726F70ULL));
    log_info("training " + std::to_string(count_params(stack)) + " parameters for " +
             std::to_string(total_steps) + " steps");

    EpochReport last;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        last = train_epoch(stack, train_data, tc, opt, epoch, total_steps, dropout_rng,
                           [&metrics](long step, int ep, double lr, double loss, double acc) {
                               char line[160];
                               std::snprintf(line, sizeof(line), "%ld,%d,%.17g,%.17g,%.6f\n", step,
                                             ep, lr, loss, acc);
                               metrics << line;
                           });
        log_info("epoch " + std::to_string(epoch) + ": loss " + fmt("%.4f", last.mean_loss) +
                 " acc " + fmt("%.4f", last.accuracy));
    }
    metrics.close();
    if (!metrics) throw IoError("train: short write to " + metrics_path);

    save_checkpoint(ckpt_path, stack, cfg.canonical_text());

    const EvalReport train_eval = evaluate(stack, train_data);
    Report rep;
    rep.emplace_back("params", std::to_string(count_params(stack)));
    rep.emplace_back("steps", std::to_string(opt.step));
    rep.emplace_back("final_epoch_loss", fmt("%.17g", last.mean_loss));
    rep.emplace_back("final_train_acc", fmt("%.6f", train_eval.accuracy));
    rep.emplace_back("metrics", metrics_path);
    rep.emplace_back("checkpoint", ckpt_path);
    return rep;
}

namespace {

void append_eval_rows(Report& rep, const std::string& prefix, const EvalReport& er) {
    rep.emplace_back(prefix + "accuracy", fmt("%.6f", er.accuracy));
    rep.emplace_back(prefix + "mean_loss", fmt("%.17g", er.mean_loss));
    for (std::size_t c = 0; c < er.per_class_count.size(); ++c) {
        const long n = er.per_class_count[c];
        const double acc =
            n == 0 ? 0.0 : static_cast<double>(er.per_class_correct[c]) / static_cast<double>(n);
        rep.emplace_back(prefix + "class" + std::to_string(c) + "_acc",
                         fmt("%.6f", acc) + " (n=" + std::to_string(n) + ")");
    }
}

struct LoadedModel {
    RunConfig cfg;
    LayerStack stack;
};

LoadedModel load_model(const std::string& checkpoint_path, const RunConfig* overrides) {
    CheckpointData data = read_checkpoint(checkpoint_path);
    RunConfig embedded = RunConfig::from_text(data.config_text);
    RunConfig merged = embedded;
    if (overrides) merged.merge_overrides(*overrides);
    if (merged.model_hash() != embedded.model_hash())
        throw UsageError("eval: overrides change the model architecture; checkpoint model hash " +
                         hex_hash(embedded.model_hash()) + " vs requested " +
                         hex_hash(merged.model_hash()));
    LoadedModel lm{merged, build_model(merged.model(), merged.train().seed)};
    restore_params(lm.stack, data);
    return lm;
}

}  // namespace

Report run_eval(const std::string& checkpoint_path, const RunConfig* overrides,
                const std::vector<double>& sweep) {
    LoadedModel lm = load_model(checkpoint_path, overrides);
    Report rep;
    rep.emplace_back("checkpoint", checkpoint_path);
    rep.emplace_back("model_hash", hex_hash(lm.cfg.model_hash()));
    if (sweep.empty()) {
        Dataset eval_data = build_dataset(lm.cfg, /*eval_split=*/true);
        append_eval_rows(rep, "", evaluate(lm.stack, eval_data));
        return rep;
    }
    for (double level : sweep) {
        RunConfig swept = lm.cfg;
        swept.set("noise_level", fmt("%.17g", level));
        if (swept.get("noise_kind") == "none")
            swept.set("noise_kind", swept.get("task") == "vision" ? "gaussian" : "spurious");
        Dataset eval_data = build_dataset(swept, /*eval_split=*/true);
        append_eval_rows(rep, "noise" + fmt("%g", level) + "_", evaluate(lm.stack, eval_data));
    }
    return rep;
}

RunConfig gradcheck_default_config() {
    // micro geometry keeps the finite-difference sweep fast while exercising
    // every parameter group
    RunConfig cfg;
    cfg.set("variant", "dgsa");
    cfg.set("task", "text");
    cfg.set("depth", "2");
    cfg.set("d_model", "8");
    cfg.set("heads", "2");
    cfg.set("vocab_size", "64");
    cfg.set("max_seq_len", "6");
    cfg.set("seq_len", "4");
    cfg.set("data_size", "2");
    cfg.set("eval_size", "2");
    cfg.set("dropout_p", "0");
    return cfg;
}

Report run_gradcheck(const RunConfig& cfg, double tol, bool* pass_out) {
    const ModelConfig mc = cfg.model();
    const TrainConfig tc = cfg.train();
    // a fixed two-sample batch from the configured dataset
    Dataset data = build_dataset(cfg, /*eval_split=*/false);
    std::vector<const Sample*> batch;
    std::vector<int> labels;
    for (std::size_t i = 0; i < std::min<std::size_t>(2, data.size()); ++i) {
        batch.push_back(&data.samples[i]);
        labels.push_back(data.samples[i].label);
    }

    LayerStack stack = build_model(mc, tc.seed);
    Rng unused(0);
    auto f = [&]() {
        return cross_entropy(model_forward(stack, batch, /*training=*/false, unused), labels);
    };

    GradCheckResult res = gradcheck(f, trainable_params(stack), 1e-5, tol);
    Report rep;
    rep.emplace_back("tolerance", fmt("%.3g", tol));
    for (std::size_t k = 0; k < stack.registry.size(); ++k)
        rep.emplace_back("group." + stack.registry[k].name, fmt("%.3e", res.per_leaf_max[k]));
    rep.emplace_back("max_rel_err", fmt("%.3e", res.max_rel_err));
    rep.emplace_back("pass", res.pass ? "1" : "0");
    if (pass_out) *pass_out = res.pass;
    return rep;
}

Report run_rollout(const std::string& checkpoint_path, long sample_index,
                   const std::string& out_dir) {
    LoadedModel lm = load_model(checkpoint_path, nullptr);
    Dataset data = build_dataset(lm.cfg, /*eval_split=*/true);
    if (sample_index < 0 || static_cast<std::size_t>(sample_index) >= data.size())
        throw UsageError("rollout: sample index " + std::to_string(sample_index) +
                         " out of range [0, " + std::to_string(data.size()) + ")");
    fs::create_directories(out_dir);

    const Sample& sample = data.samples[static_cast<std::size_t>(sample_index)];
    ForwardCapture capture;
    Rng unused(0);
    model_forward(lm.stack, {&sample}, /*training=*/false, unused, &capture);

    Report rep;
    rep.emplace_back("sample", std::to_string(sample_index));
    rep.emplace_back("label", std::to_string(sample.label));

    const int n = capture.layer_maps.empty() ? 0 : capture.layer_maps[0].n;
    std::vector<std::vector<double>> averaged;
    for (std::size_t l = 0; l < capture.layer_maps.size(); ++l) {
        averaged.push_back(head_average(capture.layer_maps[l]));
        const auto& m = averaged.back();
        std::vector<double> pos_part(m.size()), neg_part(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            pos_part[i] = std::max(m[i], 0.0);
            neg_part[i] = std::max(-m[i], 0.0);
        }
        const std::string base = (fs::path(out_dir) / ("layer" + std::to_string(l))).string();
        export_csv(m, n, n, base + ".csv");
        export_pgm(pos_part, n, n, base + "_pos.pgm");
        export_pgm(neg_part, n, n, base + "_neg.pgm");
        rep.emplace_back("layer" + std::to_string(l), base + ".csv");
    }

    std::vector<double> acc = rollout_accumulate(averaged, n);
    const std::string roll_base = (fs::path(out_dir) / "rollout").string();
    export_csv(acc, n, n, roll_base + ".csv");
    export_pgm(acc, n, n, roll_base + ".pgm");
    rep.emplace_back("rollout", roll_base + ".csv");

    // attribution: how much rollout mass each input position receives
    const ModelConfig mc = lm.cfg.model();
    const std::string attr_base = (fs::path(out_dir) / "attribution").string();
    if (mc.task == Task::vision) {
        // class-token row over the patch grid
        const int grid = mc.image_size / mc.patch_size;
        std::vector<double> row(acc.begin() + 1, acc.begin() + n);  // drop the class column
        export_csv(row, grid, grid, attr_base + ".csv");
        export_pgm(row, grid, grid, attr_base + ".pgm");
    } else {
        // mean over query rows
        std::vector<double> col_mean(static_cast<std::size_t>(n), 0.0);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                col_mean[c] += acc[static_cast<std::size_t>(r) * n + c] / n;
        export_csv(col_mean, 1, n, attr_base + ".csv");
        export_pgm(col_mean, 1, n, attr_base + ".pgm");
    }
    rep.emplace_back("attribution", attr_base + ".csv");
    rep.emplace_back("files", std::to_string(3 * capture.layer_maps.size() + 4));
    return rep;
}

Report run_synth(const RunConfig& cfg, const std::string& out_path) {
    const DatasetSpec spec = cfg.dataset(/*eval_split=*/false);
    Report rep;
    if (spec.kind == DataKind::synth_text) {
        Dataset ds = synth_token_task(spec);
        const std::string path = out_path + ".tsv";
        write_tsv_corpus(path, render_synth_text(ds));
        rep.emplace_back("file", path);
        rep.emplace_back("samples", std::to_string(ds.size()));
        rep.emplace_back("oracle_accuracy", fmt("%.6f", counting_oracle_accuracy(ds)));
    } else if (spec.kind == DataKind::synth_vision) {
        Dataset ds = synth_patch_task(spec);
        IdxImages im;
        im.count = static_cast<int>(ds.size());
        im.rows = ds.image_size;
        im.cols = ds.image_size;
        std::vector<int> labels;
        for (const auto& s : ds.samples) {
            for (double v : s.image)
                im.pixels.push_back(
                    static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
            labels.push_back(s.label);
        }
        const std::string ipath = out_path + "-images.idx";
        const std::string lpath = out_path + "-labels.idx";
        write_idx_images(ipath, im);
        write_idx_labels(lpath, labels);
        rep.emplace_back("images", ipath);
        rep.emplace_back("labels", lpath);
        rep.emplace_back("samples", std::to_string(ds.size()));
        rep.emplace_back("oracle_accuracy", fmt("%.6f", template_oracle_accuracy(ds)));
    } else {
        throw UsageError("synth: data_kind must be synth_text or synth_vision");
    }
    return rep;
}

std::string report_to_text(const Report& report) {
    std::ostringstream os;
    for (const auto& [k, v] : report) os << k << " = " << v << '\n';
    return os.str();
}

}  // namespace dgsa

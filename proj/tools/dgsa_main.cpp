// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Everything of substance lives behind the C API in
// libdgsa; this file only parses arguments and prints reports.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dgsa/dgsa.h"

namespace {

struct ConfigDeleter {
    void operator()(dgsa_config* c) const { dgsa_config_free(c); }
};
struct ReportDeleter {
    void operator()(dgsa_report* r) const { dgsa_report_free(r); }
};
using ConfigPtr = std::unique_ptr<dgsa_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<dgsa_report, ReportDeleter>;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value configuration file");
    cmd->add_option("--set", args.sets, "override one key (key=value, repeatable)");
    cmd->add_option("--seed", args.seed, "override the run seed");
    cmd->add_option("--out", args.out, "output directory or path prefix");
}

int fail(dgsa_status status, const char* what) {
    std::fprintf(stderr, "dgsa: %s: %s\n", what, dgsa_last_error());
    return static_cast<int>(status);
}

// Builds the config from --config/--set/--seed; returns nonzero exit on error.
int make_config(const CommonArgs& args, ConfigPtr& out) {
    dgsa_config* raw = nullptr;
    dgsa_status st = args.config_path.empty() ? dgsa_config_create(&raw)
                                              : dgsa_config_load(args.config_path.c_str(), &raw);
    if (st != DGSA_OK) return fail(st, "config");
    out.reset(raw);
    for (const auto& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "dgsa: --set expects key=value, got '%s'\n", kv.c_str());
            return static_cast<int>(DGSA_ERR_USAGE);
        }
        st = dgsa_config_set(out.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (st != DGSA_OK) return fail(st, "config");
    }
    if (!args.seed.empty()) {
        st = dgsa_config_set(out.get(), "seed", args.seed.c_str());
        if (st != DGSA_OK) return fail(st, "config");
    }
    return 0;
}

void print_report(const dgsa_report* rep) {
    for (size_t i = 0; i < dgsa_report_count(rep); ++i)
        std::printf("%s = %s\n", dgsa_report_key(rep, i), dgsa_report_value(rep, i));
}

std::string resolve_out(const ConfigPtr& cfg, const CommonArgs& args, const char* fallback) {
    if (!args.out.empty()) return args.out;
    if (cfg) {
        const char* v = dgsa_config_get(cfg.get(), "out_dir");
        if (v && *v) return v;
    }
    return fallback;
}

std::vector<double> parse_sweep(const std::string& arg) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < arg.size()) {
        std::size_t comma = arg.find(',', pos);
        if (comma == std::string::npos) comma = arg.size();
        out.push_back(std::stod(arg.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dgsa: differential gated self-attention laboratory"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, grad_args, roll_args, synth_args;
    std::string eval_ckpt, roll_ckpt, sweep_arg;
    long sample_index = 0;
    double tol = 1e-4;

    CLI::App* train = app.add_subcommand("train", "train a model and write metrics + checkpoint");
    add_common(train, train_args);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval, eval_args);
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval->add_option("--sweep", sweep_arg, "comma-separated noise levels");

    CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient check");
    add_common(grad, grad_args);
    grad->add_option("--tol", tol, "relative tolerance (default 1e-4)");

    CLI::App* roll = app.add_subcommand("rollout", "export attention rollout maps");
    add_common(roll, roll_args);
    roll->add_option("--checkpoint", roll_ckpt, "checkpoint file")->required();
    roll->add_option("--sample", sample_index, "eval sample index");

    CLI::App* synth = app.add_subcommand("synth", "materialize a synthetic dataset");
    add_common(synth, synth_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(DGSA_ERR_USAGE);
    }

    dgsa_status st = DGSA_OK;
    dgsa_report* rep = nullptr;

    if (train->parsed()) {
        ConfigPtr cfg;
        if (int rc = make_config(train_args, cfg)) return rc;
        const std::string out_dir = resolve_out(cfg, train_args, "out");
        st = dgsa_train(cfg.get(), out_dir.c_str(), &rep);
        if (st != DGSA_OK) return fail(st, "train");
    } else if (eval->parsed()) {
        ConfigPtr overrides;
        if (int rc = make_config(eval_args, overrides)) return rc;
        std::vector<double> sweep;
        try {
            sweep = parse_sweep(sweep_arg);
        } catch (const std::exception&) {
            std::fprintf(stderr, "dgsa: --sweep expects comma-separated numbers\n");
            return static_cast<int>(DGSA_ERR_USAGE);
        }
        // pass overrides only when the user supplied any
        const bool have_overrides = !eval_args.config_path.empty() || !eval_args.sets.empty() ||
                                    !eval_args.seed.empty();
        st = dgsa_evaluate(eval_ckpt.c_str(), have_overrides ? overrides.get() : nullptr,
                           sweep.empty() ? nullptr : sweep.data(), sweep.size(), &rep);
        if (st != DGSA_OK) return fail(st, "eval");
    } else if (grad->parsed()) {
        ConfigPtr cfg;
        const bool have_cfg = !grad_args.config_path.empty() || !grad_args.sets.empty() ||
                              !grad_args.seed.empty();
        if (int rc = make_config(grad_args, cfg)) return rc;
        st = dgsa_gradcheck(have_cfg ? cfg.get() : nullptr, tol, &rep);
        if (rep) print_report(rep);
        if (st != DGSA_OK) {
            dgsa_report_free(rep);
            return fail(st, "gradcheck");
        }
        dgsa_report_free(rep);
        return 0;
    } else if (roll->parsed()) {
        const std::string out_dir = roll_args.out.empty() ? "rollout" : roll_args.out;
        st = dgsa_rollout(roll_ckpt.c_str(), sample_index, out_dir.c_str(), &rep);
        if (st != DGSA_OK) return fail(st, "rollout");
    } else if (synth->parsed()) {
        ConfigPtr cfg;
        if (int rc = make_config(synth_args, cfg)) return rc;
        const std::string out_path = synth_args.out.empty() ? "synth" : synth_args.out;
        st = dgsa_synth(cfg.get(), out_path.c_str(), &rep);
        if (st != DGSA_OK) return fail(st, "synth");
    }

    if (rep) {
        print_report(rep);
        dgsa_report_free(rep);
    }
    return 0;
}

// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Exercises the shared library strictly through its C header, the same way
// the CLI does.
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "dgsa/dgsa.h"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const char* child = nullptr) const {
        return child ? (path / child).string() : path.string();
    }
};

dgsa_config* tiny_train_config() {
    dgsa_config* cfg = nullptr;
    REQUIRE(dgsa_config_create(&cfg) == DGSA_OK);
    const char* kv[][2] = {
        {"depth", "1"},      {"d_model", "16"},  {"heads", "2"},     {"epochs", "2"},
        {"data_size", "32"}, {"eval_size", "16"}, {"vocab_size", "64"}, {"seq_len", "8"},
        {"max_seq_len", "8"}, {"batch_size", "16"}, {"warmup_steps", "1"}, {"seed", "5"},
    };
    for (const auto& p : kv) REQUIRE(dgsa_config_set(cfg, p[0], p[1]) == DGSA_OK);
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("version and error surfaces") {
    CHECK(dgsa_version() != nullptr);
    dgsa_config* cfg = nullptr;
    CHECK(dgsa_config_load("/no/such/file.cfg", &cfg) == DGSA_ERR_USAGE);
    const std::string msg = dgsa_last_error();
    CHECK(msg.find("/no/such/file.cfg") != std::string::npos);
}

TEST_CASE("config handles: set, get, canonical, unknown keys") {
    dgsa_config* cfg = nullptr;
    REQUIRE(dgsa_config_create(&cfg) == DGSA_OK);
    CHECK(dgsa_config_set(cfg, "nonsense", "1") == DGSA_ERR_USAGE);
    CHECK(dgsa_config_set(cfg, "gate_depth", "2") == DGSA_ERR_USAGE);
    CHECK(dgsa_config_set(cfg, "d_model", "32") == DGSA_OK);
    CHECK(std::string(dgsa_config_get(cfg, "d_model")) == "32");
    CHECK(dgsa_config_get(cfg, "bogus") == nullptr);

    char* text = nullptr;
    REQUIRE(dgsa_config_canonical(cfg, &text) == DGSA_OK);
    CHECK(std::string(text).find("d_model=32") != std::string::npos);
    dgsa_string_free(text);
    dgsa_config_free(cfg);
}

TEST_CASE("train, evaluate, rollout and synth through the C API") {
    TempDir dir("dgsa_capi_run");
    dgsa_config* cfg = tiny_train_config();

    dgsa_report* rep = nullptr;
    REQUIRE(dgsa_train(cfg, dir.str("run").c_str(), &rep) == DGSA_OK);
    REQUIRE(rep != nullptr);
    CHECK(dgsa_report_find(rep, "checkpoint") != nullptr);
    const std::string ckpt = dgsa_report_find(rep, "checkpoint");
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(dir.str("run") + "/metrics.csv"));
    dgsa_report_free(rep);

    // evaluation without overrides
    rep = nullptr;
    REQUIRE(dgsa_evaluate(ckpt.c_str(), nullptr, nullptr, 0, &rep) == DGSA_OK);
    CHECK(dgsa_report_find(rep, "accuracy") != nullptr);
    dgsa_report_free(rep);

    // a data override is fine
    dgsa_config* data_override = nullptr;
    REQUIRE(dgsa_config_create(&data_override) == DGSA_OK);
    REQUIRE(dgsa_config_set(data_override, "eval_size", "8") == DGSA_OK);
    rep = nullptr;
    CHECK(dgsa_evaluate(ckpt.c_str(), data_override, nullptr, 0, &rep) == DGSA_OK);
    dgsa_report_free(rep);
    dgsa_config_free(data_override);

    // a model-structural override is refused with both hashes in the message
    dgsa_config* bad_override = nullptr;
    REQUIRE(dgsa_config_create(&bad_override) == DGSA_OK);
    REQUIRE(dgsa_config_set(bad_override, "d_model", "32") == DGSA_OK);
    rep = nullptr;
    CHECK(dgsa_evaluate(ckpt.c_str(), bad_override, nullptr, 0, &rep) == DGSA_ERR_USAGE);
    CHECK(std::string(dgsa_last_error()).find("hash") != std::string::npos);
    dgsa_config_free(bad_override);

    // noise sweep: one accuracy row per level
    const double sweep[] = {0.0, 0.3};
    rep = nullptr;
    REQUIRE(dgsa_evaluate(ckpt.c_str(), nullptr, sweep, 2, &rep) == DGSA_OK);
    CHECK(dgsa_report_find(rep, "noise0_accuracy") != nullptr);
    CHECK(dgsa_report_find(rep, "noise0.3_accuracy") != nullptr);
    dgsa_report_free(rep);

    // rollout writes layer maps, attribution and the accumulated rollout
    rep = nullptr;
    REQUIRE(dgsa_rollout(ckpt.c_str(), 0, dir.str("maps").c_str(), &rep) == DGSA_OK);
    CHECK(fs::exists(dir.str("maps") + "/layer0.csv"));
    CHECK(fs::exists(dir.str("maps") + "/layer0_pos.pgm"));
    CHECK(fs::exists(dir.str("maps") + "/layer0_neg.pgm"));
    CHECK(fs::exists(dir.str("maps") + "/rollout.csv"));
    CHECK(fs::exists(dir.str("maps") + "/rollout.pgm"));
    CHECK(fs::exists(dir.str("maps") + "/attribution.csv"));
    dgsa_report_free(rep);
    CHECK(dgsa_rollout(ckpt.c_str(), 99999, dir.str("maps2").c_str(), nullptr) ==
          DGSA_ERR_USAGE);

    // synthetic dataset materialization with its oracle report
    rep = nullptr;
    REQUIRE(dgsa_synth(cfg, dir.str("synthset").c_str(), &rep) == DGSA_OK);
    const char* oracle_acc = dgsa_report_find(rep, "oracle_accuracy");
    REQUIRE(oracle_acc != nullptr);
    CHECK(std::string(oracle_acc) == "1.000000");  // clean task: perfect oracle
    dgsa_report_free(rep);

    dgsa_config_free(cfg);
}

TEST_CASE("identical seeds give byte-identical artifacts") {
    TempDir dir("dgsa_capi_determinism");
    dgsa_config* cfg = tiny_train_config();
    REQUIRE(dgsa_train(cfg, dir.str("a").c_str(), nullptr) == DGSA_OK);
    REQUIRE(dgsa_train(cfg, dir.str("b").c_str(), nullptr) == DGSA_OK);
    CHECK(slurp(dir.str("a") + "/metrics.csv") == slurp(dir.str("b") + "/metrics.csv"));
    CHECK(slurp(dir.str("a") + "/model.ckpt") == slurp(dir.str("b") + "/model.ckpt"));

    // a different seed changes the metrics log
    REQUIRE(dgsa_config_set(cfg, "seed", "6") == DGSA_OK);
    REQUIRE(dgsa_train(cfg, dir.str("c").c_str(), nullptr) == DGSA_OK);
    CHECK(slurp(dir.str("a") + "/metrics.csv") != slurp(dir.str("c") + "/metrics.csv"));
    dgsa_config_free(cfg);
}

TEST_CASE("gradcheck through the C API") {
    dgsa_report* rep = nullptr;
    CHECK(dgsa_gradcheck(nullptr, 1e-4, &rep) == DGSA_OK);  // built-in micro config
    REQUIRE(rep != nullptr);
    CHECK(std::string(dgsa_report_find(rep, "pass")) == "1");
    dgsa_report_free(rep);

    // an absurd tolerance cannot be met by floating point
    rep = nullptr;
    CHECK(dgsa_gradcheck(nullptr, 1e-300, &rep) == DGSA_ERR_NUMERIC);
    REQUIRE(rep != nullptr);  // report still filled for diagnostics
    CHECK(std::string(dgsa_report_find(rep, "pass")) == "0");
    dgsa_report_free(rep);
}

TEST_CASE("synth rejects invalid noise configuration") {
    dgsa_config* cfg = nullptr;
    REQUIRE(dgsa_config_create(&cfg) == DGSA_OK);
    CHECK(dgsa_config_set(cfg, "noise_level", "-0.5") == DGSA_ERR_USAGE);
    dgsa_config_free(cfg);
}

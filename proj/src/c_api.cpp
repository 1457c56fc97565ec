// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "dgsa/dgsa.h"

#include <cstring>
#include <string>

#include "runner.hpp"

struct dgsa_config {
    dgsa::RunConfig cfg;
};

struct dgsa_report {
    dgsa::Report rows;
};

namespace {

thread_local std::string t_last_error;

dgsa_status status_of(const std::exception& e) {
    using namespace dgsa;
    if (dynamic_cast<const NumericError*>(&e)) return DGSA_ERR_NUMERIC;
    if (dynamic_cast<const DataError*>(&e)) return DGSA_ERR_DATA;
    if (dynamic_cast<const UsageError*>(&e)) return DGSA_ERR_USAGE;
    return DGSA_ERR_USAGE;
}

template <typename Fn>
dgsa_status guarded(Fn&& fn) {
    try {
        t_last_error.clear();
        return fn();
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return status_of(e);
    } catch (...) {
        t_last_error = "unknown error";
        return DGSA_ERR_USAGE;
    }
}

}  // namespace

extern "C" {

const char* dgsa_version(void) { return "0.1.0"; }

const char* dgsa_last_error(void) { return t_last_error.c_str(); }

dgsa_status dgsa_config_create(dgsa_config** out) {
    return guarded([&]() {
        if (!out) throw dgsa::UsageError("config_create: null out pointer");
        *out = new dgsa_config{};
        return DGSA_OK;
    });
}

dgsa_status dgsa_config_load(const char* path, dgsa_config** out) {
    return guarded([&]() {
        if (!path || !out) throw dgsa::UsageError("config_load: null argument");
        auto* handle = new dgsa_config{};
        try {
            handle->cfg = dgsa::RunConfig::load_file(path);
        } catch (...) {
            delete handle;
            throw;
        }
        *out = handle;
        return DGSA_OK;
    });
}

dgsa_status dgsa_config_set(dgsa_config* cfg, const char* key, const char* value) {
    return guarded([&]() {
        if (!cfg || !key || !value) throw dgsa::UsageError("config_set: null argument");
        cfg->cfg.set(key, value);
        return DGSA_OK;
    });
}

const char* dgsa_config_get(const dgsa_config* cfg, const char* key) {
    thread_local std::string t_value;
    if (!cfg || !key) return nullptr;
    try {
        t_value = cfg->cfg.get(key);
        return t_value.c_str();
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return nullptr;
    }
}

dgsa_status dgsa_config_canonical(const dgsa_config* cfg, char** out_text) {
    return guarded([&]() {
        if (!cfg || !out_text) throw dgsa::UsageError("config_canonical: null argument");
        const std::string text = cfg->cfg.canonical_text();
        char* buf = new char[text.size() + 1];
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *out_text = buf;
        return DGSA_OK;
    });
}

void dgsa_config_free(dgsa_config* cfg) { delete cfg; }

void dgsa_string_free(char* text) { delete[] text; }

dgsa_status dgsa_train(const dgsa_config* cfg, const char* out_dir, dgsa_report** out) {
    return guarded([&]() {
        if (!cfg || !out_dir) throw dgsa::UsageError("train: null argument");
        dgsa::Report rep = dgsa::run_train(cfg->cfg, out_dir);
        if (out) *out = new dgsa_report{std::move(rep)};
        return DGSA_OK;
    });
}

dgsa_status dgsa_evaluate(const char* checkpoint_path, const dgsa_config* overrides,
                          const double* sweep, size_t sweep_len, dgsa_report** out) {
    return guarded([&]() {
        if (!checkpoint_path) throw dgsa::UsageError("evaluate: null checkpoint path");
        std::vector<double> levels;
        for (size_t i = 0; i < sweep_len; ++i) levels.push_back(sweep[i]);
        dgsa::Report rep =
            dgsa::run_eval(checkpoint_path, overrides ? &overrides->cfg : nullptr, levels);
        if (out) *out = new dgsa_report{std::move(rep)};
        return DGSA_OK;
    });
}

dgsa_status dgsa_gradcheck(const dgsa_config* cfg, double tol, dgsa_report** out) {
    return guarded([&]() {
        const dgsa::RunConfig run_cfg = cfg ? cfg->cfg : dgsa::gradcheck_default_config();
        const double tolerance = tol > 0.0 ? tol : 1e-4;
        bool pass = false;
        dgsa::Report rep = dgsa::run_gradcheck(run_cfg, tolerance, &pass);
        if (out) *out = new dgsa_report{std::move(rep)};
        if (!pass) {
            t_last_error = "gradcheck: a parameter group exceeded tolerance";
            return DGSA_ERR_NUMERIC;
        }
        return DGSA_OK;
    });
}

dgsa_status dgsa_rollout(const char* checkpoint_path, long sample_index, const char* out_dir,
                         dgsa_report** out) {
    return guarded([&]() {
        if (!checkpoint_path || !out_dir) throw dgsa::UsageError("rollout: null argument");
        dgsa::Report rep = dgsa::run_rollout(checkpoint_path, sample_index, out_dir);
        if (out) *out = new dgsa_report{std::move(rep)};
        return DGSA_OK;
    });
}

dgsa_status dgsa_synth(const dgsa_config* cfg, const char* out_path, dgsa_report** out) {
    return guarded([&]() {
        if (!cfg || !out_path) throw dgsa::UsageError("synth: null argument");
        dgsa::Report rep = dgsa::run_synth(cfg->cfg, out_path);
        if (out) *out = new dgsa_report{std::move(rep)};
        return DGSA_OK;
    });
}

size_t dgsa_report_count(const dgsa_report* report) { return report ? report->rows.size() : 0; }

const char* dgsa_report_key(const dgsa_report* report, size_t index) {
    if (!report || index >= report->rows.size()) return nullptr;
    return report->rows[index].first.c_str();
}

const char* dgsa_report_value(const dgsa_report* report, size_t index) {
    if (!report || index >= report->rows.size()) return nullptr;
    return report->rows[index].second.c_str();
}

const char* dgsa_report_find(const dgsa_report* report, const char* key) {
    if (!report || !key) return nullptr;
    for (const auto& [k, v] : report->rows)
        if (k == key) return v.c_str();
    return nullptr;
}

void dgsa_report_free(dgsa_report* report) { delete report; }

}  // extern "C"

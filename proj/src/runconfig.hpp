// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "data.hpp"
#include "model.hpp"
#include "train.hpp"

namespace dgsa {

// Flat key=value run configuration with a closed schema: unknown keys are
// rejected, values are validated per key, and unset keys take documented
// defaults (a few defaults depend on variant/task). The canonical text form
// is the sorted, fully-resolved key=value listing; its FNV-1a hash identifies
// a configuration, and the subset of model-structural keys hashes separately
// so evaluation can detect checkpoint/config mismatches while still allowing
// data overrides.
class RunConfig {
   public:
    RunConfig() = default;

    static RunConfig load_file(const std::string& path);
    static RunConfig from_text(const std::string& text);

    // set/override one key; throws ConfigError for unknown keys or bad values
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get(const std::string& key) const;  // resolved (default applied)

    std::string canonical_text() const;        // every key, sorted
    std::string canonical_model_text() const;  // model-structural keys only
    std::uint64_t config_hash() const;
    std::uint64_t model_hash() const;

    ModelConfig model() const;
    TrainConfig train() const;
    DatasetSpec dataset(bool eval_split = false) const;

    static const std::vector<std::string>& known_keys();
    static bool is_model_key(const std::string& key);

    // applies every explicitly-set key of `other` on top of this config
    void merge_overrides(const RunConfig& other);
    const std::map<std::string, std::string>& explicit_values() const { return values_; }

   private:
    std::map<std::string, std::string> values_;  // explicitly set keys only
};

long long dataset_eval_size(const RunConfig& cfg);

}  // namespace dgsa

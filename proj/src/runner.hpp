// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "runconfig.hpp"

namespace dgsa {

// Ordered key/value result rows, printed verbatim by the CLI.
using Report = std::vector<std::pair<std::string, std::string>>;

// Builds the dataset a run configuration describes. For csv datasets the
// vocabulary always comes from the training file, also when loading the eval
// split.
Dataset build_dataset(const RunConfig& cfg, bool eval_split);

// Trains per the config, writes <out_dir>/metrics.csv and <out_dir>/model.ckpt.
Report run_train(const RunConfig& cfg, const std::string& out_dir);

// Evaluates a checkpoint. Overrides may adjust data keys; changing any
// model-structural key is refused with both model hashes in the message.
// Each sweep entry re-runs evaluation at that noise level.
Report run_eval(const std::string& checkpoint_path, const RunConfig* overrides,
                const std::vector<double>& sweep);

// Finite-difference check of every parameter group on a small batch.
// The report carries per-group errors and pass=0|1; `pass_out` mirrors it.
Report run_gradcheck(const RunConfig& cfg, double tol, bool* pass_out);

// One forward pass on the selected eval sample; writes per-layer signed maps,
// an attribution map, and the accumulated rollout under out_dir.
Report run_rollout(const std::string& checkpoint_path, long sample_index,
                   const std::string& out_dir);

// Materializes a synthetic dataset (TSV for text, IDX pair for vision) at the
// given path prefix, together with its oracle-accuracy report.
Report run_synth(const RunConfig& cfg, const std::string& out_path);

// Built-in micro configuration used by gradcheck when no config is given.
RunConfig gradcheck_default_config();

std::string report_to_text(const Report& report);

}  // namespace dgsa

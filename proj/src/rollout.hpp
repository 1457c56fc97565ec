// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "attention.hpp"

namespace dgsa {

// Arithmetic mean over heads of the fused (signed) maps; N x N row-major.
std::vector<double> head_average(const AttentionMaps& maps);

// Attention rollout over head-averaged layer maps: per layer take |A|, mix
// with the identity (0.5 |A| + 0.5 I), renormalize rows, then left-multiply
// across layers. Rows of |A| that are all zero renormalize to the pure
// identity row. The result is row-stochastic.
std::vector<double> rollout_accumulate(const std::vector<std::vector<double>>& layer_maps, int n);

// 8-bit binary PGM (P5, maxval 255), min-max normalized with round-half-up.
// A constant map normalizes to all-zero bytes.
void export_pgm(const std::vector<double>& values, int rows, int cols, const std::string& path);

// Full-precision CSV ('.' decimal separator, comma columns, newline rows).
void export_csv(const std::vector<double>& values, int rows, int cols, const std::string& path);
std::vector<double> import_csv(const std::string& path, int* rows, int* cols);

}  // namespace dgsa

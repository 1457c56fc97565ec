// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace dgsa {

std::vector<double> head_average(const AttentionMaps& maps) {
    if (maps.heads <= 0 || maps.fused.empty()) throw UsageError("head_average: no maps captured");
    const std::size_t nn = maps.fused[0].size();
    std::vector<double> avg(nn, 0.0);
    for (const auto& m : maps.fused)
        for (std::size_t i = 0; i < nn; ++i) avg[i] += m[i];
    const double inv = 1.0 / static_cast<double>(maps.heads);
    for (auto& v : avg) v *= inv;
    return avg;
}

std::vector<double> rollout_accumulate(const std::vector<std::vector<double>>& layer_maps, int n) {
    if (layer_maps.empty()) throw UsageError("rollout: need at least one layer map");
    const std::size_t nn = static_cast<std::size_t>(n) * n;

    std::vector<double> rollout(nn, 0.0);
    for (int i = 0; i < n; ++i) rollout[static_cast<std::size_t>(i) * n + i] = 1.0;

    std::vector<double> mixed(nn), next(nn);
    for (const auto& layer : layer_maps) {
        if (layer.size() != nn) throw DimensionError("rollout: layer map size mismatch");
        // 0.5 |A| + 0.5 I, rows renormalized to sum 1
        for (int r = 0; r < n; ++r) {
            double sum = 0.0;
            for (int c = 0; c < n; ++c) {
                double v = 0.5 * std::abs(layer[static_cast<std::size_t>(r) * n + c]);
                if (c == r) v += 0.5;
                mixed[static_cast<std::size_t>(r) * n + c] = v;
                sum += v;
            }
            for (int c = 0; c < n; ++c) mixed[static_cast<std::size_t>(r) * n + c] /= sum;
        }
        // next = mixed * rollout
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k)
                    acc += mixed[static_cast<std::size_t>(r) * n + k] *
                           rollout[static_cast<std::size_t>(k) * n + c];
                next[static_cast<std::size_t>(r) * n + c] = acc;
            }
        rollout.swap(next);
    }
    return rollout;
}

void export_pgm(const std::vector<double>& values, int rows, int cols, const std::string& path) {
    if (values.size() != static_cast<std::size_t>(rows) * cols)
        throw DimensionError("pgm export: value count does not match dimensions");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("pgm export: cannot write " + path);
    out << "P5\n" << cols << ' ' << rows << "\n255\n";
    const double span = hi - lo;
    for (double v : values) {
        // constant maps normalize to 0; otherwise min-max to [0,255], round-half-up
        const double scaled = span == 0.0 ? 0.0 : (v - lo) / span * 255.0;
        const int byte = static_cast<int>(std::floor(scaled + 0.5));
        const unsigned char b = static_cast<unsigned char>(std::clamp(byte, 0, 255));
        out.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!out) throw IoError("pgm export: short write to " + path);
}

void export_csv(const std::vector<double>& values, int rows, int cols, const std::string& path) {
    if (values.size() != static_cast<std::size_t>(rows) * cols)
        throw DimensionError("csv export: value count does not match dimensions");
    std::ofstream out(path);
    if (!out) throw IoError("csv export: cannot write " + path);
    char buf[64];
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[static_cast<std::size_t>(r) * cols + c]);
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("csv export: short write to " + path);
}

std::vector<double> import_csv(const std::string& path, int* rows, int* cols) {
    std::ifstream in(path);
    if (!in) throw IoError("csv import: cannot open " + path);
    std::vector<double> values;
    std::string line;
    int r = 0, c = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        int row_cols = 0;
        while (std::getline(ls, cell, ',')) {
            values.push_back(std::stod(cell));
            ++row_cols;
        }
        if (c < 0)
            c = row_cols;
        else if (c != row_cols)
            throw DataError("csv import: ragged rows in " + path);
        ++r;
    }
    if (rows) *rows = r;
    if (cols) *cols = c;
    return values;
}

}  // namespace dgsa

// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rng.hpp"

namespace dgsa {

enum class DataKind { synth_text, synth_vision, idx_images, csv_text };
enum class NoiseKind { none, gaussian, spurious_tokens };

struct DatasetSpec {
    DataKind kind = DataKind::synth_text;
    int size = 0;
    int n_classes = 2;
    NoiseKind noise = NoiseKind::none;
    double noise_level = 0.0;  // sigma for gaussian, replacement rate for spurious
    std::uint64_t seed = 0;
    // text
    int seq_len = 16;
    int min_token_freq = 2;
    int max_vocab = 60000;
    // vision
    int image_size = 12;
    int channels = 1;
    // file-backed datasets
    std::string path;
    std::string labels_path;

    void validate() const;
};

struct Sample {
    std::vector<int> tokens;    // text: token ids, true length (no padding)
    std::vector<double> image;  // vision: C*H*W in [0, 1]
    int label = 0;
};

struct Dataset {
    DatasetSpec spec;
    std::vector<Sample> samples;
    int image_size = 0;
    int channels = 0;

    std::size_t size() const { return samples.size(); }
};

// Token-id layout of the synthetic text task. Every class owns a disjoint
// block of signal tokens; distractors are shared filler. A sample is
// `kSignalPerSample` signal tokens at random positions among distractors, and
// spurious noise replaces any position with a random distractor.
constexpr int kPadToken = 0;
constexpr int kUnkToken = 1;
constexpr int kSignalVocabPerClass = 8;
constexpr int kDistractorVocab = 32;
constexpr int kSignalPerSample = 4;

int synth_text_vocab_span(int n_classes);  // smallest valid vocab_size

Dataset synth_token_task(const DatasetSpec& spec);
Dataset synth_patch_task(const DatasetSpec& spec);

// Class-template geometry for the synthetic vision task: pixel = 0.1 + 0.8*mask,
// then gaussian noise, then clamp to [0, 1].
std::vector<double> vision_template(int cls, int image_size);
double vision_template_energy(int cls, int image_size);

void inject_gaussian_noise(std::vector<double>& image, double sigma, Rng& rng);

// Plurality vote over class signal-token counts; ties go to the lowest class.
int counting_oracle_predict(const std::vector<int>& tokens, int n_classes);
double counting_oracle_accuracy(const Dataset& ds);

// Nearest clean template in squared L2.
int template_oracle_predict(const std::vector<double>& image, int n_classes, int image_size);
double template_oracle_accuracy(const Dataset& ds);

// ---- IDX binary format (big-endian, standard magic numbers) ---------------

struct IdxImages {
    int count = 0, rows = 0, cols = 0;
    std::vector<std::uint8_t> pixels;  // count*rows*cols
};

IdxImages read_idx_images(const std::string& path);
std::vector<int> read_idx_labels(const std::string& path);
void write_idx_images(const std::string& path, const IdxImages& im);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

Dataset load_idx(const std::string& images_path, const std::string& labels_path, int n_classes,
                 NoiseKind noise, double noise_level, std::uint64_t seed);

// ---- text files and vocabulary ---------------------------------------------

// One sample per line, `label<TAB>text`, UTF-8.
struct TextCorpus {
    std::vector<int> labels;
    std::vector<std::string> texts;
};

TextCorpus read_tsv_corpus(const std::string& path);
void write_tsv_corpus(const std::string& path, const TextCorpus& corpus);

// Frequency-ranked vocabulary with reserved ids 0=PAD, 1=UNK. Tokens below
// min_freq map to UNK; size capped by rank with lexicographic tie-break.
struct Vocab {
    std::vector<std::string> id_to_token;         // includes <pad>, <unk>
    std::map<std::string, int> token_to_id;

    int size() const { return static_cast<int>(id_to_token.size()); }
    int lookup(const std::string& tok) const;
};

std::vector<std::string> tokenize(const std::string& text);
Vocab build_vocab(const std::vector<std::string>& corpus, int min_freq, int max_size);

Dataset load_tsv(const std::string& path, const Vocab& vocab, int n_classes, int max_len,
                 NoiseKind noise, double noise_level, std::uint64_t seed);

// Renders a synthetic text dataset to token words ("sig<c>_<j>" / "flr<j>")
// so it round-trips through the TSV format and vocabulary builder.
TextCorpus render_synth_text(const Dataset& ds);

}  // namespace dgsa

// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace dgsa {

void DatasetSpec::validate() const {
    if (size <= 0) throw ConfigError("dataset: size must be positive");
    if (n_classes < 2) throw ConfigError("dataset: need at least 2 classes");
    if (noise == NoiseKind::gaussian && noise_level < 0.0)
        throw ConfigError("dataset: gaussian sigma must be >= 0");
    if (noise == NoiseKind::spurious_tokens && (noise_level < 0.0 || noise_level >= 1.0))
        throw ConfigError("dataset: spurious-token rate must satisfy 0 <= rate < 1");
    if (kind == DataKind::synth_text && seq_len < kSignalPerSample)
        throw ConfigError("dataset: seq_len must fit " + std::to_string(kSignalPerSample) +
                          " signal tokens");
    if (kind == DataKind::synth_vision && n_classes > 8)
        throw ConfigError("dataset: synthetic vision task defines 8 templates");
    if (min_token_freq < 1) throw ConfigError("dataset: min_token_freq must be >= 1");
    if (max_vocab < 1) throw ConfigError("dataset: max_vocab must be >= 1");
}

int synth_text_vocab_span(int n_classes) {
    return 2 + kSignalVocabPerClass * n_classes + kDistractorVocab;
}

namespace {

int distractor_base(int n_classes) { return 2 + kSignalVocabPerClass * n_classes; }

int random_distractor(Rng& rng, int n_classes) {
    return distractor_base(n_classes) + static_cast<int>(rng.uniform_index(kDistractorVocab));
}

}  // namespace

Dataset synth_token_task(const DatasetSpec& spec) {
    spec.validate();
    if (spec.kind != DataKind::synth_text) throw ConfigError("synth_token_task: wrong dataset kind");
    // capacity check: every class needs its own signal block
    if (spec.max_vocab < kSignalVocabPerClass * spec.n_classes + kDistractorVocab)
        throw ConfigError("synth_token_task: " + std::to_string(spec.n_classes) +
                          " classes need a content vocabulary of at least " +
                          std::to_string(kSignalVocabPerClass * spec.n_classes + kDistractorVocab) +
                          ", max_vocab is " + std::to_string(spec.max_vocab));

    Rng rng(hash_combine(spec.seed, 0x746F6B656EULL));
    Dataset ds;
    ds.spec = spec;
    ds.samples.reserve(spec.size);
    const double rate = spec.noise == NoiseKind::spurious_tokens ? spec.noise_level : 0.0;

    for (int s = 0; s < spec.size; ++s) {
        Sample sample;
        sample.label = s % spec.n_classes;  // balanced classes by construction
        sample.tokens.assign(spec.seq_len, 0);
        for (int t = 0; t < spec.seq_len; ++t)
            sample.tokens[t] = random_distractor(rng, spec.n_classes);
        // k distinct signal positions
        std::vector<std::size_t> pos = rng.permutation(spec.seq_len);
        for (int k = 0; k < kSignalPerSample; ++k) {
            const int tok = 2 + sample.label * kSignalVocabPerClass +
                            static_cast<int>(rng.uniform_index(kSignalVocabPerClass));
            sample.tokens[pos[k]] = tok;
        }
        // spurious corruption: any position may turn into a random distractor
        for (int t = 0; t < spec.seq_len; ++t)
            if (rate > 0.0 && rng.uniform() < rate)
                sample.tokens[t] = random_distractor(rng, spec.n_classes);
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

std::vector<double> vision_template(int cls, int g) {
    if (cls < 0 || cls >= 8) throw ConfigError("vision template: class out of range [0, 8)");
    std::vector<double> mask(static_cast<std::size_t>(g) * g, 0.0);
    auto at = [&](int r, int c) -> double& { return mask[static_cast<std::size_t>(r) * g + c]; };
    const int mid = g / 2;
    switch (cls) {
        case 0:  // horizontal center bar
            for (int c = 0; c < g; ++c) at(mid - 1, c) = at(mid, c) = 1.0;
            break;
        case 1:  // vertical center bar
            for (int r = 0; r < g; ++r) at(r, mid - 1) = at(r, mid) = 1.0;
            break;
        case 2:  // main diagonal band
            for (int r = 0; r < g; ++r)
                for (int c = 0; c < g; ++c)
                    if (std::abs(r - c) <= 1) at(r, c) = 1.0;
            break;
        case 3:  // anti-diagonal band
            for (int r = 0; r < g; ++r)
                for (int c = 0; c < g; ++c)
                    if (std::abs(r + c - (g - 1)) <= 1) at(r, c) = 1.0;
            break;
        case 4:  // border ring
            for (int r = 0; r < g; ++r)
                for (int c = 0; c < g; ++c)
                    if (r == 0 || c == 0 || r == g - 1 || c == g - 1) at(r, c) = 1.0;
            break;
        case 5:  // centered square block
            for (int r = g / 4; r < g - g / 4; ++r)
                for (int c = g / 4; c < g - g / 4; ++c) at(r, c) = 1.0;
            break;
        case 6:  // top-left quadrant
            for (int r = 0; r < mid; ++r)
                for (int c = 0; c < mid; ++c) at(r, c) = 1.0;
            break;
        case 7:  // bottom-right quadrant
            for (int r = mid; r < g; ++r)
                for (int c = mid; c < g; ++c) at(r, c) = 1.0;
            break;
    }
    for (auto& v : mask) v = 0.1 + 0.8 * v;
    return mask;
}

double vision_template_energy(int cls, int image_size) {
    // contrast energy above the 0.1 background
    const auto t = vision_template(cls, image_size);
    double e = 0.0;
    for (double v : t) e += (v - 0.1) * (v - 0.1);
    return e;
}

void inject_gaussian_noise(std::vector<double>& image, double sigma, Rng& rng) {
    if (sigma < 0.0) throw ConfigError("gaussian noise: sigma must be >= 0");
    if (sigma == 0.0) return;
    for (auto& v : image) v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
}

Dataset synth_patch_task(const DatasetSpec& spec) {
    spec.validate();
    if (spec.kind != DataKind::synth_vision)
        throw ConfigError("synth_patch_task: wrong dataset kind");
    if (spec.channels != 1) throw ConfigError("synth_patch_task: single-channel templates only");
    const double sigma = spec.noise == NoiseKind::gaussian ? spec.noise_level : 0.0;

    Rng rng(hash_combine(spec.seed, 0x7061746368ULL));
    Dataset ds;
    ds.spec = spec;
    ds.image_size = spec.image_size;
    ds.channels = 1;
    for (int s = 0; s < spec.size; ++s) {
        Sample sample;
        sample.label = s % spec.n_classes;
        sample.image = vision_template(sample.label, spec.image_size);
        inject_gaussian_noise(sample.image, sigma, rng);
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

int counting_oracle_predict(const std::vector<int>& tokens, int n_classes) {
    std::vector<int> counts(n_classes, 0);
    for (int tok : tokens) {
        const int rel = tok - 2;
        if (rel >= 0 && rel < kSignalVocabPerClass * n_classes) ++counts[rel / kSignalVocabPerClass];
    }
    int best = 0;
    for (int c = 1; c < n_classes; ++c)
        if (counts[c] > counts[best]) best = c;  // ties keep the lowest class
    return best;
}

double counting_oracle_accuracy(const Dataset& ds) {
    if (ds.samples.empty()) throw UsageError("oracle accuracy: empty dataset");
    std::size_t hits = 0;
    for (const auto& s : ds.samples)
        if (counting_oracle_predict(s.tokens, ds.spec.n_classes) == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.samples.size());
}

int template_oracle_predict(const std::vector<double>& image, int n_classes, int image_size) {
    int best = 0;
    double best_d = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        const auto t = vision_template(c, image_size);
        double d = 0.0;
        for (std::size_t i = 0; i < image.size(); ++i) d += (image[i] - t[i]) * (image[i] - t[i]);
        if (c == 0 || d < best_d) {
            best = c;
            best_d = d;
        }
    }
    return best;
}

double template_oracle_accuracy(const Dataset& ds) {
    if (ds.samples.empty()) throw UsageError("oracle accuracy: empty dataset");
    std::size_t hits = 0;
    for (const auto& s : ds.samples)
        if (template_oracle_predict(s.image, ds.spec.n_classes, ds.image_size) == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.samples.size());
}

// ---- IDX -------------------------------------------------------------------

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path, std::size_t offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw DataError("idx: " + path + " truncated at byte offset " + std::to_string(offset));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("idx: cannot open " + path);
    const std::uint32_t magic = read_be32(in, path, 0);
    if (magic != kIdxImagesMagic) {
        std::ostringstream os;
        os << "idx: " << path << " has bad image magic 0x" << std::hex << magic
           << " at byte offset 0";
        throw DataError(os.str());
    }
    IdxImages im;
    im.count = static_cast<int>(read_be32(in, path, 4));
    im.rows = static_cast<int>(read_be32(in, path, 8));
    im.cols = static_cast<int>(read_be32(in, path, 12));
    const std::size_t n =
        static_cast<std::size_t>(im.count) * static_cast<std::size_t>(im.rows) * im.cols;
    im.pixels.resize(n);
    in.read(reinterpret_cast<char*>(im.pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw DataError("idx: " + path + " truncated at byte offset " +
                        std::to_string(16 + in.gcount()));
    return im;
}

std::vector<int> read_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("idx: cannot open " + path);
    const std::uint32_t magic = read_be32(in, path, 0);
    if (magic != kIdxLabelsMagic) {
        std::ostringstream os;
        os << "idx: " << path << " has bad label magic 0x" << std::hex << magic
           << " at byte offset 0";
        throw DataError(os.str());
    }
    const std::uint32_t count = read_be32(in, path, 4);
    std::vector<std::uint8_t> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), count);
    if (static_cast<std::uint32_t>(in.gcount()) != count)
        throw DataError("idx: " + path + " truncated at byte offset " +
                        std::to_string(8 + in.gcount()));
    return std::vector<int>(raw.begin(), raw.end());
}

void write_idx_images(const std::string& path, const IdxImages& im) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("idx: cannot write " + path);
    write_be32(out, kIdxImagesMagic);
    write_be32(out, static_cast<std::uint32_t>(im.count));
    write_be32(out, static_cast<std::uint32_t>(im.rows));
    write_be32(out, static_cast<std::uint32_t>(im.cols));
    out.write(reinterpret_cast<const char*>(im.pixels.data()),
              static_cast<std::streamsize>(im.pixels.size()));
    if (!out) throw IoError("idx: short write to " + path);
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("idx: cannot write " + path);
    write_be32(out, kIdxLabelsMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) {
        const unsigned char b = static_cast<unsigned char>(l);
        out.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!out) throw IoError("idx: short write to " + path);
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, int n_classes,
                 NoiseKind noise, double noise_level, std::uint64_t seed) {
    IdxImages im = read_idx_images(images_path);
    std::vector<int> labels = read_idx_labels(labels_path);
    if (static_cast<int>(labels.size()) != im.count)
        throw DataError("idx: " + std::to_string(im.count) + " images but " +
                        std::to_string(labels.size()) + " labels");
    if (im.rows != im.cols) throw DataError("idx: only square images are supported");

    Rng rng(hash_combine(seed, 0x696478ULL));
    Dataset ds;
    ds.spec.kind = DataKind::idx_images;
    ds.spec.size = im.count;
    ds.spec.n_classes = n_classes;
    ds.spec.noise = noise;
    ds.spec.noise_level = noise_level;
    ds.spec.seed = seed;
    ds.image_size = im.rows;
    ds.channels = 1;
    const std::size_t px = static_cast<std::size_t>(im.rows) * im.cols;
    for (int i = 0; i < im.count; ++i) {
        if (labels[i] < 0 || labels[i] >= n_classes)
            throw DataError("idx: label " + std::to_string(labels[i]) + " at sample " +
                            std::to_string(i) + " out of range [0, " + std::to_string(n_classes) +
                            ")");
        Sample s;
        s.label = labels[i];
        s.image.resize(px);
        for (std::size_t j = 0; j < px; ++j)
            s.image[j] = static_cast<double>(im.pixels[static_cast<std::size_t>(i) * px + j]) / 255.0;
        if (noise == NoiseKind::gaussian) inject_gaussian_noise(s.image, noise_level, rng);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

// ---- text -------------------------------------------------------------------

TextCorpus read_tsv_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("tsv: cannot open " + path);
    TextCorpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("tsv: " + path + " line " + std::to_string(lineno) + " has no tab");
        int label;
        try {
            label = std::stoi(line.substr(0, tab));
        } catch (const std::exception&) {
            throw DataError("tsv: " + path + " line " + std::to_string(lineno) + " has a bad label");
        }
        corpus.labels.push_back(label);
        corpus.texts.push_back(line.substr(tab + 1));
    }
    return corpus;
}

void write_tsv_corpus(const std::string& path, const TextCorpus& corpus) {
    std::ofstream out(path);
    if (!out) throw IoError("tsv: cannot write " + path);
    for (std::size_t i = 0; i < corpus.texts.size(); ++i)
        out << corpus.labels[i] << '\t' << corpus.texts[i] << '\n';
    if (!out) throw IoError("tsv: short write to " + path);
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const unsigned char u = static_cast<unsigned char>(ch);
        if (std::isalnum(u) || ch == '_') {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

int Vocab::lookup(const std::string& tok) const {
    auto it = token_to_id.find(tok);
    return it == token_to_id.end() ? kUnkToken : it->second;
}

Vocab build_vocab(const std::vector<std::string>& corpus, int min_freq, int max_size) {
    if (min_freq < 1) throw ConfigError("vocab: min_freq must be >= 1");
    if (max_size < 1) throw ConfigError("vocab: max_size must be >= 1");
    std::map<std::string, long long> freq;
    for (const auto& text : corpus)
        for (const auto& tok : tokenize(text)) ++freq[tok];

    std::vector<std::pair<std::string, long long>> ranked(freq.begin(), freq.end());
    // by descending frequency, lexicographic tie-break
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    // max_size caps content tokens; the PAD/UNK reservations do not count
    Vocab v;
    v.id_to_token = {"<pad>", "<unk>"};
    for (const auto& [tok, count] : ranked) {
        if (count < min_freq) break;
        if (v.size() - 2 >= max_size) break;
        v.id_to_token.push_back(tok);
    }
    for (int i = 0; i < v.size(); ++i) v.token_to_id[v.id_to_token[i]] = i;
    return v;
}

Dataset load_tsv(const std::string& path, const Vocab& vocab, int n_classes, int max_len,
                 NoiseKind noise, double noise_level, std::uint64_t seed) {
    TextCorpus corpus = read_tsv_corpus(path);
    Rng rng(hash_combine(seed, 0x747376ULL));
    Dataset ds;
    ds.spec.kind = DataKind::csv_text;
    ds.spec.size = static_cast<int>(corpus.texts.size());
    ds.spec.n_classes = n_classes;
    ds.spec.noise = noise;
    ds.spec.noise_level = noise_level;
    ds.spec.seed = seed;
    for (std::size_t i = 0; i < corpus.texts.size(); ++i) {
        if (corpus.labels[i] < 0 || corpus.labels[i] >= n_classes)
            throw DataError("tsv: label " + std::to_string(corpus.labels[i]) + " at line " +
                            std::to_string(i + 1) + " out of range");
        Sample s;
        s.label = corpus.labels[i];
        for (const auto& tok : tokenize(corpus.texts[i])) {
            if (static_cast<int>(s.tokens.size()) >= max_len) break;
            int id = vocab.lookup(tok);
            if (noise == NoiseKind::spurious_tokens && rng.uniform() < noise_level && vocab.size() > 2)
                id = 2 + static_cast<int>(rng.uniform_index(vocab.size() - 2));
            s.tokens.push_back(id);
        }
        if (s.tokens.empty()) s.tokens.push_back(kUnkToken);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

TextCorpus render_synth_text(const Dataset& ds) {
    const int n_classes = ds.spec.n_classes;
    TextCorpus corpus;
    for (const auto& s : ds.samples) {
        std::ostringstream os;
        for (std::size_t t = 0; t < s.tokens.size(); ++t) {
            if (t) os << ' ';
            const int tok = s.tokens[t];
            const int rel = tok - 2;
            if (rel >= 0 && rel < kSignalVocabPerClass * n_classes)
                os << "sig" << rel / kSignalVocabPerClass << '_' << rel % kSignalVocabPerClass;
            else if (rel >= 0)
                os << "flr" << rel - kSignalVocabPerClass * n_classes;
            else
                os << (tok == kPadToken ? "<pad>" : "<unk>");
        }
        corpus.labels.push_back(s.label);
        corpus.texts.push_back(os.str());
    }
    return corpus;
}

}  // namespace dgsa

// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "runconfig.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "checkpoint.hpp"

namespace dgsa {

namespace {

long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        if (!std::isfinite(out)) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

std::string render_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

using Validator = std::function<void(const std::string& key, const std::string& value)>;

Validator int_range(long long lo, long long hi) {
    return [lo, hi](const std::string& key, const std::string& v) {
        const long long x = parse_int(key, v);
        if (x < lo || x > hi)
            throw ConfigError("config: key '" + key + "' must lie in [" + std::to_string(lo) +
                              ", " + std::to_string(hi) + "], got '" + v + "'");
    };
}

Validator real_range(double lo, double hi, bool lo_open = false, bool hi_open = false) {
    return [lo, hi, lo_open, hi_open](const std::string& key, const std::string& v) {
        const double x = parse_double(key, v);
        const bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
        if (!ok) throw ConfigError("config: key '" + key + "' out of range, got '" + v + "'");
    };
}

Validator choice(std::vector<std::string> options) {
    return [options = std::move(options)](const std::string& key, const std::string& v) {
        if (std::find(options.begin(), options.end(), v) == options.end()) {
            std::string opts;
            for (const auto& o : options) opts += (opts.empty() ? "" : "|") + o;
            throw ConfigError("config: key '" + key + "' must be one of " + opts + ", got '" + v +
                              "'");
        }
    };
}

Validator any_string() {
    return [](const std::string&, const std::string&) {};
}

struct KeyDef {
    std::string name;
    bool model_structural;
    Validator validate;
    // default may depend on other (already defaulted) keys: variant and task
    std::function<std::string(const RunConfig&)> default_value;
};

const std::vector<KeyDef>& schema() {
    static const std::vector<KeyDef> defs = [] {
        std::vector<KeyDef> s;
        auto constant = [](const char* v) {
            return [v](const RunConfig&) { return std::string(v); };
        };
        // model (structural)
        s.push_back({"variant", true, choice({"vanilla", "diff", "dgsa"}), constant("dgsa")});
        s.push_back({"task", true, choice({"text", "vision"}), constant("text")});
        s.push_back({"depth", true, int_range(1, 1000), constant("2")});
        s.push_back({"d_model", true, int_range(2, 65536), constant("64")});
        s.push_back({"heads", true, int_range(1, 1024), constant("4")});
        s.push_back({"ffn_expansion", true, choice({"2", "4", "16/3"}),
                     [](const RunConfig& c) {
                         return c.get("variant") == "vanilla" ? "4" : "2";
                     }});
        s.push_back({"ffn_activation", true, choice({"swiglu", "gelu"}),
                     [](const RunConfig& c) {
                         return c.get("variant") == "vanilla" ? "gelu" : "swiglu";
                     }});
        s.push_back({"residual_in_attention", true, choice({"0", "1"}),
                     [](const RunConfig& c) { return c.get("task") == "vision" ? "1" : "0"; }});
        s.push_back({"residual_source", true, choice({"qproj", "input"}), constant("qproj")});
        s.push_back({"lambda_init_mode", true, choice({"schedule", "fixed"}), constant("schedule")});
        // the gate is a single linear layer + sigmoid; the schema refuses depth > 1
        s.push_back({"gate_depth", true, choice({"1"}), constant("1")});
        s.push_back({"vocab_size", true, int_range(4, 10000000), constant("64")});
        s.push_back({"max_seq_len", true, int_range(1, 100000), constant("16")});
        s.push_back({"image_size", true, int_range(1, 8192), constant("12")});
        s.push_back({"patch_size", true, int_range(1, 8192), constant("4")});
        s.push_back({"channels", true, int_range(1, 16), constant("1")});
        s.push_back({"n_classes", true, int_range(2, 100000), constant("2")});
        // model (behavioral only)
        s.push_back({"dropout_p", false, real_range(0.0, 1.0, false, true), constant("0.1")});
        s.push_back({"n_dropout_layers", false, choice({"1", "2"}), constant("1")});
        // training
        s.push_back({"epochs", false, int_range(1, 1000000), constant("10")});
        s.push_back({"batch_size", false, int_range(1, 1000000), constant("32")});
        s.push_back({"lr", false, real_range(0.0, 1e6, true, false), constant("0.0003")});
        s.push_back({"beta1", false, real_range(0.0, 1.0, true, true), constant("0.9")});
        s.push_back({"beta2", false, real_range(0.0, 1.0, true, true), constant("0.999")});
        s.push_back({"adam_eps", false, real_range(0.0, 1.0, true, false), constant("1e-08")});
        s.push_back({"weight_decay", false, real_range(0.0, 10.0), constant("0.01")});
        s.push_back({"lr_schedule", false, choice({"cosine", "warmup_linear"}),
                     [](const RunConfig& c) {
                         return c.get("task") == "vision" ? "cosine" : "warmup_linear";
                     }});
        s.push_back({"warmup_steps", false, int_range(0, 1000000000), constant("1000")});
        s.push_back({"lr_min", false, real_range(0.0, 1e6), constant("0")});
        s.push_back({"clip_norm", false, real_range(0.0, 1e6),
                     [](const RunConfig& c) { return c.get("task") == "vision" ? "0" : "1"; }});
        s.push_back({"seed", false, int_range(0, INT64_MAX), constant("0")});
        // data
        s.push_back({"data_kind", false, choice({"synth_text", "synth_vision", "idx", "csv"}),
                     [](const RunConfig& c) {
                         return c.get("task") == "vision" ? "synth_vision" : "synth_text";
                     }});
        s.push_back({"data_size", false, int_range(1, 100000000), constant("512")});
        s.push_back({"eval_size", false, int_range(1, 100000000), constant("256")});
        s.push_back({"noise_kind", false, choice({"none", "gaussian", "spurious"}),
                     constant("none")});
        s.push_back({"noise_level", false, real_range(0.0, 1e6), constant("0")});
        s.push_back({"seq_len", false, int_range(1, 100000), constant("12")});
        s.push_back({"min_token_freq", false, int_range(1, 1000000), constant("2")});
        s.push_back({"max_vocab", false, int_range(1, 10000000), constant("60000")});
        s.push_back({"data_path", false, any_string(), constant("")});
        s.push_back({"labels_path", false, any_string(), constant("")});
        s.push_back({"eval_path", false, any_string(), constant("")});
        s.push_back({"eval_labels_path", false, any_string(), constant("")});
        // output
        s.push_back({"out_dir", false, any_string(), constant("out")});
        std::sort(s.begin(), s.end(),
                  [](const KeyDef& a, const KeyDef& b) { return a.name < b.name; });
        return s;
    }();
    return defs;
}

const KeyDef* find_key(const std::string& name) {
    for (const auto& def : schema())
        if (def.name == name) return &def;
    return nullptr;
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& def : schema()) k.push_back(def.name);
        return k;
    }();
    return keys;
}

bool RunConfig::is_model_key(const std::string& key) {
    const KeyDef* def = find_key(key);
    return def != nullptr && def->model_structural;
}

RunConfig RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config: cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " is not of the form key=value: '" + line + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const KeyDef* def = find_key(key);
    if (!def) throw ConfigError("config: unknown key '" + key + "'");
    def->validate(key, value);
    values_[key] = value;
}

std::string RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    const KeyDef* def = find_key(key);
    if (!def) throw ConfigError("config: unknown key '" + key + "'");
    return def->default_value(*this);
}

std::string RunConfig::canonical_text() const {
    std::ostringstream os;
    for (const auto& def : schema()) {
        std::string v = get(def.name);
        // normalize numeric spellings so equal configs hash equally
        if (def.name != "ffn_expansion" && !v.empty() &&
            v.find_first_not_of("0123456789+-.eE") == std::string::npos) {
            long long i = 0;
            const auto ires = std::from_chars(v.data(), v.data() + v.size(), i);
            if (ires.ec == std::errc() && ires.ptr == v.data() + v.size()) {
                v = std::to_string(i);
            } else {
                try {
                    std::size_t pos = 0;
                    const double d = std::stod(v, &pos);
                    if (pos == v.size()) v = render_double(d);
                } catch (const std::exception&) {
                    // non-numeric value, keep as-is
                }
            }
        }
        os << def.name << '=' << v << '\n';
    }
    return os.str();
}

std::string RunConfig::canonical_model_text() const {
    std::istringstream in(canonical_text());
    std::ostringstream os;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos && is_model_key(line.substr(0, eq))) os << line << '\n';
    }
    return os.str();
}

std::uint64_t RunConfig::config_hash() const { return fnv1a64(canonical_text()); }
std::uint64_t RunConfig::model_hash() const { return fnv1a64(canonical_model_text()); }

void RunConfig::merge_overrides(const RunConfig& other) {
    for (const auto& [k, v] : other.values_) set(k, v);
}

ModelConfig RunConfig::model() const {
    ModelConfig m;
    const std::string variant = get("variant");
    m.variant = variant == "vanilla" ? Variant::vanilla
                : variant == "diff"  ? Variant::diff
                                     : Variant::dgsa;
    m.task = get("task") == "vision" ? Task::vision : Task::text;
    m.depth = static_cast<int>(parse_int("depth", get("depth")));
    m.d_model = static_cast<int>(parse_int("d_model", get("d_model")));
    m.heads = static_cast<int>(parse_int("heads", get("heads")));
    const std::string exp = get("ffn_expansion");
    m.ffn_expansion = exp == "2" ? 2.0 : exp == "4" ? 4.0 : 16.0 / 3.0;
    m.ffn_activation =
        get("ffn_activation") == "gelu" ? FfnActivation::gelu : FfnActivation::swiglu;
    m.dropout_p = parse_double("dropout_p", get("dropout_p"));
    m.n_dropout_layers = static_cast<int>(parse_int("n_dropout_layers", get("n_dropout_layers")));
    m.residual_in_attention = get("residual_in_attention") == "1";
    m.residual_source =
        get("residual_source") == "input" ? ResidualSource::input : ResidualSource::qproj;
    m.lambda_fixed = get("lambda_init_mode") == "fixed";
    m.gate_depth = static_cast<int>(parse_int("gate_depth", get("gate_depth")));
    m.n_classes = static_cast<int>(parse_int("n_classes", get("n_classes")));
    m.vocab_size = static_cast<int>(parse_int("vocab_size", get("vocab_size")));
    m.max_seq_len = static_cast<int>(parse_int("max_seq_len", get("max_seq_len")));
    m.image_size = static_cast<int>(parse_int("image_size", get("image_size")));
    m.patch_size = static_cast<int>(parse_int("patch_size", get("patch_size")));
    m.channels = static_cast<int>(parse_int("channels", get("channels")));
    m.validate();
    return m;
}

TrainConfig RunConfig::train() const {
    TrainConfig t;
    t.epochs = static_cast<int>(parse_int("epochs", get("epochs")));
    t.batch_size = static_cast<int>(parse_int("batch_size", get("batch_size")));
    t.lr = parse_double("lr", get("lr"));
    t.beta1 = parse_double("beta1", get("beta1"));
    t.beta2 = parse_double("beta2", get("beta2"));
    t.adam_eps = parse_double("adam_eps", get("adam_eps"));
    t.weight_decay = parse_double("weight_decay", get("weight_decay"));
    t.schedule =
        get("lr_schedule") == "cosine" ? LrSchedule::cosine : LrSchedule::warmup_linear;
    t.warmup_steps = parse_int("warmup_steps", get("warmup_steps"));
    t.lr_min = parse_double("lr_min", get("lr_min"));
    t.clip_norm = parse_double("clip_norm", get("clip_norm"));
    t.seed = static_cast<std::uint64_t>(parse_int("seed", get("seed")));
    return t;
}

DatasetSpec RunConfig::dataset(bool eval_split) const {
    DatasetSpec d;
    const std::string kind = get("data_kind");
    d.kind = kind == "synth_vision" ? DataKind::synth_vision
             : kind == "idx"        ? DataKind::idx_images
             : kind == "csv"        ? DataKind::csv_text
                                    : DataKind::synth_text;
    d.size = static_cast<int>(parse_int(eval_split ? "eval_size" : "data_size",
                                        get(eval_split ? "eval_size" : "data_size")));
    d.n_classes = static_cast<int>(parse_int("n_classes", get("n_classes")));
    const std::string noise = get("noise_kind");
    d.noise = noise == "gaussian"   ? NoiseKind::gaussian
              : noise == "spurious" ? NoiseKind::spurious_tokens
                                    : NoiseKind::none;
    d.noise_level = parse_double("noise_level", get("noise_level"));
    const std::uint64_t seed = static_cast<std::uint64_t>(parse_int("seed", get("seed")));
    // the eval split draws from a derived stream so it never repeats training samples
    d.seed = eval_split ? hash_combine(seed, 0x6576616CULL) : seed;
    d.seq_len = static_cast<int>(parse_int("seq_len", get("seq_len")));
    d.min_token_freq = static_cast<int>(parse_int("min_token_freq", get("min_token_freq")));
    d.max_vocab = static_cast<int>(parse_int("max_vocab", get("max_vocab")));
    d.image_size = static_cast<int>(parse_int("image_size", get("image_size")));
    d.channels = static_cast<int>(parse_int("channels", get("channels")));
    d.path = get(eval_split ? "eval_path" : "data_path");
    d.labels_path = get(eval_split ? "eval_labels_path" : "labels_path");
    d.validate();
    return d;
}

}  // namespace dgsa

/*
 * Copyright 2026 The GPCL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gpcl/core/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace gpcl {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::MalformedLine: return "MalformedLine";
        case ErrorCode::IdOutOfRange: return "IdOutOfRange";
        case ErrorCode::DuplicatePair: return "DuplicatePair";
        case ErrorCode::OverlappingSplits: return "OverlappingSplits";
        case ErrorCode::NoNegativeAvailable: return "NoNegativeAvailable";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::EmptySampleList: return "EmptySampleList";
        case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::NumericOverflow: return "NumericOverflow";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::UnknownConfigKey: return "UnknownConfigKey";
        case ErrorCode::InvalidConfigValue: return "InvalidConfigValue";
    }
    return "Unknown";
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    fail(ErrorCode::InvalidConfigValue,
         "invalid value '" + value + "' for " + key + " (expected " + expected + ")");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
        bad_value(key, v, "a finite real");
    }
    return out;
}

long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

int parse_i32(const std::string& key, const std::string& v) {
    const long long x = parse_int(key, v);
    if (x < INT32_MIN || x > INT32_MAX) bad_value(key, v, "a 32-bit integer");
    return static_cast<int>(x);
}

std::uint32_t parse_u32(const std::string& key, const std::string& v) {
    const long long x = parse_int(key, v);
    if (x < 0 || x > UINT32_MAX) bad_value(key, v, "a nonnegative 32-bit integer");
    return static_cast<std::uint32_t>(x);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "true/false");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream in(v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        out.push_back(parse_i32(key, tok));
    }
    if (out.empty()) bad_value(key, v, "a comma-separated integer list");
    return out;
}

std::string join(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

struct Field {
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
};

template <class T>
Field real_field(T RunConfig::*section, double T::*member) {
    return {[=](const RunConfig& c) { return format_double(c.*section.*member); },
            [=](RunConfig& c, const std::string& k, const std::string& v) { c.*section.*member = parse_real(k, v); }};
}

template <class T>
Field int_field(T RunConfig::*section, int T::*member) {
    return {[=](const RunConfig& c) { return std::to_string(c.*section.*member); },
            [=](RunConfig& c, const std::string& k, const std::string& v) { c.*section.*member = parse_i32(k, v); }};
}

template <class T>
Field bool_field(T RunConfig::*section, bool T::*member) {
    return {[=](const RunConfig& c) { return std::string(c.*section.*member ? "true" : "false"); },
            [=](RunConfig& c, const std::string& k, const std::string& v) { c.*section.*member = parse_bool(k, v); }};
}

template <class T>
Field u32_field(T RunConfig::*section, std::uint32_t T::*member) {
    return {[=](const RunConfig& c) { return std::to_string(c.*section.*member); },
            [=](RunConfig& c, const std::string& k, const std::string& v) { c.*section.*member = parse_u32(k, v); }};
}

template <class T>
Field u64_field(T RunConfig::*section, std::uint64_t T::*member) {
    return {[=](const RunConfig& c) { return std::to_string(c.*section.*member); },
            [=](RunConfig& c, const std::string& k, const std::string& v) { c.*section.*member = parse_u64(k, v); }};
}

template <class E>
Field enum_field(E ModelConfig::*member, std::vector<std::pair<E, std::string>> names) {
    return {[=](const RunConfig& c) {
                for (const auto& [e, n] : names)
                    if (c.model.*member == e) return n;
                return std::string("?");
            },
            [=](RunConfig& c, const std::string& k, const std::string& v) {
                std::string expected;
                for (const auto& [e, n] : names) {
                    if (v == n) {
                        c.model.*member = e;
                        return;
                    }
                    expected += (expected.empty() ? "" : "|") + n;
                }
                bad_value(k, v, expected.c_str());
            }};
}

const std::map<std::string, Field>& registry() {
    static const std::map<std::string, Field> fields = [] {
        std::map<std::string, Field> f;
        f["data.dir"] = {[](const RunConfig& c) { return c.data_dir; },
                         [](RunConfig& c, const std::string&, const std::string& v) { c.data_dir = v; }};

        f["model.dim"] = int_field(&RunConfig::model, &ModelConfig::dim);
        f["model.dim_override"] = int_field(&RunConfig::model, &ModelConfig::dim_override);
        f["model.layers"] = int_field(&RunConfig::model, &ModelConfig::layers);
        f["model.combine"] = enum_field<LayerCombine>(
            &ModelConfig::combine, {{LayerCombine::LastLayer, "last"}, {LayerCombine::MeanWithLayer0, "mean"}});
        f["model.share_level0"] = bool_field(&RunConfig::model, &ModelConfig::share_level0);
        f["model.disable_gaussian"] = bool_field(&RunConfig::model, &ModelConfig::disable_gaussian);
        f["model.disable_proto"] = bool_field(&RunConfig::model, &ModelConfig::disable_proto);
        f["model.mean_scale"] = {
            [](const RunConfig& c) { return format_double(c.model.init.mean_scale); },
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.init.mean_scale = parse_real(k, v); }};
        f["model.raw_var_init"] = {
            [](const RunConfig& c) { return format_double(c.model.init.raw_var_init); },
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.init.raw_var_init = parse_real(k, v); }};
        f["model.edge_dropout"] = real_field(&RunConfig::model, &ModelConfig::edge_dropout);
        f["model.user_prototypes"] = int_field(&RunConfig::model, &ModelConfig::user_prototypes);
        f["model.bundle_prototypes"] = int_field(&RunConfig::model, &ModelConfig::bundle_prototypes);
        f["model.proto_scope"] = enum_field<ProtoScope>(
            &ModelConfig::proto_scope, {{ProtoScope::FullNodeSet, "full"}, {ProtoScope::InBatch, "batch"}});
        f["model.proto_input"] = enum_field<ProtoInput>(
            &ModelConfig::proto_input,
            {{ProtoInput::Level0, "level0"}, {ProtoInput::BundleView, "bundle_view"}, {ProtoInput::ItemView, "item_view"}});
        f["model.refresh_every"] = int_field(&RunConfig::model, &ModelConfig::refresh_every);
        f["model.cl_negatives"] = enum_field<ClNegatives>(
            &ModelConfig::cl_negatives, {{ClNegatives::InBatch, "batch"}, {ClNegatives::Full, "full"}});
        f["model.samples"] = int_field(&RunConfig::loss, &LossWeights::samples);

        f["loss.tau"] = real_field(&RunConfig::loss, &LossWeights::tau);
        f["loss.gamma_cl"] = real_field(&RunConfig::loss, &LossWeights::gamma_cl);
        f["loss.gamma_pcl"] = real_field(&RunConfig::loss, &LossWeights::gamma_pcl);
        f["loss.gamma_ot"] = real_field(&RunConfig::loss, &LossWeights::gamma_ot);

        f["ot.lambda"] = real_field(&RunConfig::ot, &OtConfig::lambda);
        f["ot.max_iters"] = int_field(&RunConfig::ot, &OtConfig::max_iters);
        f["ot.tol"] = real_field(&RunConfig::ot, &OtConfig::tol);

        f["trainer.epochs"] = int_field(&RunConfig::trainer, &TrainConfig::epochs);
        f["trainer.batch_size"] = int_field(&RunConfig::trainer, &TrainConfig::batch_size);
        f["trainer.lr"] = real_field(&RunConfig::trainer, &TrainConfig::learning_rate);
        f["trainer.seed"] = u64_field(&RunConfig::trainer, &TrainConfig::seed);
        f["trainer.eval_every"] = int_field(&RunConfig::trainer, &TrainConfig::eval_every);
        f["trainer.patience"] = int_field(&RunConfig::trainer, &TrainConfig::patience);
        f["trainer.early_stop_n"] = int_field(&RunConfig::trainer, &TrainConfig::early_stop_n);

        f["eval.topn"] = {[](const RunConfig& c) { return join(c.eval.topn); },
                          [](RunConfig& c, const std::string& k, const std::string& v) { c.eval.topn = parse_int_list(k, v); }};
        f["eval.mask_seen"] = bool_field(&RunConfig::eval, &EvalConfig::mask_seen);

        f["synth.num_clusters"] = u32_field(&RunConfig::synth, &SyntheticSpec::num_clusters);
        f["synth.users_per_cluster"] = u32_field(&RunConfig::synth, &SyntheticSpec::users_per_cluster);
        f["synth.bundles_per_cluster"] = u32_field(&RunConfig::synth, &SyntheticSpec::bundles_per_cluster);
        f["synth.items_per_cluster"] = u32_field(&RunConfig::synth, &SyntheticSpec::items_per_cluster);
        f["synth.noise_rate"] = real_field(&RunConfig::synth, &SyntheticSpec::noise_rate);
        f["synth.seed"] = u64_field(&RunConfig::synth, &SyntheticSpec::seed);
        return f;
    }();
    return fields;
}

const Field& lookup(const std::string& key) {
    const auto& reg = registry();
    auto it = reg.find(key);
    if (it == reg.end()) fail(ErrorCode::UnknownConfigKey, "unknown config key: " + key);
    return it->second;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    lookup(key).set(*this, key, unquote(trim(value)));
}

std::string RunConfig::get(const std::string& key) const { return lookup(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [name, _] : registry()) out.push_back(name);
        return out;
    }();
    return k;
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& key : keys()) out += key + " = " + get(key) + "\n";
    return out;
}

std::string RunConfig::to_line() const {
    std::string out;
    for (const auto& key : keys()) {
        if (!out.empty()) out += ' ';
        out += key + "=" + get(key);
    }
    return out;
}

void RunConfig::validate() const {
    auto positive = [](long long v, const char* key) {
        if (v <= 0) fail(ErrorCode::InvalidConfigValue, std::string(key) + " must be positive");
    };
    positive(model.dim, "model.dim");
    if (model.dim_override < 0) fail(ErrorCode::InvalidConfigValue, "model.dim_override must be >= 0");
    positive(model.layers, "model.layers");
    positive(model.refresh_every, "model.refresh_every");
    if (model.user_prototypes < 1 || model.bundle_prototypes < 1) {
        fail(ErrorCode::InvalidConfigValue, "prototype counts must be >= 1");
    }
    if (!(model.edge_dropout >= 0.0 && model.edge_dropout < 1.0)) {
        fail(ErrorCode::InvalidConfigValue, "model.edge_dropout must be in [0, 1)");
    }
    if (model.init.mean_scale < 0.0) fail(ErrorCode::InvalidConfigValue, "model.mean_scale must be >= 0");
    loss.validate();
    ot.validate();
    if (trainer.epochs < 0) fail(ErrorCode::InvalidConfigValue, "trainer.epochs must be >= 0");
    positive(trainer.batch_size, "trainer.batch_size");
    if (!(trainer.learning_rate > 0.0)) fail(ErrorCode::InvalidConfigValue, "trainer.lr must be > 0");
    if (trainer.eval_every < 0) fail(ErrorCode::InvalidConfigValue, "trainer.eval_every must be >= 0");
    positive(trainer.patience, "trainer.patience");
    positive(trainer.early_stop_n, "trainer.early_stop_n");
    for (int n : eval.topn) positive(n, "eval.topn");
}

void RunConfig::apply_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::InvalidConfigValue, "config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        set(key, line.substr(eq + 1));
    }
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::MissingFile, "cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    apply_text(buf.str());
}

LossWeights RunConfig::effective_loss() const {
    LossWeights w = loss;
    if (model.disable_gaussian) w.samples = 1;
    if (model.disable_proto) {
        w.gamma_pcl = 0.0;
        w.gamma_ot = 0.0;
    }
    return w;
}

}  // namespace gpcl

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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gpcl/core/dataset.hpp"
#include "gpcl/core/gaussian.hpp"
#include "gpcl/core/graph.hpp"
#include "gpcl/core/objectives.hpp"
#include "gpcl/core/prototypes.hpp"

namespace gpcl {

/// Which embeddings feed the prototype losses.
enum class ProtoInput { Level0, BundleView, ItemView };
enum class ClNegatives { InBatch, Full };

struct ModelConfig {
    int dim = 64;
    int dim_override = 0;  // > 0 replaces dim (capacity ablation)
    int layers = 1;
    LayerCombine combine = LayerCombine::LastLayer;
    bool share_level0 = true;
    bool disable_gaussian = false;
    bool disable_proto = false;
    GaussianInit init;
    double edge_dropout = 0.0;
    int user_prototypes = 64;
    int bundle_prototypes = 64;
    ProtoScope proto_scope = ProtoScope::FullNodeSet;
    ProtoInput proto_input = ProtoInput::Level0;
    int refresh_every = 1;
    ClNegatives cl_negatives = ClNegatives::InBatch;

    int effective_dim() const { return dim_override > 0 ? dim_override : dim; }
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 2048;
    double learning_rate = 1e-4;
    std::uint64_t seed = 2024;
    int eval_every = 1;  // 0 disables periodic tune evaluation
    int patience = 20;  // evaluations without tune NDCG improvement
    int early_stop_n = 20;
};

struct EvalConfig {
    std::vector<int> topn{20, 40};
    bool mask_seen = true;
};

/// Every tunable, addressable as "section.key".
struct RunConfig {
    std::string data_dir;
    ModelConfig model;
    LossWeights loss{0.04, 0.1, 0.1, 0.25, 2};
    OtConfig ot;
    TrainConfig trainer;
    EvalConfig eval;
    SyntheticSpec synth;

    /// Throws UnknownConfigKey / InvalidConfigValue.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static const std::vector<std::string>& keys();

    /// Canonical "key = value" lines, sorted by key.
    std::string to_text() const;
    /// Same content on one line, space separated, for log headers.
    std::string to_line() const;

    void validate() const;

    /// Applies "key = value" lines; "[section]" headers prefix later keys.
    /// Blank lines and '#' comments are ignored.
    void apply_text(const std::string& text);
    void load_file(const std::filesystem::path& path);

    /// Effective per-step settings after ablation flags.
    LossWeights effective_loss() const;
};

std::string format_double(double v);

}  // namespace gpcl

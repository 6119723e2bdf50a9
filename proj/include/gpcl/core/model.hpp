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

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gpcl/core/autodiff.hpp"
#include "gpcl/core/config.hpp"
#include "gpcl/core/dataset.hpp"
#include "gpcl/core/gaussian.hpp"
#include "gpcl/core/graph.hpp"
#include "gpcl/core/objectives.hpp"

namespace gpcl {

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;
};

/// The three propagation structures built from the training relations.
struct ModelGraphs {
    BipartiteGraph user_bundle;  // from ub_train
    BipartiteGraph user_item;
    CsrMatrix pooling;           // bundles x items, 1/|N_b|
    CsrMatrix pooling_t;

    static ModelGraphs build(const InteractionDataset& ds);
    ModelGraphs with_edge_dropout(double p, std::mt19937_64& rng) const;
};

/// One noise draw per Gaussian table. Empty matrices mean "use the mean".
struct SampleNoise {
    Matrix user;
    Matrix bundle;
    Matrix item;
    Matrix user_item;  // only when level-0 user tables are not shared
};

class Model {
public:
    Model() = default;
    /// Initializes every table from cfg.trainer.seed.
    Model(const RunConfig& cfg, const EntityCounts& counts);

    const RunConfig& config() const { return config_; }
    RunConfig& mutable_config() { return config_; }
    const EntityCounts& counts() const { return counts_; }
    int dim() const { return config_.model.effective_dim(); }

    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }
    Parameter& param(std::string_view name);
    const Parameter& param(std::string_view name) const;
    bool has_param(std::string_view name) const;

    GaussianTable user_table() const;
    GaussianTable bundle_table() const;
    GaussianTable item_table() const;
    /// Item-view user table; the shared user table unless share_level0 is off.
    GaussianTable user_item_table() const;

    /// Fresh noise for every table (all empty with disable_gaussian).
    SampleNoise draw_noise(std::mt19937_64& rng) const;
    /// Zero-noise view embeddings (the mean embedding) or one sampled draw.
    ViewEmbeddings views(const ModelGraphs& graphs, const SampleNoise* noise = nullptr) const;

    void zero_grad();

private:
    void add_param(std::string name, Matrix value);

    RunConfig config_;
    EntityCounts counts_;
    std::vector<Parameter> params_;
};

namespace ad {

/// Tape leaves for every model parameter.
struct ModelVars {
    Var user_mean, user_raw;
    Var bundle_mean, bundle_raw;
    Var item_mean, item_raw;
    Var user_item_mean, user_item_raw;  // invalid when shared
    Var user_protos, bundle_protos;
};

/// trainable = false records the values as constants.
ModelVars bind(Tape& t, Model& model, bool trainable);

struct ForwardVars {
    Var user0, bundle0, item0, user0_item;
    Var user_bundle_view, bundle_bundle_view;
    Var user_item_view, item_item_view, bundle_item_view;
};

ForwardVars forward(Tape& t, const ModelVars& vars, const Model& model, const ModelGraphs& graphs,
                    const SampleNoise* noise);

std::pair<Var, Var> propagate_layers(Tape& t, const BipartiteGraph& g, Var left0, Var right0,
                                     int layers, LayerCombine combine);

}  // namespace ad

/// Prototype assignments kept between steps when refresh_every > 1.
struct AssignmentCache {
    std::vector<Matrix> user_q;    // one per sample index
    std::vector<Matrix> bundle_q;
    std::uint64_t computed_at = 0;
    bool valid = false;
    // Reuse the stored assignments forever, whatever the scope. Only
    // meaningful while the batch stays fixed (gradient checks).
    bool pinned = false;
};

struct StepLoss {
    ad::Var total;
    LossBreakdown breakdown;  // means over the T samples, total weighted
    bool sinkhorn_converged = true;
};

/// Builds the averaged multi-sample loss for one batch on the tape. noise
/// holds T draws (entries may be empty to use means). When cache is given
/// and still fresh for `step`, its assignments are reused; otherwise it is
/// refilled.
StepLoss build_step_loss(ad::Tape& t, const ad::ModelVars& vars, const Model& model,
                         const ModelGraphs& graphs, const TrainBatch& batch,
                         const std::vector<SampleNoise>& noise, AssignmentCache* cache = nullptr,
                         std::uint64_t step = 0);

}  // namespace gpcl

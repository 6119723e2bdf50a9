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

#include "gpcl/core/model.hpp"

#include <numeric>

#include "gpcl/core/prototypes.hpp"

namespace gpcl {

ModelGraphs ModelGraphs::build(const InteractionDataset& ds) {
    ModelGraphs g;
    g.user_bundle = build_graph(ds.ub_train, ds.counts.users, ds.counts.bundles);
    g.user_item = build_graph(ds.ui, ds.counts.users, ds.counts.items);
    g.pooling = build_pooling(ds.bi, ds.counts.bundles, ds.counts.items);
    g.pooling_t = g.pooling.transposed();
    return g;
}

ModelGraphs ModelGraphs::with_edge_dropout(double p, std::mt19937_64& rng) const {
    if (p <= 0.0) return *this;
    ModelGraphs g = *this;
    g.user_bundle = user_bundle.with_edge_dropout(p, rng);
    g.user_item = user_item.with_edge_dropout(p, rng);
    return g;
}

Model::Model(const RunConfig& cfg, const EntityCounts& counts) : config_(cfg), counts_(counts) {
    config_.validate();
    if (counts.users == 0 || counts.bundles == 0 || counts.items == 0) {
        fail(ErrorCode::InvalidSpec, "entity counts must be positive");
    }
    const int d = dim();
    std::mt19937_64 rng(config_.trainer.seed);
    const GaussianInit& init = config_.model.init;
    auto table = [&](const char* prefix, std::uint32_t rows) {
        GaussianTable t = init_table(rows, d, init, rng);
        add_param(std::string(prefix) + ".mean", std::move(t.mean));
        add_param(std::string(prefix) + ".raw_var", std::move(t.raw_variance));
    };
    table("user", counts.users);
    table("bundle", counts.bundles);
    table("item", counts.items);
    if (!config_.model.share_level0) table("user_item", counts.users);

    auto protos = [&](const char* name, int k) {
        std::normal_distribution<double> normal(0.0, init.mean_scale > 0.0 ? init.mean_scale : 0.1);
        Matrix c(k, d);
        for (Eigen::Index r = 0; r < c.rows(); ++r)
            for (Eigen::Index j = 0; j < c.cols(); ++j) c(r, j) = normal(rng);
        add_param(name, std::move(c));
    };
    protos("proto.user", config_.model.user_prototypes);
    protos("proto.bundle", config_.model.bundle_prototypes);
}

void Model::add_param(std::string name, Matrix value) {
    Matrix grad = Matrix::Zero(value.rows(), value.cols());
    params_.push_back({std::move(name), std::move(value), std::move(grad)});
}

bool Model::has_param(std::string_view name) const {
    for (const auto& p : params_)
        if (p.name == name) return true;
    return false;
}

Parameter& Model::param(std::string_view name) {
    for (auto& p : params_)
        if (p.name == name) return p;
    fail(ErrorCode::InvalidSpec, "no parameter named " + std::string(name));
}

const Parameter& Model::param(std::string_view name) const {
    return const_cast<Model*>(this)->param(name);
}

GaussianTable Model::user_table() const { return {param("user.mean").value, param("user.raw_var").value}; }
GaussianTable Model::bundle_table() const { return {param("bundle.mean").value, param("bundle.raw_var").value}; }
GaussianTable Model::item_table() const { return {param("item.mean").value, param("item.raw_var").value}; }

GaussianTable Model::user_item_table() const {
    if (config_.model.share_level0) return user_table();
    return {param("user_item.mean").value, param("user_item.raw_var").value};
}

SampleNoise Model::draw_noise(std::mt19937_64& rng) const {
    SampleNoise n;
    if (config_.model.disable_gaussian) return n;
    const int d = dim();
    n.user = gpcl::draw_noise(counts_.users, d, rng);
    n.bundle = gpcl::draw_noise(counts_.bundles, d, rng);
    n.item = gpcl::draw_noise(counts_.items, d, rng);
    if (!config_.model.share_level0) n.user_item = gpcl::draw_noise(counts_.users, d, rng);
    return n;
}

ViewEmbeddings Model::views(const ModelGraphs& graphs, const SampleNoise* noise) const {
    ad::Tape t;
    auto vars = ad::bind(t, const_cast<Model&>(*this), false);
    auto f = ad::forward(t, vars, *this, graphs, noise);
    return {t.value(f.user_bundle_view), t.value(f.bundle_bundle_view), t.value(f.user_item_view),
            t.value(f.bundle_item_view)};
}

void Model::zero_grad() {
    for (auto& p : params_) p.grad.setZero();
}

namespace ad {

ModelVars bind(Tape& t, Model& model, bool trainable) {
    auto leaf = [&](const char* name) {
        Parameter& p = model.param(name);
        return trainable ? t.parameter(p.value, &p.grad) : t.constant(p.value);
    };
    ModelVars v;
    v.user_mean = leaf("user.mean");
    v.user_raw = leaf("user.raw_var");
    v.bundle_mean = leaf("bundle.mean");
    v.bundle_raw = leaf("bundle.raw_var");
    v.item_mean = leaf("item.mean");
    v.item_raw = leaf("item.raw_var");
    if (model.has_param("user_item.mean")) {
        v.user_item_mean = leaf("user_item.mean");
        v.user_item_raw = leaf("user_item.raw_var");
    }
    v.user_protos = leaf("proto.user");
    v.bundle_protos = leaf("proto.bundle");
    return v;
}

std::pair<Var, Var> propagate_layers(Tape& t, const BipartiteGraph& g, Var left0, Var right0, int layers,
                                     LayerCombine combine) {
    if (layers < 1) fail(ErrorCode::InvalidSpec, "layers must be >= 1");
    Var left = left0, right = right0;
    Var left_sum = left0, right_sum = right0;
    for (int k = 0; k < layers; ++k) {
        Var next_left = spmm(t, g.left_to_right, g.right_to_left, right);
        Var next_right = spmm(t, g.right_to_left, g.left_to_right, left);
        left = next_left;
        right = next_right;
        if (combine == LayerCombine::MeanWithLayer0) {
            left_sum = add(t, left_sum, left);
            right_sum = add(t, right_sum, right);
        }
    }
    if (combine == LayerCombine::LastLayer) return {left, right};
    const double inv = 1.0 / static_cast<double>(layers + 1);
    return {scale(t, left_sum, inv), scale(t, right_sum, inv)};
}

ForwardVars forward(Tape& t, const ModelVars& vars, const Model& model, const ModelGraphs& graphs,
                    const SampleNoise* noise) {
    const auto& mc = model.config().model;
    auto level0 = [&](Var mean, Var raw, const Matrix* eps) {
        if (mc.disable_gaussian || eps == nullptr || eps->size() == 0) return mean;
        return reparameterize(t, mean, raw, *eps);
    };
    ForwardVars f;
    f.user0 = level0(vars.user_mean, vars.user_raw, noise ? &noise->user : nullptr);
    f.bundle0 = level0(vars.bundle_mean, vars.bundle_raw, noise ? &noise->bundle : nullptr);
    f.item0 = level0(vars.item_mean, vars.item_raw, noise ? &noise->item : nullptr);
    f.user0_item = vars.user_item_mean.valid()
                       ? level0(vars.user_item_mean, vars.user_item_raw, noise ? &noise->user_item : nullptr)
                       : f.user0;

    std::tie(f.user_bundle_view, f.bundle_bundle_view) =
        propagate_layers(t, graphs.user_bundle, f.user0, f.bundle0, mc.layers, mc.combine);
    std::tie(f.user_item_view, f.item_item_view) =
        propagate_layers(t, graphs.user_item, f.user0_item, f.item0, mc.layers, mc.combine);
    f.bundle_item_view = spmm(t, graphs.pooling, graphs.pooling_t, f.item_item_view);
    return f;
}

}  // namespace ad

namespace {

IdList all_ids(std::uint32_t n) {
    IdList ids(n);
    std::iota(ids.begin(), ids.end(), 0u);
    return ids;
}

}  // namespace

StepLoss build_step_loss(ad::Tape& t, const ad::ModelVars& vars, const Model& model, const ModelGraphs& graphs,
                         const TrainBatch& batch, const std::vector<SampleNoise>& noise, AssignmentCache* cache,
                         std::uint64_t step) {
    using namespace ad;
    if (batch.empty()) fail(ErrorCode::EmptyBatch, "empty training batch");
    if (noise.empty()) fail(ErrorCode::EmptySampleList, "no noise draws");
    const RunConfig& cfg = model.config();
    const LossWeights w = cfg.effective_loss();
    const auto samples = noise.size();

    IdList users, pos, neg;
    for (const auto& tr : batch) {
        users.push_back(tr.user);
        pos.push_back(tr.positive);
        neg.push_back(tr.negative);
    }
    const IdList cl_users =
        cfg.model.cl_negatives == ClNegatives::Full ? all_ids(model.counts().users) : unique_in_order(users);
    const IdList cl_bundles =
        cfg.model.cl_negatives == ClNegatives::Full ? all_ids(model.counts().bundles) : unique_in_order(pos);
    IdList batch_bundles = pos;
    batch_bundles.insert(batch_bundles.end(), neg.begin(), neg.end());
    batch_bundles = unique_in_order(batch_bundles);
    const IdList batch_users = unique_in_order(users);

    const bool use_proto = !cfg.model.disable_proto;
    const bool cacheable =
        cache != nullptr && (cache->pinned || cfg.model.proto_scope == ProtoScope::FullNodeSet);
    const bool reuse = cacheable && cache->valid && cache->user_q.size() == samples &&
                       (cache->pinned ||
                        step - cache->computed_at < static_cast<std::uint64_t>(cfg.model.refresh_every));
    if (cacheable && !reuse) {
        cache->user_q.assign(samples, Matrix());
        cache->bundle_q.assign(samples, Matrix());
    }

    StepLoss out;
    Var total;
    LossBreakdown sum_parts;
    for (std::size_t s = 0; s < samples; ++s) {
        ForwardVars f = forward(t, vars, model, graphs, &noise[s]);

        auto score = [&](const IdList& bundles) {
            Var bv = row_dot(t, gather_rows(t, f.user_bundle_view, users), gather_rows(t, f.bundle_bundle_view, bundles));
            Var iv = row_dot(t, gather_rows(t, f.user_item_view, users), gather_rows(t, f.bundle_item_view, bundles));
            return add(t, bv, iv);
        };
        Var l_bpr = ad::bpr_loss(t, score(pos), score(neg));

        Var l_cl = add(t,
                       infonce_aligned(t, gather_rows(t, f.user_bundle_view, cl_users),
                                       gather_rows(t, f.user_item_view, cl_users), w.tau),
                       infonce_aligned(t, gather_rows(t, f.bundle_bundle_view, cl_bundles),
                                       gather_rows(t, f.bundle_item_view, cl_bundles), w.tau));

        Var sample_total = add(t, l_bpr, scale(t, l_cl, w.gamma_cl));
        LossBreakdown parts;
        parts.l_bpr = t.value(l_bpr)(0, 0);
        parts.l_cl = t.value(l_cl)(0, 0);

        if (use_proto) {
            Var pu = f.user0, pb = f.bundle0;
            if (cfg.model.proto_input == ProtoInput::BundleView) {
                pu = f.user_bundle_view;
                pb = f.bundle_bundle_view;
            } else if (cfg.model.proto_input == ProtoInput::ItemView) {
                pu = f.user_item_view;
                pb = f.bundle_item_view;
            }
            ProtoStepConfig pc{cfg.ot, cfg.model.proto_scope, w.tau};
            const Matrix* cu = reuse ? &cache->user_q[s] : nullptr;
            const Matrix* cb = reuse ? &cache->bundle_q[s] : nullptr;
            ProtoStepResult pr = prototype_step(t, pu, pb, vars.user_protos, vars.bundle_protos, pc, batch_users,
                                                batch_bundles, cu, cb);
            out.sinkhorn_converged = out.sinkhorn_converged && pr.converged;
            if (cacheable && !reuse) {
                cache->user_q[s] = std::move(pr.user_q);
                cache->bundle_q[s] = std::move(pr.bundle_q);
            }
            sample_total = add(t, sample_total,
                               add(t, scale(t, pr.infonce, w.gamma_pcl), scale(t, pr.ot, w.gamma_ot)));
            parts.l_proto = t.value(pr.infonce)(0, 0);
            parts.l_ot = t.value(pr.ot)(0, 0);
        }

        total = s == 0 ? sample_total : add(t, total, sample_total);
        sum_parts.l_bpr += parts.l_bpr;
        sum_parts.l_cl += parts.l_cl;
        sum_parts.l_proto += parts.l_proto;
        sum_parts.l_ot += parts.l_ot;
    }
    if (cacheable && !reuse && use_proto) {
        cache->valid = true;
        cache->computed_at = step;
    }
    const double inv = 1.0 / static_cast<double>(samples);
    out.total = scale(t, total, inv);
    LossBreakdown mean;
    mean.l_bpr = sum_parts.l_bpr * inv;
    mean.l_cl = sum_parts.l_cl * inv;
    mean.l_proto = sum_parts.l_proto * inv;
    mean.l_ot = sum_parts.l_ot * inv;
    out.breakdown = weighted(mean, w);
    return out;
}

}  // namespace gpcl

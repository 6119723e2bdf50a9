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

#include "gpcl/core/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace gpcl {

const char* to_string(Split s) { return s == Split::Tune ? "tune" : "test"; }

RankedList top_n(NodeId user, const Eigen::Ref<const Eigen::RowVectorXd>& scores, int n, const IdList* masked) {
    std::vector<NodeId> order;
    order.reserve(static_cast<std::size_t>(scores.size()));
    for (NodeId b = 0; b < scores.size(); ++b) {
        if (masked != nullptr && std::binary_search(masked->begin(), masked->end(), b)) continue;
        order.push_back(b);
    }
    const auto keep = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(n, 0)));
    auto better = [&](NodeId a, NodeId b) {
        if (scores(a) != scores(b)) return scores(a) > scores(b);
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);
    RankedList out;
    out.user = user;
    out.bundles.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    for (NodeId b : out.bundles) out.scores.push_back(scores(b));
    return out;
}

Matrix score_all(const Model& model, const ModelGraphs& graphs) {
    ViewEmbeddings v = model.views(graphs);
    return v.user_bundle_view * v.bundle_bundle_view.transpose() + v.user_item_view * v.bundle_item_view.transpose();
}

std::vector<IdList> seen_bundles(const InteractionDataset& ds, Split split) {
    std::vector<IdList> seen = ds.user_bundles(ds.ub_train);
    if (split == Split::Test) {
        for (const auto& [u, b] : ds.ub_tune.pairs) seen[u].push_back(b);
        for (auto& l : seen) std::sort(l.begin(), l.end());
    }
    return seen;
}

namespace {

const RelationTable& split_table(const InteractionDataset& ds, Split split) {
    return split == Split::Tune ? ds.ub_tune : ds.ub_test;
}

}  // namespace

std::vector<RankedList> rank_all(const Matrix& scores, const InteractionDataset& ds, Split split, int n,
                                 bool mask_seen) {
    require_shape(scores, ds.counts.users, ds.counts.bundles, "score matrix");
    const auto truth = ds.user_bundles(split_table(ds, split));
    const auto seen = seen_bundles(ds, split);
    std::vector<RankedList> out;
    for (NodeId u = 0; u < ds.counts.users; ++u) {
        if (truth[u].empty()) continue;
        out.push_back(top_n(u, scores.row(u), n, mask_seen ? &seen[u] : nullptr));
    }
    return out;
}

std::vector<RankedList> rank_all(const Model& model, const ModelGraphs& graphs, const InteractionDataset& ds,
                                 Split split, int n, bool mask_seen) {
    return rank_all(score_all(model, graphs), ds, split, n, mask_seen);
}

double recall_at_n(const IdList& ranked, const IdList& ground_truth, int n) {
    if (ground_truth.empty()) fail(ErrorCode::EmptyGroundTruth, "recall_at_n: empty ground truth");
    std::size_t hits = 0;
    const auto limit = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(n, 0)));
    for (std::size_t r = 0; r < limit; ++r)
        if (std::binary_search(ground_truth.begin(), ground_truth.end(), ranked[r])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ground_truth.size());
}

double ndcg_at_n(const IdList& ranked, const IdList& ground_truth, int n) {
    if (ground_truth.empty()) fail(ErrorCode::EmptyGroundTruth, "ndcg_at_n: empty ground truth");
    const auto limit = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(n, 0)));
    double dcg = 0.0;
    for (std::size_t r = 0; r < limit; ++r)
        if (std::binary_search(ground_truth.begin(), ground_truth.end(), ranked[r]))
            dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    double idcg = 0.0;
    const auto ideal = std::min<std::size_t>(ground_truth.size(), static_cast<std::size_t>(std::max(n, 0)));
    for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

std::vector<MetricResult> evaluate_scores(const Matrix& scores, const InteractionDataset& ds, Split split,
                                          const std::vector<int>& ns, bool mask_seen) {
    const auto truth = ds.user_bundles(split_table(ds, split));
    const int max_n = ns.empty() ? 0 : *std::max_element(ns.begin(), ns.end());
    const auto ranked = rank_all(scores, ds, split, max_n, mask_seen);
    std::vector<MetricResult> out;
    for (int n : ns) {
        MetricResult m;
        m.split = split;
        m.n = n;
        for (const auto& r : ranked) {
            m.recall += recall_at_n(r.bundles, truth[r.user], n);
            m.ndcg += ndcg_at_n(r.bundles, truth[r.user], n);
        }
        m.users = ranked.size();
        if (m.users > 0) {
            m.recall /= static_cast<double>(m.users);
            m.ndcg /= static_cast<double>(m.users);
        }
        out.push_back(m);
    }
    return out;
}

std::vector<MetricResult> evaluate(const Model& model, const ModelGraphs& graphs, const InteractionDataset& ds,
                                   Split split, const std::vector<int>& ns, bool mask_seen) {
    return evaluate_scores(score_all(model, graphs), ds, split, ns, mask_seen);
}

Matrix popularity_scores(const InteractionDataset& ds) {
    Eigen::RowVectorXd pop = Eigen::RowVectorXd::Zero(ds.counts.bundles);
    for (const auto& [u, b] : ds.ub_train.pairs) pop(b) += 1.0;
    return pop.replicate(ds.counts.users, 1);
}

double random_expected_recall(const InteractionDataset& ds, Split split, int n, bool mask_seen) {
    const auto truth = ds.user_bundles(split_table(ds, split));
    const auto seen = seen_bundles(ds, split);
    double total = 0.0;
    std::size_t users = 0;
    for (NodeId u = 0; u < ds.counts.users; ++u) {
        if (truth[u].empty()) continue;
        const double candidates =
            static_cast<double>(ds.counts.bundles) - (mask_seen ? static_cast<double>(seen[u].size()) : 0.0);
        // each relevant bundle lands in the top n with probability min(n, C) / C
        total += std::min(static_cast<double>(n), candidates) / candidates;
        ++users;
    }
    return users > 0 ? total / static_cast<double>(users) : 0.0;
}

UncertainPrediction predict_uncertain(const Model& model, const ModelGraphs& graphs, NodeId user, NodeId bundle,
                                      int samples, std::mt19937_64& rng) {
    if (samples < 1) fail(ErrorCode::InvalidSpec, "predict_uncertain: samples must be >= 1");
    if (user >= model.counts().users || bundle >= model.counts().bundles) {
        fail(ErrorCode::IdOutOfRange, "predict_uncertain: id out of range");
    }
    std::vector<double> values;
    for (int s = 0; s < samples; ++s) {
        SampleNoise noise = model.draw_noise(rng);
        ViewEmbeddings v = model.views(graphs, &noise);
        values.push_back(predict_scores(v, {user}, {bundle})(0, 0));
    }
    UncertainPrediction out;
    out.samples_used = samples;
    out.mean_score = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(samples);
    if (samples > 1) {
        double ss = 0.0;
        for (double x : values) ss += (x - out.mean_score) * (x - out.mean_score);
        out.variance_score = ss / static_cast<double>(samples - 1);
    }
    return out;
}

std::string FrequencyBucket::label() const {
    return std::to_string(lo) + "-" + (hi ? std::to_string(*hi) : std::string());
}

std::vector<FrequencyBucket> parse_buckets(const std::string& spec) {
    std::vector<FrequencyBucket> out;
    std::stringstream in(spec);
    std::string tok;
    auto bad = [&](const std::string& t) { fail(ErrorCode::InvalidConfigValue, "bad frequency bucket '" + t + "'"); };
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        const auto dash = tok.find('-');
        if (dash == std::string::npos || dash == 0) bad(tok);
        FrequencyBucket b;
        try {
            b.lo = static_cast<std::uint32_t>(std::stoul(tok.substr(0, dash)));
            const std::string rest = tok.substr(dash + 1);
            if (!rest.empty()) b.hi = static_cast<std::uint32_t>(std::stoul(rest));
        } catch (const std::exception&) {
            bad(tok);
        }
        if (b.hi && *b.hi < b.lo) bad(tok);
        out.push_back(b);
    }
    if (out.empty()) bad(spec);
    return out;
}

std::vector<UncertaintyRow> uncertainty_report(const Model& model, const InteractionDataset& ds, NodeFamily family,
                                               const std::vector<FrequencyBucket>& buckets) {
    const GaussianTable table = family == NodeFamily::Users ? model.user_table() : model.bundle_table();
    std::vector<std::uint32_t> freq(static_cast<std::size_t>(table.rows()), 0);
    for (const auto& [u, b] : ds.ub_train.pairs) ++freq[family == NodeFamily::Users ? u : b];
    std::vector<UncertaintyRow> out;
    for (const auto& bucket : buckets) {
        UncertaintyRow row;
        row.bucket = bucket;
        for (NodeId n = 0; n < freq.size(); ++n) {
            if (!bucket.contains(freq[n])) continue;
            row.mean_uncertainty += uncertainty_score(table, n);
            ++row.nodes;
        }
        if (row.nodes == 0) continue;
        row.mean_uncertainty /= static_cast<double>(row.nodes);
        out.push_back(row);
    }
    return out;
}

}  // namespace gpcl

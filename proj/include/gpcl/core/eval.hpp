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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gpcl/core/dataset.hpp"
#include "gpcl/core/model.hpp"

namespace gpcl {

enum class Split { Tune, Test };

const char* to_string(Split s);

struct RankedList {
    NodeId user = 0;
    IdList bundles;              // best first
    std::vector<double> scores;  // non-increasing
};

/// Top-n of one score row. Masked ids are dropped; ties go to the lower id.
RankedList top_n(NodeId user, const Eigen::Ref<const Eigen::RowVectorXd>& scores, int n,
                 const IdList* masked = nullptr);

/// Scores users x bundles with the mean embeddings.
Matrix score_all(const Model& model, const ModelGraphs& graphs);

/// Bundles the user already interacted with outside the evaluated split:
/// train for tune, train + tune for test.
std::vector<IdList> seen_bundles(const InteractionDataset& ds, Split split);

/// One list per user holding at least one ground-truth bundle in the split.
std::vector<RankedList> rank_all(const Matrix& scores, const InteractionDataset& ds, Split split, int n,
                                 bool mask_seen);
std::vector<RankedList> rank_all(const Model& model, const ModelGraphs& graphs,
                                 const InteractionDataset& ds, Split split, int n, bool mask_seen);

/// |top-n ∩ gt| / |gt| for one user; gt must be sorted.
double recall_at_n(const IdList& ranked, const IdList& ground_truth, int n);
/// Binary-relevance NDCG with 1-based ranks; gt must be sorted.
double ndcg_at_n(const IdList& ranked, const IdList& ground_truth, int n);

struct MetricResult {
    Split split = Split::Tune;
    int n = 0;
    double recall = 0.0;
    double ndcg = 0.0;
    std::size_t users = 0;
};

/// Averages both metrics over users with ground truth, for each n.
std::vector<MetricResult> evaluate_scores(const Matrix& scores, const InteractionDataset& ds, Split split,
                                          const std::vector<int>& ns, bool mask_seen);
std::vector<MetricResult> evaluate(const Model& model, const ModelGraphs& graphs, const InteractionDataset& ds,
                                   Split split, const std::vector<int>& ns, bool mask_seen);

/// Every user scores a bundle by its number of training interactions.
Matrix popularity_scores(const InteractionDataset& ds);
/// Expected Recall@n of a uniformly random ranking over unmasked bundles.
double random_expected_recall(const InteractionDataset& ds, Split split, int n, bool mask_seen);

struct UncertainPrediction {
    double mean_score = 0.0;
    double variance_score = 0.0;  // unbiased; 0 when samples_used == 1
    int samples_used = 0;
};

/// Mean and sample variance of the score over `samples` independent noise
/// draws of every Gaussian table.
UncertainPrediction predict_uncertain(const Model& model, const ModelGraphs& graphs, NodeId user, NodeId bundle,
                                      int samples, std::mt19937_64& rng);

/// Inclusive frequency range; hi empty means unbounded.
struct FrequencyBucket {
    std::uint32_t lo = 1;
    std::optional<std::uint32_t> hi;

    std::string label() const;
    bool contains(std::uint32_t f) const { return f >= lo && (!hi || f <= *hi); }
};

/// Parses "1-10,11-30,31-50,51-".
std::vector<FrequencyBucket> parse_buckets(const std::string& spec);

enum class NodeFamily { Users, Bundles };

struct UncertaintyRow {
    FrequencyBucket bucket;
    std::size_t nodes = 0;
    double mean_uncertainty = 0.0;
};

/// Groups nodes by training-interaction count and averages their
/// uncertainty score. Empty buckets are omitted.
std::vector<UncertaintyRow> uncertainty_report(const Model& model, const InteractionDataset& ds, NodeFamily family,
                                               const std::vector<FrequencyBucket>& buckets);

}  // namespace gpcl

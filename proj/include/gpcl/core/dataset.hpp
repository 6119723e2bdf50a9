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
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gpcl/core/matrix.hpp"

namespace gpcl {

struct EntityCounts {
    std::uint32_t users = 0;    // M
    std::uint32_t bundles = 0;  // O
    std::uint32_t items = 0;    // N

    bool operator==(const EntityCounts&) const = default;
};

enum class RelationKind { UserBundle, UserItem, BundleItem };

struct RelationTable {
    RelationKind kind = RelationKind::UserBundle;
    std::vector<std::pair<NodeId, NodeId>> pairs;

    std::size_t size() const { return pairs.size(); }
};

/// The three binary relations X (user-bundle, split three ways), Y (user-item)
/// and Z (bundle-item). Immutable once loaded.
struct InteractionDataset {
    EntityCounts counts;
    RelationTable ub_train{RelationKind::UserBundle, {}};
    RelationTable ub_tune{RelationKind::UserBundle, {}};
    RelationTable ub_test{RelationKind::UserBundle, {}};
    RelationTable ui{RelationKind::UserItem, {}};
    RelationTable bi{RelationKind::BundleItem, {}};

    /// Checks bounds, duplicates and split disjointness. Throws on the first
    /// violation.
    void validate() const;

    /// Per-user sorted bundle lists for one split.
    std::vector<IdList> user_bundles(const RelationTable& split) const;
};

InteractionDataset load_dataset(const std::filesystem::path& dir);

/// Writes the six files in canonical (sorted) order.
void write_dataset(const InteractionDataset& ds, const std::filesystem::path& dir);

/// Raw relation sizes, enough to reproduce the summary averages.
struct RelationSizes {
    std::uint64_t users = 0;
    std::uint64_t bundles = 0;
    std::uint64_t items = 0;
    std::uint64_t user_item = 0;
    std::uint64_t user_bundle = 0;
    std::uint64_t bundle_item = 0;
};

struct DatasetStats {
    RelationSizes sizes;
    double avg_item_interactions = 0.0;    // |UI| / M
    double avg_bundle_interactions = 0.0;  // |UB| / M
    double avg_bundle_size = 0.0;          // |BI| / O
};

DatasetStats compute_stats(const RelationSizes& sizes);
/// |UB| counts all three user-bundle splits.
DatasetStats compute_stats(const InteractionDataset& ds);

/// Rounds half away from zero to two decimals using exact integer arithmetic
/// on numerator / denominator.
std::string format_ratio_2dp(std::uint64_t numerator, std::uint64_t denominator);

std::string format_stats_table(const DatasetStats& stats);

struct Triple {
    NodeId user;
    NodeId positive;
    NodeId negative;
};

using TrainBatch = std::vector<Triple>;

/// Draws BPR triples: positives uniformly from ub_train, one negative per
/// positive uniformly from the user's non-interacted bundles.
class BatchSampler {
public:
    BatchSampler(const InteractionDataset& ds, std::uint64_t seed);

    TrainBatch sample(std::size_t batch_size);

    std::mt19937_64& rng() { return rng_; }

private:
    NodeId draw_negative(NodeId user);

    const InteractionDataset* ds_;
    std::vector<IdList> train_by_user_;
    std::mt19937_64 rng_;
};

struct SyntheticSpec {
    std::uint32_t num_clusters = 4;
    std::uint32_t users_per_cluster = 50;
    std::uint32_t bundles_per_cluster = 10;
    std::uint32_t items_per_cluster = 50;
    double noise_rate = 0.05;
    std::uint64_t seed = 1;
};

struct SyntheticDataset {
    InteractionDataset data;
    std::vector<std::uint32_t> user_cluster;
    std::vector<std::uint32_t> bundle_cluster;
    std::vector<std::uint32_t> item_cluster;
};

/// Planted block structure: users of cluster c interact with bundles and
/// items of cluster c; noise_rate adds cross-cluster edges on top.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace gpcl

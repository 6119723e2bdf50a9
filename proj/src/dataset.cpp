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

#include "gpcl/core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace gpcl {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSizeFile = "data_size.txt";
constexpr const char* kTrainFile = "user_bundle_train.txt";
constexpr const char* kTuneFile = "user_bundle_tune.txt";
constexpr const char* kTestFile = "user_bundle_test.txt";
constexpr const char* kUserItemFile = "user_item.txt";
constexpr const char* kBundleItemFile = "bundle_item.txt";

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

bool parse_u32(const std::string& s, std::uint32_t& out) {
    if (s.empty() || s.size() > 10) return false;
    std::uint64_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    if (v > 0xFFFFFFFFull) return false;
    out = static_cast<std::uint32_t>(v);
    return true;
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::MissingFile, "missing file: " + path.string());
    return in;
}

RelationTable read_pairs(const fs::path& path, RelationKind kind, std::uint32_t left_bound,
                         std::uint32_t right_bound) {
    std::ifstream in = open_input(path);
    RelationTable table{kind, {}};
    std::set<std::pair<NodeId, NodeId>> seen;
    std::string line;
    std::size_t line_no = 0;
    const std::string name = path.filename().string();
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto fields = split_fields(line);
        std::uint32_t l = 0, r = 0;
        if (fields.size() != 2 || !parse_u32(fields[0], l) || !parse_u32(fields[1], r)) {
            fail(ErrorCode::MalformedLine,
                 name + ":" + std::to_string(line_no) + ": expected two integer ids");
        }
        if (l >= left_bound || r >= right_bound) {
            fail(ErrorCode::IdOutOfRange, name + ":" + std::to_string(line_no) + ": pair (" +
                                              std::to_string(l) + ", " + std::to_string(r) +
                                              ") out of range");
        }
        if (!seen.insert({l, r}).second) {
            fail(ErrorCode::DuplicatePair, name + ":" + std::to_string(line_no) +
                                               ": duplicate pair (" + std::to_string(l) + ", " +
                                               std::to_string(r) + ")");
        }
        table.pairs.emplace_back(l, r);
    }
    return table;
}

void write_pairs(const fs::path& path, const RelationTable& table) {
    auto pairs = table.pairs;
    std::sort(pairs.begin(), pairs.end());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    for (const auto& [l, r] : pairs) out << l << '\t' << r << '\n';
    if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
}

void check_table(const RelationTable& t, std::uint32_t left_bound, std::uint32_t right_bound,
                 const char* name) {
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& p : t.pairs) {
        if (p.first >= left_bound || p.second >= right_bound) {
            fail(ErrorCode::IdOutOfRange, std::string(name) + ": pair (" +
                                              std::to_string(p.first) + ", " +
                                              std::to_string(p.second) + ") out of range");
        }
        if (!seen.insert(p).second) {
            fail(ErrorCode::DuplicatePair, std::string(name) + ": duplicate pair (" +
                                               std::to_string(p.first) + ", " +
                                               std::to_string(p.second) + ")");
        }
    }
}

}  // namespace

void InteractionDataset::validate() const {
    if (counts.users == 0 || counts.bundles == 0 || counts.items == 0) {
        fail(ErrorCode::InvalidSpec, "entity counts must be positive");
    }
    check_table(ub_train, counts.users, counts.bundles, kTrainFile);
    check_table(ub_tune, counts.users, counts.bundles, kTuneFile);
    check_table(ub_test, counts.users, counts.bundles, kTestFile);
    check_table(ui, counts.users, counts.items, kUserItemFile);
    check_table(bi, counts.bundles, counts.items, kBundleItemFile);

    std::set<std::pair<NodeId, NodeId>> train(ub_train.pairs.begin(), ub_train.pairs.end());
    std::set<std::pair<NodeId, NodeId>> tune(ub_tune.pairs.begin(), ub_tune.pairs.end());
    auto overlap = [](const std::pair<NodeId, NodeId>& p, const char* a, const char* b) {
        fail(ErrorCode::OverlappingSplits, std::string("pair (") + std::to_string(p.first) + ", " +
                                               std::to_string(p.second) + ") in both " + a +
                                               " and " + b);
    };
    for (const auto& p : ub_tune.pairs)
        if (train.count(p)) overlap(p, "train", "tune");
    for (const auto& p : ub_test.pairs) {
        if (train.count(p)) overlap(p, "train", "test");
        if (tune.count(p)) overlap(p, "tune", "test");
    }
}

std::vector<IdList> InteractionDataset::user_bundles(const RelationTable& split) const {
    std::vector<IdList> out(counts.users);
    for (const auto& [u, b] : split.pairs) out[u].push_back(b);
    for (auto& l : out) std::sort(l.begin(), l.end());
    return out;
}

InteractionDataset load_dataset(const fs::path& dir) {
    InteractionDataset ds;
    {
        std::ifstream in = open_input(dir / kSizeFile);
        std::string line;
        if (!std::getline(in, line)) fail(ErrorCode::MalformedLine, std::string(kSizeFile) + ":1: empty");
        auto fields = split_fields(line);
        if (fields.size() != 3 || !parse_u32(fields[0], ds.counts.users) ||
            !parse_u32(fields[1], ds.counts.bundles) || !parse_u32(fields[2], ds.counts.items)) {
            fail(ErrorCode::MalformedLine, std::string(kSizeFile) + ":1: expected M O N");
        }
        if (ds.counts.users == 0 || ds.counts.bundles == 0 || ds.counts.items == 0) {
            fail(ErrorCode::MalformedLine, std::string(kSizeFile) + ":1: counts must be positive");
        }
    }
    const auto& c = ds.counts;
    ds.ub_train = read_pairs(dir / kTrainFile, RelationKind::UserBundle, c.users, c.bundles);
    ds.ub_tune = read_pairs(dir / kTuneFile, RelationKind::UserBundle, c.users, c.bundles);
    ds.ub_test = read_pairs(dir / kTestFile, RelationKind::UserBundle, c.users, c.bundles);
    ds.ui = read_pairs(dir / kUserItemFile, RelationKind::UserItem, c.users, c.items);
    ds.bi = read_pairs(dir / kBundleItemFile, RelationKind::BundleItem, c.bundles, c.items);
    ds.validate();
    return ds;
}

void write_dataset(const InteractionDataset& ds, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    {
        std::ofstream out(dir / kSizeFile, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot write " + (dir / kSizeFile).string());
        out << ds.counts.users << '\t' << ds.counts.bundles << '\t' << ds.counts.items << '\n';
    }
    write_pairs(dir / kTrainFile, ds.ub_train);
    write_pairs(dir / kTuneFile, ds.ub_tune);
    write_pairs(dir / kTestFile, ds.ub_test);
    write_pairs(dir / kUserItemFile, ds.ui);
    write_pairs(dir / kBundleItemFile, ds.bi);
}

DatasetStats compute_stats(const RelationSizes& sizes) {
    DatasetStats s;
    s.sizes = sizes;
    if (sizes.users > 0) {
        s.avg_item_interactions = static_cast<double>(sizes.user_item) / static_cast<double>(sizes.users);
        s.avg_bundle_interactions =
            static_cast<double>(sizes.user_bundle) / static_cast<double>(sizes.users);
    }
    if (sizes.bundles > 0) {
        s.avg_bundle_size = static_cast<double>(sizes.bundle_item) / static_cast<double>(sizes.bundles);
    }
    return s;
}

DatasetStats compute_stats(const InteractionDataset& ds) {
    RelationSizes sizes;
    sizes.users = ds.counts.users;
    sizes.bundles = ds.counts.bundles;
    sizes.items = ds.counts.items;
    sizes.user_item = ds.ui.size();
    sizes.user_bundle = ds.ub_train.size() + ds.ub_tune.size() + ds.ub_test.size();
    sizes.bundle_item = ds.bi.size();
    return compute_stats(sizes);
}

std::string format_ratio_2dp(std::uint64_t numerator, std::uint64_t denominator) {
    if (denominator == 0) return "nan";
    // round(100 * n / d), half away from zero
    const unsigned __int128 scaled = static_cast<unsigned __int128>(numerator) * 200 + denominator;
    const auto hundredths = static_cast<std::uint64_t>(scaled / (2 * static_cast<unsigned __int128>(denominator)));
    std::string frac = std::to_string(hundredths % 100);
    if (frac.size() < 2) frac.insert(0, "0");
    return std::to_string(hundredths / 100) + "." + frac;
}

std::string format_stats_table(const DatasetStats& s) {
    const auto& z = s.sizes;
    std::ostringstream out;
    out << "|User|\t" << z.users << '\n'
        << "|Bundle|\t" << z.bundles << '\n'
        << "|Item|\t" << z.items << '\n'
        << "|User-Item|\t" << z.user_item << '\n'
        << "|User-Bundle|\t" << z.user_bundle << '\n'
        << "|Bundle-Item|\t" << z.bundle_item << '\n'
        << "Avg item interactions\t" << format_ratio_2dp(z.user_item, z.users) << '\n'
        << "Avg bundle interactions\t" << format_ratio_2dp(z.user_bundle, z.users) << '\n'
        << "Avg bundle size\t" << format_ratio_2dp(z.bundle_item, z.bundles) << '\n';
    return out.str();
}

BatchSampler::BatchSampler(const InteractionDataset& ds, std::uint64_t seed)
    : ds_(&ds), train_by_user_(ds.user_bundles(ds.ub_train)), rng_(seed) {}

NodeId BatchSampler::draw_negative(NodeId user) {
    const IdList& seen = train_by_user_[user];
    const std::uint32_t num_bundles = ds_->counts.bundles;
    if (seen.size() >= num_bundles) {
        fail(ErrorCode::NoNegativeAvailable,
             "user " + std::to_string(user) + " interacted with every bundle");
    }
    // Rejection sampling while the complement is large; enumerate otherwise.
    if (seen.size() * 2 <= num_bundles) {
        std::uniform_int_distribution<std::uint32_t> pick(0, num_bundles - 1);
        for (;;) {
            NodeId b = pick(rng_);
            if (!std::binary_search(seen.begin(), seen.end(), b)) return b;
        }
    }
    const std::uint32_t free_count = num_bundles - static_cast<std::uint32_t>(seen.size());
    std::uniform_int_distribution<std::uint32_t> pick(0, free_count - 1);
    std::uint32_t k = pick(rng_);
    for (NodeId b = 0; b < num_bundles; ++b) {
        if (std::binary_search(seen.begin(), seen.end(), b)) continue;
        if (k-- == 0) return b;
    }
    fail(ErrorCode::NoNegativeAvailable, "user " + std::to_string(user));
}

TrainBatch BatchSampler::sample(std::size_t batch_size) {
    const auto& pairs = ds_->ub_train.pairs;
    if (pairs.empty()) fail(ErrorCode::EmptyBatch, "ub_train is empty");
    const std::size_t n = std::min(batch_size, pairs.size());
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    TrainBatch batch;
    batch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [u, b] = pairs[pick(rng_)];
        batch.push_back({u, b, draw_negative(u)});
    }
    return batch;
}

namespace {

template <class Rng>
std::vector<std::uint32_t> choose_distinct(std::uint32_t base, std::uint32_t count, std::uint32_t k,
                                           Rng& rng) {
    std::vector<std::uint32_t> ids(count);
    std::iota(ids.begin(), ids.end(), base);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(std::min(k, count));
    return ids;
}

// Weighted draw of k distinct positions from [0, weights.size()).
template <class Rng>
std::vector<std::uint32_t> choose_weighted(std::vector<double> weights, std::uint32_t k, Rng& rng) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t n = 0; n < k && n < weights.size(); ++n) {
        std::discrete_distribution<std::uint32_t> pick(weights.begin(), weights.end());
        std::uint32_t j = pick(rng);
        out.push_back(j);
        weights[j] = 0.0;
    }
    return out;
}

// Adds round(noise_rate * |pairs|) distinct cross-cluster pairs.
template <class Rng>
void add_noise(std::vector<std::pair<NodeId, NodeId>>& pairs, double noise_rate,
               const std::vector<std::uint32_t>& left_cluster,
               const std::vector<std::uint32_t>& right_cluster, Rng& rng) {
    const auto target = static_cast<std::size_t>(std::llround(noise_rate * static_cast<double>(pairs.size())));
    if (target == 0) return;
    std::set<std::pair<NodeId, NodeId>> present(pairs.begin(), pairs.end());
    std::uniform_int_distribution<std::uint32_t> pick_l(0, static_cast<std::uint32_t>(left_cluster.size() - 1));
    std::uniform_int_distribution<std::uint32_t> pick_r(0, static_cast<std::uint32_t>(right_cluster.size() - 1));
    std::size_t added = 0;
    std::size_t attempts = 0;
    while (added < target && attempts < target * 1000) {
        ++attempts;
        NodeId l = pick_l(rng), r = pick_r(rng);
        if (left_cluster[l] == right_cluster[r]) continue;
        if (!present.insert({l, r}).second) continue;
        pairs.emplace_back(l, r);
        ++added;
    }
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.num_clusters == 0 || spec.users_per_cluster == 0 || spec.bundles_per_cluster == 0 ||
        spec.items_per_cluster == 0) {
        fail(ErrorCode::InvalidSpec, "synthetic counts must be positive");
    }
    if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0)) {
        fail(ErrorCode::InvalidSpec, "noise_rate must be in [0, 1)");
    }
    if (spec.num_clusters * spec.bundles_per_cluster < 2) {
        fail(ErrorCode::InvalidSpec, "need at least two bundles");
    }

    std::mt19937_64 rng(spec.seed);
    const std::uint32_t C = spec.num_clusters;
    const std::uint32_t upc = spec.users_per_cluster;
    const std::uint32_t bpc = spec.bundles_per_cluster;
    const std::uint32_t ipc = spec.items_per_cluster;

    SyntheticDataset out;
    auto& ds = out.data;
    ds.counts = {C * upc, C * bpc, C * ipc};
    for (std::uint32_t u = 0; u < ds.counts.users; ++u) out.user_cluster.push_back(u / upc);
    for (std::uint32_t b = 0; b < ds.counts.bundles; ++b) out.bundle_cluster.push_back(b / bpc);
    for (std::uint32_t i = 0; i < ds.counts.items; ++i) out.item_cluster.push_back(i / ipc);

    // Bundle contents: a random subset of the cluster's items.
    {
        const std::uint32_t lo = std::max<std::uint32_t>(2, ipc / 10);
        const std::uint32_t hi = std::max<std::uint32_t>(lo, ipc / 4);
        std::uniform_int_distribution<std::uint32_t> size_dist(lo, hi);
        for (NodeId b = 0; b < ds.counts.bundles; ++b) {
            const std::uint32_t c = out.bundle_cluster[b];
            for (auto i : choose_distinct(c * ipc, ipc, size_dist(rng), rng)) ds.bi.pairs.emplace_back(b, i);
        }
        add_noise(ds.bi.pairs, spec.noise_rate, out.bundle_cluster, out.item_cluster, rng);
    }

    // User-item interactions, drawn independently of the user-bundle table.
    {
        const std::uint32_t lo = std::max<std::uint32_t>(1, ipc / 10);
        const std::uint32_t hi = std::max<std::uint32_t>(lo, ipc / 3);
        std::uniform_int_distribution<std::uint32_t> count_dist(lo, hi);
        for (NodeId u = 0; u < ds.counts.users; ++u) {
            const std::uint32_t c = out.user_cluster[u];
            for (auto i : choose_distinct(c * ipc, ipc, count_dist(rng), rng)) ds.ui.pairs.emplace_back(u, i);
        }
        add_noise(ds.ui.pairs, spec.noise_rate, out.user_cluster, out.item_cluster, rng);
    }

    // User-bundle interactions: skewed activity per user, Zipf-like bundle
    // popularity inside each cluster.
    std::vector<std::pair<NodeId, NodeId>> ub;
    {
        std::vector<double> popularity(bpc);
        for (std::uint32_t j = 0; j < bpc; ++j) popularity[j] = 1.0 / std::pow(j + 1.0, 0.8);
        const std::uint32_t max_k = bpc > 1 ? bpc - 1 : 1;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (NodeId u = 0; u < ds.counts.users; ++u) {
            const std::uint32_t c = out.user_cluster[u];
            const double x = unit(rng);
            const auto k = std::min<std::uint32_t>(
                max_k, 1 + static_cast<std::uint32_t>(std::floor(x * x * static_cast<double>(max_k))));
            for (auto j : choose_weighted(popularity, k, rng)) ub.emplace_back(u, c * bpc + j);
        }
        add_noise(ub, spec.noise_rate, out.user_cluster, out.bundle_cluster, rng);
    }

    // 70/10/20 split per user.
    std::vector<IdList> per_user(ds.counts.users);
    for (const auto& [u, b] : ub) per_user[u].push_back(b);
    for (NodeId u = 0; u < ds.counts.users; ++u) {
        auto& list = per_user[u];
        std::sort(list.begin(), list.end());
        std::shuffle(list.begin(), list.end(), rng);
        const auto n = static_cast<std::uint32_t>(list.size());
        auto n_test = static_cast<std::uint32_t>(std::floor(0.2 * n + 0.5));
        auto n_tune = static_cast<std::uint32_t>(std::floor(0.1 * n + 0.5));
        while (n > 0 && n_test + n_tune >= n) {
            if (n_tune > 0) --n_tune;
            else --n_test;
        }
        for (std::uint32_t k = 0; k < n; ++k) {
            if (k < n_test) ds.ub_test.pairs.emplace_back(u, list[k]);
            else if (k < n_test + n_tune) ds.ub_tune.pairs.emplace_back(u, list[k]);
            else ds.ub_train.pairs.emplace_back(u, list[k]);
        }
    }
    for (auto* t : {&ds.ub_train, &ds.ub_tune, &ds.ub_test, &ds.ui, &ds.bi}) {
        std::sort(t->pairs.begin(), t->pairs.end());
    }
    ds.validate();
    return out;
}

}  // namespace gpcl

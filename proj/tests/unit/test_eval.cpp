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

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "gpcl/core/eval.hpp"
#include "support/oracles.hpp"

using namespace gpcl;

namespace {

Eigen::RowVectorXd row(std::initializer_list<double> v) {
    Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r(i++) = x;
    return r;
}

/// One user, one bundle, one item, every relation a single edge.
InteractionDataset singleton() {
    InteractionDataset ds;
    ds.counts = {1, 1, 1};
    ds.ub_train.pairs = {{0, 0}};
    ds.ui.pairs = {{0, 0}};
    ds.bi.pairs = {{0, 0}};
    return ds;
}

}  // namespace

TEST_CASE("top_n ordering, masking and ties") {
    const auto scores = row({0.1, 0.9, 0.5});
    CHECK(top_n(0, scores, 2).bundles == IdList{1, 2});
    const IdList mask{1};
    CHECK(top_n(0, scores, 2, &mask).bundles == IdList{2, 0});
    CHECK(top_n(0, row({0.3, 0.3, 0.3, 0.3}), 3).bundles == IdList{0, 1, 2});
    CHECK(top_n(0, scores, 10).bundles.size() == 3);
    const IdList all{0, 1, 2};
    CHECK(top_n(0, scores, 2, &all).bundles.empty());
}

TEST_CASE("recall and ndcg examples") {
    CHECK(recall_at_n({5, 6, 1}, {1}, 20) == 1.0);
    CHECK(recall_at_n({5, 6, 7}, {1}, 20) == 0.0);
    CHECK(recall_at_n({1, 6, 7}, {1, 9}, 3) == 0.5);
    CHECK(ndcg_at_n({1, 6, 7}, {1}, 20) == 1.0);
    CHECK(ndcg_at_n({5, 6, 1}, {1}, 20) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(ndcg_at_n({5, 6, 7}, {1}, 20) == 0.0);
    try {
        recall_at_n({1}, {}, 5);
        FAIL("expected EmptyGroundTruth");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyGroundTruth);
    }
    CHECK_THROWS_AS(ndcg_at_n({1}, {}, 5), Error);
}

TEST_CASE("metrics agree with a brute-force reference") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> bundles(1, 50), cut(1, 10);
    std::uniform_int_distribution<int> coarse(0, 6);
    for (int trial = 0; trial < 1000; ++trial) {
        const int o = bundles(rng), n = cut(rng);
        std::vector<double> s(static_cast<std::size_t>(o));
        for (auto& x : s) x = coarse(rng) * 0.25;  // coarse values force ties
        std::set<NodeId> truth, masked;
        for (NodeId b = 0; b < static_cast<NodeId>(o); ++b) {
            const auto r = rng() % 10;
            if (r < 2) truth.insert(b);
            else if (r < 4) masked.insert(b);
        }
        if (truth.empty()) truth.insert(static_cast<NodeId>(rng() % static_cast<unsigned>(o))), masked.erase(*truth.begin());

        const auto full = oracle::full_ranking(s, masked);
        Eigen::RowVectorXd scores(o);
        for (int b = 0; b < o; ++b) scores(b) = s[static_cast<std::size_t>(b)];
        const IdList mask(masked.begin(), masked.end());
        const RankedList got = top_n(0, scores, n, &mask);
        const std::vector<NodeId> expect(full.begin(), full.begin() + std::min<std::size_t>(full.size(), static_cast<std::size_t>(n)));
        REQUIRE(got.bundles == expect);

        const IdList gt(truth.begin(), truth.end());
        const double recall = recall_at_n(got.bundles, gt, n);
        CHECK(recall == static_cast<double>(oracle::hits_at(full, truth, n)) / static_cast<double>(truth.size()));
        CHECK(std::abs(ndcg_at_n(got.bundles, gt, n) - oracle::ndcg_reference(full, truth, n)) <= 1e-12);
    }
}

TEST_CASE("metric properties") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u;
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::RowVectorXd s(20);
        for (Eigen::Index i = 0; i < 20; ++i) s(i) = u(rng);
        const IdList gt{static_cast<NodeId>(rng() % 20), static_cast<NodeId>(20 + rng() % 5)};
        IdList sorted_gt = gt;
        std::sort(sorted_gt.begin(), sorted_gt.end());
        const auto ranked = top_n(0, s, 20).bundles;
        double pr = 0.0, pn = 0.0;
        for (int n = 1; n <= 20; ++n) {
            const double r = recall_at_n(ranked, sorted_gt, n), d = ndcg_at_n(ranked, sorted_gt, n);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
            CHECK(d >= 0.0);
            CHECK(d <= 1.0);
            CHECK(r >= pr);
            // the ideal DCG grows until n reaches |GT|, so monotonicity only holds past that point
            if (n > static_cast<int>(sorted_gt.size())) CHECK(d >= pn - 1e-15);
            pr = r;
            pn = d;
        }
        const Eigen::RowVectorXd shifted = (s.array() + 3.25).matrix();
        CHECK(top_n(0, shifted, 10).bundles == top_n(0, s, 10).bundles);
    }
}

TEST_CASE("ndcg can drop while n is below the ground-truth size") {
    const IdList ranked{0, 5, 6};
    CHECK(ndcg_at_n(ranked, {0, 9}, 1) == 1.0);
    CHECK(ndcg_at_n(ranked, {0, 9}, 2) == doctest::Approx(1.0 / (1.0 + 1.0 / std::log2(3.0))));
}

TEST_CASE("rank_all masks seen bundles and skips users without ground truth") {
    SyntheticSpec spec;
    spec.num_clusters = 2;
    spec.users_per_cluster = 15;
    const auto syn = generate_synthetic(spec);
    const auto& ds = syn.data;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    Matrix scores(ds.counts.users, ds.counts.bundles);
    for (Eigen::Index i = 0; i < scores.size(); ++i) scores.data()[i] = n(rng);
    for (Split split : {Split::Tune, Split::Test}) {
        const auto seen = seen_bundles(ds, split);
        const auto lists = rank_all(scores, ds, split, static_cast<int>(ds.counts.bundles), true);
        const auto truth = ds.user_bundles(split == Split::Tune ? ds.ub_tune : ds.ub_test);
        std::size_t with_truth = 0;
        for (const auto& t : truth) with_truth += !t.empty();
        CHECK(lists.size() == with_truth);
        for (const auto& l : lists) {
            for (NodeId b : l.bundles) CHECK(!std::binary_search(seen[l.user].begin(), seen[l.user].end(), b));
            CHECK(l.bundles.size() == ds.counts.bundles - seen[l.user].size());
        }
    }
    // test ranking also hides tune interactions
    const auto seen_test = seen_bundles(ds, Split::Test);
    for (const auto& [u, b] : ds.ub_tune.pairs)
        CHECK(std::binary_search(seen_test[u].begin(), seen_test[u].end(), b));
}

TEST_CASE("a score matrix that memorizes the split has full recall") {
    SyntheticSpec spec;
    spec.num_clusters = 2;
    const auto syn = generate_synthetic(spec);
    const auto& ds = syn.data;
    Matrix scores = Matrix::Zero(ds.counts.users, ds.counts.bundles);
    for (const auto& [u, b] : ds.ub_test.pairs) scores(u, b) = 1.0;
    const auto m = evaluate_scores(scores, ds, Split::Test, {static_cast<int>(ds.counts.bundles), 1}, false);
    CHECK(m[0].recall == 1.0);
    CHECK(m[0].ndcg == 1.0);
}

TEST_CASE("baselines") {
    SyntheticSpec spec;
    const auto syn = generate_synthetic(spec);
    const auto& ds = syn.data;
    const Matrix pop = popularity_scores(ds);
    for (const auto& [u, b] : ds.ub_train.pairs) CHECK(pop(0, b) >= 1.0);
    CHECK((pop.row(0) - pop.row(5)).cwiseAbs().maxCoeff() == 0.0);

    // Monte-Carlo check of the closed-form random-ranker recall
    const double expected = random_expected_recall(ds, Split::Test, 5, true);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    double acc = 0.0;
    constexpr int kRuns = 300;
    for (int r = 0; r < kRuns; ++r) {
        Matrix s(ds.counts.users, ds.counts.bundles);
        for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
        acc += evaluate_scores(s, ds, Split::Test, {5}, true)[0].recall;
    }
    CHECK(std::abs(acc / kRuns - expected) < 0.01);
}

TEST_CASE("predict_uncertain") {
    const InteractionDataset ds = singleton();
    RunConfig c;
    c.model.dim = 1;
    c.model.user_prototypes = 1;
    c.model.bundle_prototypes = 1;
    Model m(c, ds.counts);
    // score = u * (b + i) with b = 1, i = 0: linear in the user coordinate
    m.param("user.mean").value(0, 0) = 0.5;
    m.param("user.raw_var").value(0, 0) = 3.0;  // sigma' = 4
    m.param("bundle.mean").value(0, 0) = 1.0;
    m.param("bundle.raw_var").value(0, 0) = -1000.0;
    m.param("item.mean").value(0, 0) = 0.0;
    m.param("item.raw_var").value(0, 0) = -1000.0;
    const ModelGraphs graphs = ModelGraphs::build(ds);
    std::mt19937_64 rng(8);

    const auto p = predict_uncertain(m, graphs, 0, 0, 10000, rng);
    CHECK(p.samples_used == 10000);
    CHECK(std::abs(p.variance_score - 4.0) / 4.0 < 0.05);
    CHECK(std::abs(p.mean_score - 0.5) < 4.0 * std::sqrt(4.0 / 10000));

    const auto one = predict_uncertain(m, graphs, 0, 0, 1, rng);
    CHECK(one.samples_used == 1);
    CHECK(one.variance_score == 0.0);

    m.param("user.raw_var").value(0, 0) = -1000.0;
    const auto point = predict_uncertain(m, graphs, 0, 0, 50, rng);
    CHECK(point.variance_score == 0.0);
    CHECK(point.mean_score == score_all(m, graphs)(0, 0));

    CHECK_THROWS_AS(predict_uncertain(m, graphs, 1, 0, 5, rng), Error);
    CHECK_THROWS_AS(predict_uncertain(m, graphs, 0, 0, 0, rng), Error);
}

TEST_CASE("frequency buckets") {
    const auto b = parse_buckets("1-10,11-30,31-50,51-");
    REQUIRE(b.size() == 4);
    CHECK(b[0].lo == 1);
    CHECK(*b[0].hi == 10);
    CHECK(!b[3].hi);
    CHECK(b[3].contains(1000));
    CHECK(!b[1].contains(31));
    CHECK(b[3].label() == "51-");
    CHECK_THROWS_AS(parse_buckets("10-5"), Error);
    CHECK_THROWS_AS(parse_buckets("x-3"), Error);
    CHECK_THROWS_AS(parse_buckets(""), Error);
}

TEST_CASE("uncertainty_report with a single bucket gives the global mean") {
    SyntheticSpec spec;
    spec.num_clusters = 2;
    const auto syn = generate_synthetic(spec);
    RunConfig c;
    c.model.dim = 4;
    c.model.init.raw_var_init = 0.3;
    Model m(c, syn.data.counts);
    const auto rows = uncertainty_report(m, syn.data, NodeFamily::Users, parse_buckets("0-"));
    REQUIRE(rows.size() == 1);
    double mean = 0.0;
    const auto table = m.user_table();
    for (NodeId u = 0; u < syn.data.counts.users; ++u) mean += uncertainty_score(table, u);
    mean /= syn.data.counts.users;
    CHECK(rows[0].nodes == syn.data.counts.users);
    CHECK(rows[0].mean_uncertainty == doctest::Approx(mean).epsilon(1e-12));

    const auto split = uncertainty_report(m, syn.data, NodeFamily::Bundles, parse_buckets("1-10,11-30,31-50,51-"));
    std::size_t covered = 0;
    for (const auto& r : split) covered += r.nodes;
    CHECK(covered <= syn.data.counts.bundles);
}

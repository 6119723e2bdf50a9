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

#include <random>
#include <set>

#include "doctest.h"
#include "gpcl/core/graph.hpp"
#include "support/oracles.hpp"

using namespace gpcl;

namespace {

RelationTable table_of(std::vector<std::pair<NodeId, NodeId>> pairs) {
    RelationTable t;
    t.pairs = std::move(pairs);
    return t;
}

Matrix rows(std::initializer_list<std::initializer_list<double>> init) {
    Matrix m(static_cast<Eigen::Index>(init.size()), static_cast<Eigen::Index>(init.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : init) {
        Eigen::Index c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

std::vector<std::pair<NodeId, NodeId>> random_pairs(std::mt19937_64& rng, std::uint32_t l, std::uint32_t r) {
    std::bernoulli_distribution keep(0.3);
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId a = 0; a < l; ++a)
        for (NodeId b = 0; b < r; ++b)
            if (keep(rng)) out.emplace_back(a, b);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> n;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

}  // namespace

TEST_CASE("edge weights") {
    SUBCASE("single edge") {
        const auto g = build_graph(table_of({{0, 0}}), 1, 1);
        CHECK(g.left_to_right.to_dense()(0, 0) == 1.0);
    }
    SUBCASE("left degree four, right degree one") {
        const auto g = build_graph(table_of({{0, 0}, {0, 1}, {0, 2}, {0, 3}}), 1, 4);
        CHECK(g.left_to_right.to_dense()(0, 0) == 0.5);
    }
    SUBCASE("empty table") {
        const auto g = build_graph(table_of({}), 3, 2);
        CHECK(g.left_to_right.nnz() == 0);
        for (auto d : g.left_degrees) CHECK(d == 0);
        for (auto d : g.right_degrees) CHECK(d == 0);
    }
}

TEST_CASE("propagation examples") {
    SUBCASE("two unit-degree neighbours") {
        const auto g = build_graph(table_of({{0, 0}, {0, 1}}), 1, 2);
        const Matrix out = propagate_to_left(g, rows({{1, 0}, {0, 1}}));
        CHECK(out(0, 0) == doctest::Approx(0.70711).epsilon(1e-5));
        CHECK(out(0, 1) == doctest::Approx(0.70711).epsilon(1e-5));
    }
    SUBCASE("isolated node") {
        const auto g = build_graph(table_of({{0, 0}}), 2, 1);
        const Matrix out = propagate_to_left(g, rows({{5, 7}}));
        CHECK(out(1, 0) == 0.0);
        CHECK(out(1, 1) == 0.0);
    }
    SUBCASE("single unit edge copies the embedding") {
        const auto g = build_graph(table_of({{0, 0}}), 1, 1);
        const Matrix out = propagate_to_left(g, rows({{3, 4}}));
        CHECK(out(0, 0) == 3.0);
        CHECK(out(0, 1) == 4.0);
        const Matrix back = propagate_to_right(g, rows({{3, 4}}));
        CHECK(back(0, 1) == 4.0);
    }
}

TEST_CASE("propagate_layers") {
    SUBCASE("one layer, last layer equals a single hop") {
        std::mt19937_64 rng(3);
        const auto pairs = random_pairs(rng, 5, 4);
        const auto g = build_graph(table_of(pairs), 5, 4);
        const Matrix l0 = random_matrix(rng, 5, 3), r0 = random_matrix(rng, 4, 3);
        const auto p = propagate_layers(g, l0, r0, 1, LayerCombine::LastLayer);
        CHECK((p.left - propagate_to_left(g, r0)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((p.right - propagate_to_right(g, l0)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("mean with layer zero") {
        const auto g = build_graph(table_of({{0, 0}}), 1, 1);
        const auto p = propagate_layers(g, rows({{2, 0}}), rows({{0, 2}}), 1, LayerCombine::MeanWithLayer0);
        CHECK(p.left(0, 0) == 1.0);
        CHECK(p.left(0, 1) == 1.0);
    }
    SUBCASE("two layers on a path reach the far end") {
        // u0 - b0 - u1
        const auto pairs = std::vector<std::pair<NodeId, NodeId>>{{0, 0}, {1, 0}};
        const auto g = build_graph(table_of(pairs), 2, 1);
        Matrix l0 = Matrix::Zero(2, 2);
        l0(1, 0) = 1.0;
        const Matrix r0 = Matrix::Zero(1, 2);
        const auto p = propagate_layers(g, l0, r0, 2, LayerCombine::LastLayer);
        const Matrix a = oracle::dense_adjacency(pairs, 2, 1);
        const Matrix expect = a * (a.transpose() * l0);
        CHECK(p.left(0, 0) > 0.0);
        CHECK((p.left - expect).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("propagation matches the dense normalized adjacency on random small graphs") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::uint32_t> size(1, 16);
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint32_t l = size(rng), r = size(rng);
        const auto pairs = random_pairs(rng, l, r);
        const auto g = build_graph(table_of(pairs), l, r);
        const Matrix a = oracle::dense_adjacency(pairs, l, r);
        const Matrix left0 = random_matrix(rng, l, 3), right0 = random_matrix(rng, r, 3);
        CHECK((propagate_to_left(g, right0) - a * right0).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((propagate_to_right(g, left0) - a.transpose() * left0).cwiseAbs().maxCoeff() < 1e-12);

        for (auto combine : {LayerCombine::LastLayer, LayerCombine::MeanWithLayer0}) {
            const auto p = propagate_layers(g, left0, right0, 3, combine);
            Matrix cl = left0, cr = right0, sl = left0, sr = right0;
            for (int k = 0; k < 3; ++k) {
                Matrix nl = a * cr, nr = a.transpose() * cl;
                cl = nl;
                cr = nr;
                sl += cl;
                sr += cr;
            }
            const Matrix el = combine == LayerCombine::LastLayer ? cl : Matrix(sl / 4.0);
            const Matrix er = combine == LayerCombine::LastLayer ? cr : Matrix(sr / 4.0);
            CHECK((p.left - el).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((p.right - er).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("propagation is linear and norm bounded") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto pairs = random_pairs(rng, 8, 9);
        const auto g = build_graph(table_of(pairs), 8, 9);
        const Matrix a = random_matrix(rng, 9, 4), b = random_matrix(rng, 9, 4);
        const double c = -1.7;
        const Matrix lhs = propagate_to_left(g, a + c * b);
        const Matrix rhs = propagate_to_left(g, a) + c * propagate_to_left(g, b);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

        const Matrix out = propagate_to_left(g, a);
        const Matrix w = g.left_to_right.to_dense();
        const double max_norm = a.rowwise().norm().maxCoeff();
        for (Eigen::Index l = 0; l < out.rows(); ++l) CHECK(out.row(l).norm() <= w.row(l).sum() * max_norm + 1e-12);
    }
}

TEST_CASE("bundle pooling averages affiliated items") {
    const RelationTable bi = table_of({{0, 0}, {0, 1}, {1, 2}});
    const CsrMatrix pool = build_pooling(bi, 3, 3);
    const Matrix out = pool_bundle_items(pool, rows({{2, 0}, {0, 2}, {5, 6}}));
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 1.0);
    CHECK(out(1, 0) == 5.0);  // single item
    CHECK(out(1, 1) == 6.0);
    CHECK(out(2, 0) == 0.0);  // empty bundle
    CHECK(out(2, 1) == 0.0);

    std::mt19937_64 rng(5);
    const auto pairs = random_pairs(rng, 7, 11);
    const Matrix items = random_matrix(rng, 11, 3);
    const Matrix dense = oracle::dense_pooling(pairs, 7, 11);
    CHECK((pool_bundle_items(build_pooling(table_of(pairs), 7, 11), items) - dense * items).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("edge dropout zeroes weights without renormalizing") {
    std::mt19937_64 rng(8);
    const auto pairs = random_pairs(rng, 10, 10);
    const auto g = build_graph(table_of(pairs), 10, 10);
    std::mt19937_64 drng(1);
    const auto d = g.with_edge_dropout(0.5, drng);
    const Matrix full = g.left_to_right.to_dense(), dropped = d.left_to_right.to_dense();
    std::size_t zeroed = 0;
    for (Eigen::Index i = 0; i < full.size(); ++i) {
        const double a = full.data()[i], b = dropped.data()[i];
        CHECK((b == 0.0 || b == a));
        zeroed += (a != 0.0 && b == 0.0);
    }
    CHECK(zeroed > 0);
    CHECK((d.right_to_left.to_dense() - dropped.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.left_degrees == g.left_degrees);

    std::mt19937_64 zrng(1);
    const auto none = g.with_edge_dropout(0.0, zrng);
    CHECK((none.left_to_right.to_dense() - full).cwiseAbs().maxCoeff() == 0.0);
}

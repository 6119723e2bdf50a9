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

#include "doctest.h"
#include "gpcl/core/objectives.hpp"

using namespace gpcl;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> n;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

ViewEmbeddings random_views(std::mt19937_64& rng, Eigen::Index users, Eigen::Index bundles, Eigen::Index d) {
    return {random_matrix(rng, users, d), random_matrix(rng, bundles, d), random_matrix(rng, users, d),
            random_matrix(rng, bundles, d)};
}

}  // namespace

TEST_CASE("predict_scores") {
    ViewEmbeddings v;
    v.user_bundle_view = Matrix(1, 2);
    v.user_bundle_view << 1, 0;
    v.bundle_bundle_view = v.user_bundle_view;
    v.user_item_view = Matrix(1, 2);
    v.user_item_view << 0, 1;
    v.bundle_item_view = v.user_item_view;
    CHECK(predict_scores(v, {0}, {0})(0, 0) == 2.0);

    std::mt19937_64 rng(1);
    ViewEmbeddings r = random_views(rng, 3, 4, 5);
    ViewEmbeddings no_item = r;
    no_item.user_item_view.setZero();
    no_item.bundle_item_view.setZero();
    CHECK(predict_scores(no_item, {1}, {2})(0, 0) ==
          doctest::Approx(r.user_bundle_view.row(1).dot(r.bundle_bundle_view.row(2))).epsilon(1e-14));

    ViewEmbeddings zero = r;
    for (auto* m : {&zero.user_bundle_view, &zero.bundle_bundle_view, &zero.user_item_view, &zero.bundle_item_view})
        m->setZero();
    CHECK(predict_scores(zero, {0}, {0})(0, 0) == 0.0);

    ViewEmbeddings scaled = r;
    for (auto* m : {&scaled.user_bundle_view, &scaled.bundle_bundle_view, &scaled.user_item_view,
                    &scaled.bundle_item_view})
        *m *= 3.0;
    const Matrix a = predict_scores(r, {0, 1, 2}, {0, 1, 2, 3});
    const Matrix b = predict_scores(scaled, {0, 1, 2}, {0, 1, 2, 3});
    CHECK((b - 9.0 * a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bpr_loss") {
    Vector p(1), n(1);
    p << 0.4;
    n << 0.4;
    CHECK(bpr_loss(p, n) == doctest::Approx(0.693147).epsilon(1e-6));
    p << std::log(3.0);
    n << 0.0;
    CHECK(bpr_loss(p, n) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
    CHECK(bpr_loss(p, n) == doctest::Approx(0.287682).epsilon(1e-6));
    p << 40.0;
    const double sat = bpr_loss(p, n);
    CHECK(std::isfinite(sat));
    CHECK(sat < 1e-15);
    p << 1e6;
    CHECK(bpr_loss(p, n) >= 0.0);

    double prev = std::numeric_limits<double>::infinity();
    for (double m = -10.0; m <= 10.0; m += 0.5) {
        p << m;
        const double l = bpr_loss(p, n);
        CHECK(l > 0.0);
        CHECK(l < prev);
        prev = l;
    }
}

TEST_CASE("cross_view_infonce") {
    SUBCASE("one user and one bundle give zero") {
        std::mt19937_64 rng(2);
        const ViewEmbeddings v = random_views(rng, 1, 1, 3);
        CHECK(cross_view_infonce({0}, {0}, v, 0.25) == 0.0);
    }
    SUBCASE("orthonormal two-user case") {
        ViewEmbeddings v;
        v.user_bundle_view = Matrix::Identity(2, 2);
        v.user_item_view = Matrix::Identity(2, 2);
        v.bundle_bundle_view = Matrix::Identity(1, 2);
        v.bundle_item_view = Matrix::Identity(1, 2);
        const double user_term = infonce_aligned(v.user_bundle_view, v.user_item_view, 1.0);
        CHECK(user_term == doctest::Approx(0.31326).epsilon(1e-5));
        CHECK(cross_view_infonce({0, 1}, {0}, v, 1.0) == doctest::Approx(0.31326).epsilon(1e-5));
    }
    SUBCASE("aligned views beat anti-aligned views") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            ViewEmbeddings aligned = random_views(rng, 6, 5, 4);
            aligned.user_item_view = aligned.user_bundle_view;
            aligned.bundle_item_view = aligned.bundle_bundle_view;
            ViewEmbeddings anti = aligned;
            anti.user_item_view = -aligned.user_bundle_view;
            anti.bundle_item_view = -aligned.bundle_bundle_view;
            const IdList u{0, 1, 2, 3, 4, 5}, b{0, 1, 2, 3, 4};
            CHECK(cross_view_infonce(u, b, aligned, 0.25) < cross_view_infonce(u, b, anti, 0.25));
        }
    }
    SUBCASE("batch order does not matter") {
        std::mt19937_64 rng(4);
        const ViewEmbeddings v = random_views(rng, 6, 5, 4);
        CHECK(cross_view_infonce({0, 3, 5, 1}, {4, 2, 0}, v, 0.25) ==
              doctest::Approx(cross_view_infonce({5, 1, 0, 3}, {0, 4, 2}, v, 0.25)).epsilon(1e-13));
    }
}

TEST_CASE("total_loss") {
    LossWeights w{0.1, 0.1, 0.1, 0.25, 2};
    const std::vector<LossBreakdown> two{{1, 1, 1, 1, 0}, {3, 1, 1, 1, 0}};
    CHECK(total_loss(two, w) == doctest::Approx(2.3).epsilon(1e-14));

    LossWeights zero{0, 0, 0, 0.25, 2};
    CHECK(total_loss(two, zero) == 2.0);

    const std::vector<LossBreakdown> one{{1.5, 2, 3, 4, 0}};
    w.samples = 1;
    CHECK(total_loss(one, w) == doctest::Approx(1.5 + 0.2 + 0.3 + 0.4).epsilon(1e-14));

    // linear in each weight with the others fixed
    auto at = [&](double g) {
        LossWeights v{g, 0.1, 0.1, 0.25, 2};
        return total_loss(two, v);
    };
    CHECK(at(0.3) - at(0.2) == doctest::Approx(at(0.2) - at(0.1)).epsilon(1e-12));

    try {
        total_loss({}, w);
        FAIL("expected EmptySampleList");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySampleList);
    }
}

TEST_CASE("tape losses match value implementations") {
    std::mt19937_64 rng(8);
    const Matrix a = random_matrix(rng, 5, 3), b = random_matrix(rng, 5, 3);
    ad::Tape t;
    CHECK(t.value(ad::infonce_aligned(t, t.constant(a), t.constant(b), 0.3))(0, 0) ==
          doctest::Approx(infonce_aligned(a, b, 0.3)).epsilon(1e-13));
    const Vector p = a.col(0), n = b.col(0);
    CHECK(t.value(ad::bpr_loss(t, t.constant(p), t.constant(n)))(0, 0) ==
          doctest::Approx(bpr_loss(p, n)).epsilon(1e-13));
}

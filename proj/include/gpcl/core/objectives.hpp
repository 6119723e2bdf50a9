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

#include <vector>

#include "gpcl/core/autodiff.hpp"
#include "gpcl/core/matrix.hpp"

namespace gpcl {

/// Users and bundles as seen through the bundle view (U-B graph) and the
/// item view (U-I graph plus bundle pooling).
struct ViewEmbeddings {
    Matrix user_bundle_view;    // M x D
    Matrix bundle_bundle_view;  // O x D
    Matrix user_item_view;      // M x D
    Matrix bundle_item_view;    // O x D
};

struct LossWeights {
    double gamma_cl = 0.04;
    double gamma_pcl = 0.1;
    double gamma_ot = 0.1;
    double tau = 0.25;
    int samples = 1;  // T

    void validate() const;
};

struct LossBreakdown {
    double l_bpr = 0.0;
    double l_cl = 0.0;
    double l_proto = 0.0;
    double l_ot = 0.0;
    double total = 0.0;
};

/// y[u][b] = <e_u^B, e_b^B> + <e_u^I, e_b^I>, for every listed user x bundle.
Matrix predict_scores(const ViewEmbeddings& v, const IdList& users, const IdList& bundles);

/// sum -ln sigmoid(pos - neg), via softplus(neg - pos).
double bpr_loss(const Vector& pos, const Vector& neg);

/// Mean over anchors of -log softmax(<a_i, p_j> / tau)[i], rows L2-normalized.
/// Row i of `positives` is the positive for anchor i; the others are negatives.
double infonce_aligned(const Matrix& anchors, const Matrix& positives, double tau);

/// L_CL^U + L_CL^B over the distinct batch users and bundles.
double cross_view_infonce(const IdList& batch_users, const IdList& batch_bundles,
                          const ViewEmbeddings& v, double tau);

/// (1/T) sum_t [l_bpr + gamma_cl l_cl + gamma_pcl l_proto + gamma_ot l_ot]
double total_loss(const std::vector<LossBreakdown>& per_sample, const LossWeights& w);

/// Fills `total` from the four components.
LossBreakdown weighted(LossBreakdown parts, const LossWeights& w);

/// Distinct ids in order of first appearance.
IdList unique_in_order(const IdList& ids);

namespace ad {

Var bpr_loss(Tape& t, Var pos, Var neg);
Var infonce_aligned(Tape& t, Var anchors, Var positives, double tau);

}  // namespace ad

}  // namespace gpcl

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

#include "gpcl/core/objectives.hpp"

#include <cmath>
#include <unordered_set>

namespace gpcl {

void LossWeights::validate() const {
    if (!(tau > 0.0)) fail(ErrorCode::InvalidConfigValue, "loss.tau must be > 0");
    if (samples < 1) fail(ErrorCode::InvalidConfigValue, "model.samples must be >= 1");
    if (gamma_cl < 0.0 || gamma_pcl < 0.0 || gamma_ot < 0.0) {
        fail(ErrorCode::InvalidConfigValue, "loss weights must be nonnegative");
    }
}

Matrix predict_scores(const ViewEmbeddings& v, const IdList& users, const IdList& bundles) {
    const auto m = v.user_bundle_view.rows();
    const auto o = v.bundle_bundle_view.rows();
    Matrix ub(static_cast<Eigen::Index>(users.size()), v.user_bundle_view.cols());
    Matrix ui(static_cast<Eigen::Index>(users.size()), v.user_item_view.cols());
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (users[i] >= m) fail(ErrorCode::IdOutOfRange, "predict_scores: user " + std::to_string(users[i]));
        ub.row(static_cast<Eigen::Index>(i)) = v.user_bundle_view.row(users[i]);
        ui.row(static_cast<Eigen::Index>(i)) = v.user_item_view.row(users[i]);
    }
    Matrix bb(static_cast<Eigen::Index>(bundles.size()), v.bundle_bundle_view.cols());
    Matrix bi(static_cast<Eigen::Index>(bundles.size()), v.bundle_item_view.cols());
    for (std::size_t j = 0; j < bundles.size(); ++j) {
        if (bundles[j] >= o) fail(ErrorCode::IdOutOfRange, "predict_scores: bundle " + std::to_string(bundles[j]));
        bb.row(static_cast<Eigen::Index>(j)) = v.bundle_bundle_view.row(bundles[j]);
        bi.row(static_cast<Eigen::Index>(j)) = v.bundle_item_view.row(bundles[j]);
    }
    return ub * bb.transpose() + ui * bi.transpose();
}

double bpr_loss(const Vector& pos, const Vector& neg) {
    if (pos.size() != neg.size()) fail(ErrorCode::DimensionMismatch, "bpr_loss: length mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < pos.size(); ++i) {
        const double x = neg(i) - pos(i);
        total += std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    }
    return total;
}

double infonce_aligned(const Matrix& anchors, const Matrix& positives, double tau) {
    ad::Tape t;
    ad::Var a = t.constant(anchors);
    ad::Var p = t.constant(positives);
    return t.value(ad::infonce_aligned(t, a, p, tau))(0, 0);
}

IdList unique_in_order(const IdList& ids) {
    IdList out;
    std::unordered_set<NodeId> seen;
    for (NodeId id : ids)
        if (seen.insert(id).second) out.push_back(id);
    return out;
}

namespace {

Matrix gather(const Matrix& m, const IdList& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m.rows()) fail(ErrorCode::IdOutOfRange, "row " + std::to_string(rows[i]));
        out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    }
    return out;
}

}  // namespace

double cross_view_infonce(const IdList& batch_users, const IdList& batch_bundles,
                          const ViewEmbeddings& v, double tau) {
    if (batch_users.empty() || batch_bundles.empty()) fail(ErrorCode::EmptyBatch, "cross_view_infonce: empty batch");
    const IdList users = unique_in_order(batch_users);
    const IdList bundles = unique_in_order(batch_bundles);
    return infonce_aligned(gather(v.user_bundle_view, users), gather(v.user_item_view, users), tau) +
           infonce_aligned(gather(v.bundle_bundle_view, bundles), gather(v.bundle_item_view, bundles), tau);
}

LossBreakdown weighted(LossBreakdown parts, const LossWeights& w) {
    parts.total = parts.l_bpr + w.gamma_cl * parts.l_cl + w.gamma_pcl * parts.l_proto + w.gamma_ot * parts.l_ot;
    return parts;
}

double total_loss(const std::vector<LossBreakdown>& per_sample, const LossWeights& w) {
    if (per_sample.empty()) fail(ErrorCode::EmptySampleList, "total_loss: no samples");
    double total = 0.0;
    for (const auto& s : per_sample) total += weighted(s, w).total;
    return total / static_cast<double>(per_sample.size());
}

namespace ad {

Var bpr_loss(Tape& t, Var pos, Var neg) {
    return sum(t, softplus(t, sub(t, neg, pos)));
}

Var infonce_aligned(Tape& t, Var anchors, Var positives, double tau) {
    const auto n = t.value(anchors).rows();
    if (n == 0) fail(ErrorCode::EmptyBatch, "infonce: no anchors");
    require_shape(t.value(positives), n, t.value(anchors).cols(), "infonce positives");
    Var logits = scale(t, matmul_nt(t, l2_normalize_rows(t, anchors), l2_normalize_rows(t, positives)), 1.0 / tau);
    std::vector<std::size_t> diag(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = i;
    return scale(t, mean(t, pick_per_row(t, log_softmax_rows(t, logits), diag)), -1.0);
}

}  // namespace ad

}  // namespace gpcl

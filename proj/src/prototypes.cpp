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

#include "gpcl/core/prototypes.hpp"

#include <cmath>

namespace gpcl {

void OtConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorCode::InvalidConfigValue, "ot.lambda must be > 0");
    if (max_iters < 1) fail(ErrorCode::InvalidConfigValue, "ot.max_iters must be >= 1");
    if (!(tol > 0.0)) fail(ErrorCode::InvalidConfigValue, "ot.tol must be > 0");
}

Matrix similarity(const Matrix& emb, const Matrix& protos) {
    if (emb.cols() != protos.cols()) fail(ErrorCode::DimensionMismatch, "similarity: widths differ");
    return emb * protos.transpose();
}

namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::ArrayXd>& x) {
    const double mx = x.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((x - mx).exp().sum());
}

}  // namespace

Assignment sinkhorn_assign(const Matrix& s, const OtConfig& cfg) {
    cfg.validate();
    if (s.rows() == 0 || s.cols() == 0) fail(ErrorCode::DimensionMismatch, "sinkhorn: empty score matrix");
    if (!s.allFinite()) fail(ErrorCode::NumericOverflow, "sinkhorn: non-finite scores");

    const Eigen::Index m = s.rows();
    const Eigen::Index k = s.cols();
    const double log_m = std::log(static_cast<double>(m));
    const double log_k = std::log(static_cast<double>(k));

    // Kernel exp(S / lambda) with each row's max subtracted; the shift is
    // folded back into the row potentials at the end.
    Eigen::ArrayXXd logits = (s / cfg.lambda).array();
    Eigen::ArrayXd row_shift(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        row_shift(i) = logits.row(i).maxCoeff();
        logits.row(i) -= row_shift(i);
    }

    Eigen::ArrayXd f = Eigen::ArrayXd::Zero(m);  // log row scalings
    Eigen::ArrayXd g = Eigen::ArrayXd::Zero(k);  // log column scalings
    Assignment out;
    out.fewer_rows_than_prototypes = m < k;
    Eigen::ArrayXXd q(m, k);

    for (int it = 1; it <= cfg.max_iters; ++it) {
        for (Eigen::Index j = 0; j < k; ++j) g(j) = -log_k - log_sum_exp(logits.col(j) + f);
        for (Eigen::Index i = 0; i < m; ++i) f(i) = -log_m - log_sum_exp(logits.row(i).transpose() + g);

        for (Eigen::Index i = 0; i < m; ++i) q.row(i) = (logits.row(i) + f(i) + g.transpose()).exp();
        out.row_error = (q.rowwise().sum() - 1.0 / static_cast<double>(m)).abs().maxCoeff();
        out.col_error = (q.colwise().sum() - 1.0 / static_cast<double>(k)).abs().maxCoeff();
        out.iterations = it;
        if (out.row_error < cfg.tol && out.col_error < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    out.q = q.matrix();
    out.log_row_scale = (f - row_shift).matrix();
    out.log_col_scale = g.matrix();
    return out;
}

double entropy(const Matrix& q) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        const double v = q.data()[i];
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

std::vector<std::size_t> hard_assignment(const Matrix& q) {
    std::vector<std::size_t> out(static_cast<std::size_t>(q.rows()), 0);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < q.cols(); ++c)
            if (q(r, c) > q(r, best)) best = c;
        out[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
    }
    return out;
}

namespace {

Matrix log_softmax_rows(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out.row(r) = x.row(r).array() - log_sum_exp(x.row(r).transpose().array());
    }
    return out;
}

}  // namespace

double proto_infonce(const Matrix& emb, const Matrix& protos, const std::vector<std::size_t>& assigned,
                     double tau) {
    if (static_cast<Eigen::Index>(assigned.size()) != emb.rows()) {
        fail(ErrorCode::DimensionMismatch, "proto_infonce: one assignment per row required");
    }
    const Matrix logp = log_softmax_rows(similarity(emb, protos) / tau);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < logp.rows(); ++r) {
        if (static_cast<Eigen::Index>(assigned[r]) >= logp.cols()) fail(ErrorCode::IdOutOfRange, "proto_infonce");
        loss -= logp(r, static_cast<Eigen::Index>(assigned[r]));
    }
    return loss;
}

double ot_loss(const Matrix& q, const Matrix& s, double tau) {
    require_shape(q, s.rows(), s.cols(), "ot_loss");
    return -q.cwiseProduct(log_softmax_rows(s / tau)).sum();
}

namespace ad {

ProtoLosses prototype_losses(Tape& t, Var emb, Var protos, const Matrix& q, double tau) {
    Var s = matmul_nt(t, emb, protos);
    require_shape(q, t.value(s).rows(), t.value(s).cols(), "assignment");
    Var logp = log_softmax_rows(t, scale(t, s, 1.0 / tau));
    Var infonce = scale(t, sum(t, pick_per_row(t, logp, hard_assignment(q))), -1.0);
    Var ot = scale(t, frobenius_dot(t, logp, q), -1.0);
    return {infonce, ot};
}

}  // namespace ad

ProtoStepResult prototype_step(ad::Tape& t, ad::Var user_emb, ad::Var bundle_emb,
                               ad::Var user_protos, ad::Var bundle_protos,
                               const ProtoStepConfig& cfg, const IdList& batch_users,
                               const IdList& batch_bundles, const Matrix* cached_user_q,
                               const Matrix* cached_bundle_q) {
    if (cfg.scope == ProtoScope::InBatch) {
        if (batch_users.empty() || batch_bundles.empty()) fail(ErrorCode::EmptyBatch, "prototype_step: empty batch");
        user_emb = ad::gather_rows(t, user_emb, batch_users);
        bundle_emb = ad::gather_rows(t, bundle_emb, batch_bundles);
    }
    ProtoStepResult out;
    auto family = [&](ad::Var emb, ad::Var protos, const Matrix* cached, Matrix& q_out) {
        if (cached != nullptr && cached->rows() == t.value(emb).rows() &&
            cached->cols() == t.value(protos).rows()) {
            q_out = *cached;
        } else {
            Assignment a = sinkhorn_assign(similarity(t.value(emb), t.value(protos)), cfg.ot);
            out.converged = out.converged && a.converged;
            q_out = std::move(a.q);
        }
        return ad::prototype_losses(t, emb, protos, q_out, cfg.tau);
    };
    ad::ProtoLosses users = family(user_emb, user_protos, cached_user_q, out.user_q);
    ad::ProtoLosses bundles = family(bundle_emb, bundle_protos, cached_bundle_q, out.bundle_q);
    out.infonce = ad::add(t, users.infonce, bundles.infonce);
    out.ot = ad::add(t, users.ot, bundles.ot);
    return out;
}

}  // namespace gpcl

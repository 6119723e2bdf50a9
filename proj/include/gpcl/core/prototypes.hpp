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

#include <cstddef>
#include <optional>
#include <vector>

#include "gpcl/core/autodiff.hpp"
#include "gpcl/core/matrix.hpp"

namespace gpcl {

enum class ProtoScope { FullNodeSet, InBatch };

struct OtConfig {
    double lambda = 0.05;  // entropy weight
    int max_iters = 100;
    double tol = 1e-6;     // max marginal error

    void validate() const;
};

/// Equipartitioned soft assignment of M rows onto K prototypes:
/// Q = diag(row_scale) * exp(S / lambda) * diag(col_scale), rows summing to
/// 1/M and columns to 1/K.
struct Assignment {
    Matrix q;
    Vector log_row_scale;  // length M
    Vector log_col_scale;  // length K
    int iterations = 0;
    bool converged = false;
    double row_error = 0.0;
    double col_error = 0.0;
    bool fewer_rows_than_prototypes = false;

    Vector row_scale() const { return log_row_scale.array().exp(); }
    Vector col_scale() const { return log_col_scale.array().exp(); }
};

/// S = emb * protos^T
Matrix similarity(const Matrix& emb, const Matrix& protos);

/// Alternating column/row renormalization of exp(S / lambda), carried out in
/// the log domain. Stops once both marginal errors drop below cfg.tol or
/// after cfg.max_iters sweeps.
Assignment sinkhorn_assign(const Matrix& s, const OtConfig& cfg);

/// -sum Q log Q
double entropy(const Matrix& q);

/// Row-wise argmax of Q; ties go to the lowest prototype index.
std::vector<std::size_t> hard_assignment(const Matrix& q);

/// sum_rows -log softmax(emb . protos^T / tau)[assigned]
double proto_infonce(const Matrix& emb, const Matrix& protos,
                     const std::vector<std::size_t>& assigned, double tau);

/// <Q, -log softmax(S / tau)>, with Q a constant.
double ot_loss(const Matrix& q, const Matrix& s, double tau);

namespace ad {

struct ProtoLosses {
    Var infonce;
    Var ot;
};

/// Both prototype losses for one node family. q is treated as a constant.
ProtoLosses prototype_losses(Tape& t, Var emb, Var protos, const Matrix& q, double tau);

}  // namespace ad

struct ProtoStepConfig {
    OtConfig ot;
    ProtoScope scope = ProtoScope::FullNodeSet;
    double tau = 0.25;
};

struct ProtoStepResult {
    ad::Var infonce;  // user + bundle
    ad::Var ot;       // user + bundle
    Matrix user_q;
    Matrix bundle_q;
    bool converged = true;
};

/// Prototype losses summed over users and bundles. With InBatch scope only
/// the listed rows take part. A provided assignment is reused instead of
/// solving Sinkhorn again; its row count must match the scoped embeddings.
ProtoStepResult prototype_step(ad::Tape& t, ad::Var user_emb, ad::Var bundle_emb,
                               ad::Var user_protos, ad::Var bundle_protos,
                               const ProtoStepConfig& cfg, const IdList& batch_users,
                               const IdList& batch_bundles,
                               const Matrix* cached_user_q = nullptr,
                               const Matrix* cached_bundle_q = nullptr);

}  // namespace gpcl

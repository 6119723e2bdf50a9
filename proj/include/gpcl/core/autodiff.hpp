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
#include <functional>
#include <limits>
#include <vector>

#include "gpcl/core/graph.hpp"
#include "gpcl/core/matrix.hpp"

// Reverse-mode differentiation over dense matrices. Nodes are appended in
// evaluation order, so the tape is already topologically sorted and backward
// is a single reverse sweep.
namespace gpcl::ad {

struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
    bool valid() const { return id != std::numeric_limits<std::size_t>::max(); }
};

class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t self)>;

    /// Value with no gradient path.
    Var constant(Matrix value);
    /// Trainable leaf. backward() adds its gradient into *grad_sink, which
    /// must have the same shape as value and outlive the sweep.
    Var parameter(const Matrix& value, Matrix* grad_sink);

    const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
    /// Gradient of the last backward() target; zero-sized if none reached v.
    const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Seeds d(loss)/d(loss) = 1 and sweeps backwards. loss must be 1x1.
    void backward(Var loss);

    // Op authoring.
    Var record(Matrix value, bool requires_grad, Backward backward);
    /// grad(v) += delta, allocating on first use. No-op for constants.
    void accumulate(Var v, const Matrix& delta);
    void accumulate(Var v, std::size_t row, const Eigen::Ref<const Eigen::RowVectorXd>& delta);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Backward backward;
        Matrix* sink = nullptr;
    };
    Matrix& grad_storage(std::size_t id);

    std::vector<Node> nodes_;
};

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var hadamard(Tape& t, Var a, Var b);
Var matmul(Tape& t, Var a, Var b);
/// a * b^T
Var matmul_nt(Tape& t, Var a, Var b);
/// a * x for a sparse constant a; a_t must be its transpose.
Var spmm(Tape& t, const CsrMatrix& a, const CsrMatrix& a_t, Var x);

Var exp(Tape& t, Var a);
Var log(Tape& t, Var a);
Var sqrt(Tape& t, Var a);
/// ELU(a) + 1 with alpha = 1.
Var elu_plus_one(Tape& t, Var a);
/// log(1 + exp(a)), evaluated without overflow.
Var softplus(Tape& t, Var a);

/// mu + sqrt(ELU(raw_var) + 1) * noise, with noise constant. The derivative
/// with respect to raw_var is computed in closed form so it stays finite as
/// the transformed variance underflows to zero.
Var reparameterize(Tape& t, Var mu, Var raw_var, const Matrix& noise);

Var gather_rows(Tape& t, Var a, const IdList& rows);
/// Per-row dot product, n x 1.
Var row_dot(Tape& t, Var a, Var b);
/// Rows scaled to unit Euclidean norm (norm floored at 1e-12).
Var l2_normalize_rows(Tape& t, Var a);
Var log_softmax_rows(Tape& t, Var a);
/// out[r] = a[r, index[r]], n x 1.
Var pick_per_row(Tape& t, Var a, const std::vector<std::size_t>& index);

Var sum(Tape& t, Var a);
Var mean(Tape& t, Var a);
/// sum(a .* weights) for a constant weight matrix.
Var frobenius_dot(Tape& t, Var a, const Matrix& weights);

}  // namespace gpcl::ad

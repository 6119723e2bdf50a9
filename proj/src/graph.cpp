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

#include "gpcl/core/graph.hpp"

#include <algorithm>
#include <cmath>

namespace gpcl {

CsrMatrix::CsrMatrix(std::uint32_t rows, std::uint32_t cols, std::vector<std::uint32_t> row_ptr,
                     std::vector<NodeId> col_idx, std::vector<double> weights)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      weights_(std::move(weights)) {
    if (row_ptr_.size() != rows_ + 1u || col_idx_.size() != weights_.size() ||
        row_ptr_.back() != col_idx_.size()) {
        fail(ErrorCode::DimensionMismatch, "inconsistent CSR arrays");
    }
}

Matrix CsrMatrix::multiply(const Matrix& dense) const {
    if (dense.rows() != cols_) {
        fail(ErrorCode::DimensionMismatch, "sparse multiply: expected " + std::to_string(cols_) +
                                               " rows, got " + std::to_string(dense.rows()));
    }
    Matrix out = Matrix::Zero(rows_, dense.cols());
    for (std::uint32_t r = 0; r < rows_; ++r) {
        for (std::uint32_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            out.row(r) += weights_[k] * dense.row(col_idx_[k]);
        }
    }
    return out;
}

Matrix CsrMatrix::multiply_transposed(const Matrix& dense) const {
    if (dense.rows() != rows_) {
        fail(ErrorCode::DimensionMismatch, "sparse multiply^T: expected " + std::to_string(rows_) +
                                               " rows, got " + std::to_string(dense.rows()));
    }
    Matrix out = Matrix::Zero(cols_, dense.cols());
    for (std::uint32_t r = 0; r < rows_; ++r) {
        for (std::uint32_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            out.row(col_idx_[k]) += weights_[k] * dense.row(r);
        }
    }
    return out;
}

CsrMatrix CsrMatrix::transposed() const {
    std::vector<std::uint32_t> ptr(cols_ + 1, 0);
    for (NodeId c : col_idx_) ++ptr[c + 1];
    for (std::uint32_t c = 0; c < cols_; ++c) ptr[c + 1] += ptr[c];
    std::vector<NodeId> idx(nnz());
    std::vector<double> w(nnz());
    std::vector<std::uint32_t> cursor(ptr.begin(), ptr.end() - 1);
    for (std::uint32_t r = 0; r < rows_; ++r) {
        for (std::uint32_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const std::uint32_t dst = cursor[col_idx_[k]]++;
            idx[dst] = r;
            w[dst] = weights_[k];
        }
    }
    return CsrMatrix(cols_, rows_, std::move(ptr), std::move(idx), std::move(w));
}

Matrix CsrMatrix::to_dense() const {
    Matrix out = Matrix::Zero(rows_, cols_);
    for (std::uint32_t r = 0; r < rows_; ++r)
        for (std::uint32_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out(r, col_idx_[k]) += weights_[k];
    return out;
}

namespace {

CsrMatrix csr_from_pairs(const RelationTable& table, std::uint32_t rows, std::uint32_t cols,
                         const std::vector<double>& edge_weights) {
    std::vector<std::uint32_t> ptr(rows + 1, 0);
    for (const auto& p : table.pairs) ++ptr[p.first + 1];
    for (std::uint32_t r = 0; r < rows; ++r) ptr[r + 1] += ptr[r];
    std::vector<NodeId> idx(table.size());
    std::vector<double> w(table.size());
    std::vector<std::uint32_t> cursor(ptr.begin(), ptr.end() - 1);
    for (std::size_t e = 0; e < table.size(); ++e) {
        const auto& [l, r] = table.pairs[e];
        const std::uint32_t dst = cursor[l]++;
        idx[dst] = r;
        w[dst] = edge_weights[e];
    }
    // Sort each row by column so layout does not depend on input order.
    for (std::uint32_t r = 0; r < rows; ++r) {
        std::vector<std::pair<NodeId, double>> row;
        for (std::uint32_t k = ptr[r]; k < ptr[r + 1]; ++k) row.emplace_back(idx[k], w[k]);
        std::sort(row.begin(), row.end());
        for (std::uint32_t k = ptr[r]; k < ptr[r + 1]; ++k) {
            idx[k] = row[k - ptr[r]].first;
            w[k] = row[k - ptr[r]].second;
        }
    }
    return CsrMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(w));
}

}  // namespace

BipartiteGraph build_graph(const RelationTable& table, std::uint32_t left_count,
                           std::uint32_t right_count) {
    BipartiteGraph g;
    g.left_count = left_count;
    g.right_count = right_count;
    g.left_degrees.assign(left_count, 0);
    g.right_degrees.assign(right_count, 0);
    for (const auto& [l, r] : table.pairs) {
        if (l >= left_count || r >= right_count) fail(ErrorCode::IdOutOfRange, "edge out of range");
        ++g.left_degrees[l];
        ++g.right_degrees[r];
    }
    std::vector<double> w(table.size());
    for (std::size_t e = 0; e < table.size(); ++e) {
        const auto& [l, r] = table.pairs[e];
        w[e] = 1.0 / std::sqrt(static_cast<double>(g.left_degrees[l]) *
                               static_cast<double>(g.right_degrees[r]));
    }
    g.left_to_right = csr_from_pairs(table, left_count, right_count, w);
    g.right_to_left = g.left_to_right.transposed();
    return g;
}

BipartiteGraph build_graph(const RelationTable& table, const EntityCounts& counts) {
    switch (table.kind) {
        case RelationKind::UserBundle: return build_graph(table, counts.users, counts.bundles);
        case RelationKind::UserItem: return build_graph(table, counts.users, counts.items);
        case RelationKind::BundleItem: return build_graph(table, counts.bundles, counts.items);
    }
    fail(ErrorCode::InvalidSpec, "unknown relation kind");
}

BipartiteGraph BipartiteGraph::with_edge_dropout(double p, std::mt19937_64& rng) const {
    if (p <= 0.0) return *this;
    BipartiteGraph out = *this;
    std::bernoulli_distribution drop(p);
    std::vector<double> w = left_to_right.weights();
    for (double& x : w)
        if (drop(rng)) x = 0.0;
    out.left_to_right = CsrMatrix(left_count, right_count, left_to_right.row_ptr(),
                                  left_to_right.col_idx(), std::move(w));
    out.right_to_left = out.left_to_right.transposed();
    return out;
}

Matrix propagate_to_left(const BipartiteGraph& g, const Matrix& right_emb) {
    return g.left_to_right.multiply(right_emb);
}

Matrix propagate_to_right(const BipartiteGraph& g, const Matrix& left_emb) {
    return g.right_to_left.multiply(left_emb);
}

Propagated propagate_layers(const BipartiteGraph& g, const Matrix& left0, const Matrix& right0,
                            int layers, LayerCombine combine) {
    if (layers < 1) fail(ErrorCode::InvalidSpec, "layers must be >= 1");
    if (left0.cols() != right0.cols()) fail(ErrorCode::DimensionMismatch, "embedding widths differ");
    Matrix left = left0, right = right0;
    Matrix left_sum = left0, right_sum = right0;
    for (int k = 0; k < layers; ++k) {
        Matrix next_left = propagate_to_left(g, right);
        Matrix next_right = propagate_to_right(g, left);
        left = std::move(next_left);
        right = std::move(next_right);
        left_sum += left;
        right_sum += right;
    }
    if (combine == LayerCombine::LastLayer) return {std::move(left), std::move(right)};
    const double inv = 1.0 / static_cast<double>(layers + 1);
    return {left_sum * inv, right_sum * inv};
}

CsrMatrix build_pooling(const RelationTable& bundle_items, std::uint32_t bundles, std::uint32_t items) {
    std::vector<std::uint32_t> size(bundles, 0);
    for (const auto& [b, i] : bundle_items.pairs) {
        if (b >= bundles || i >= items) fail(ErrorCode::IdOutOfRange, "bundle-item pair out of range");
        ++size[b];
    }
    std::vector<double> w(bundle_items.size());
    for (std::size_t e = 0; e < w.size(); ++e) w[e] = 1.0 / static_cast<double>(size[bundle_items.pairs[e].first]);
    return csr_from_pairs(bundle_items, bundles, items, w);
}

Matrix pool_bundle_items(const CsrMatrix& pooling, const Matrix& item_emb) {
    return pooling.multiply(item_emb);
}

}  // namespace gpcl

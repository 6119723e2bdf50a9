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

#include <cstdint>
#include <random>
#include <vector>

#include "gpcl/core/dataset.hpp"
#include "gpcl/core/matrix.hpp"

namespace gpcl {

/// Compressed sparse rows with real weights.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::uint32_t rows, std::uint32_t cols,
              std::vector<std::uint32_t> row_ptr, std::vector<NodeId> col_idx,
              std::vector<double> weights);

    std::uint32_t rows() const { return rows_; }
    std::uint32_t cols() const { return cols_; }
    std::size_t nnz() const { return col_idx_.size(); }

    const std::vector<std::uint32_t>& row_ptr() const { return row_ptr_; }
    const std::vector<NodeId>& col_idx() const { return col_idx_; }
    const std::vector<double>& weights() const { return weights_; }

    /// this * dense
    Matrix multiply(const Matrix& dense) const;
    /// this^T * dense, without materializing the transpose.
    Matrix multiply_transposed(const Matrix& dense) const;

    CsrMatrix transposed() const;
    Matrix to_dense() const;

private:
    std::uint32_t rows_ = 0;
    std::uint32_t cols_ = 0;
    std::vector<std::uint32_t> row_ptr_{0};
    std::vector<NodeId> col_idx_;
    std::vector<double> weights_;
};

/// Symmetrically normalized bipartite adjacency, weight(l, r) =
/// 1 / sqrt(deg(l) * deg(r)).
struct BipartiteGraph {
    std::uint32_t left_count = 0;
    std::uint32_t right_count = 0;
    std::vector<std::uint32_t> left_degrees;
    std::vector<std::uint32_t> right_degrees;
    CsrMatrix left_to_right;  // left_count x right_count
    CsrMatrix right_to_left;  // its transpose

    /// Copy with each edge independently zeroed with probability p. Degrees
    /// and the surviving weights are left untouched.
    BipartiteGraph with_edge_dropout(double p, std::mt19937_64& rng) const;
};

BipartiteGraph build_graph(const RelationTable& table, std::uint32_t left_count,
                           std::uint32_t right_count);
BipartiteGraph build_graph(const RelationTable& table, const EntityCounts& counts);

/// out[l] = sum_r weight(l, r) * right_emb[r]
Matrix propagate_to_left(const BipartiteGraph& g, const Matrix& right_emb);
/// out[r] = sum_l weight(l, r) * left_emb[l]
Matrix propagate_to_right(const BipartiteGraph& g, const Matrix& left_emb);

enum class LayerCombine { LastLayer, MeanWithLayer0 };

struct Propagated {
    Matrix left;
    Matrix right;
};

Propagated propagate_layers(const BipartiteGraph& g, const Matrix& left0, const Matrix& right0,
                            int layers, LayerCombine combine);

/// Row-normalized pooling matrix (bundles x items) with weight 1/|N_b|.
CsrMatrix build_pooling(const RelationTable& bundle_items, std::uint32_t bundles, std::uint32_t items);

/// e_b = (1/|N_b|) sum_{i in N_b} e_i; empty bundles give zero rows.
Matrix pool_bundle_items(const CsrMatrix& pooling, const Matrix& item_emb);

}  // namespace gpcl

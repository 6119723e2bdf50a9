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

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "gpcl/core/error.hpp"

namespace gpcl {

// Dense storage for embeddings, prototypes and intermediate tensors. Row-major
// so a node's embedding is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using NodeId = std::uint32_t;
using IdList = std::vector<NodeId>;

inline void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                          const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        fail(ErrorCode::DimensionMismatch,
             std::string(what) + ": expected " + std::to_string(rows) + "x" +
                 std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                 std::to_string(m.cols()));
    }
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace gpcl

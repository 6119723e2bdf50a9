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

#include "gpcl/core/gaussian.hpp"

#include <cmath>

namespace gpcl {

double transform_variance(double raw) { return raw >= 0.0 ? raw + 1.0 : std::exp(raw); }

Matrix transform_variance(const Matrix& raw) {
    return raw.unaryExpr([](double x) { return transform_variance(x); });
}

GaussianTable init_table(Eigen::Index rows, Eigen::Index dim, const GaussianInit& init,
                         std::mt19937_64& rng) {
    if (rows <= 0 || dim <= 0) fail(ErrorCode::InvalidSpec, "table shape must be positive");
    if (!(init.mean_scale >= 0.0) || !std::isfinite(init.mean_scale) || !std::isfinite(init.raw_var_init)) {
        fail(ErrorCode::InvalidSpec, "invalid Gaussian init");
    }
    GaussianTable t;
    t.mean = Matrix::Zero(rows, dim);
    if (init.mean_scale > 0.0) {
        std::normal_distribution<double> normal(0.0, init.mean_scale);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < dim; ++c) t.mean(r, c) = normal(rng);
    }
    t.raw_variance = Matrix::Constant(rows, dim, init.raw_var_init);
    return t;
}

GaussianTable init_table(Eigen::Index rows, Eigen::Index dim, const GaussianInit& init,
                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return init_table(rows, dim, init, rng);
}

Matrix draw_noise(Eigen::Index rows, Eigen::Index dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix out(rows, dim);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) out(r, c) = normal(rng);
    return out;
}

Matrix sample(const GaussianTable& table, const Matrix& noise) {
    require_shape(table.raw_variance, table.mean.rows(), table.mean.cols(), "raw variance");
    require_shape(noise, table.mean.rows(), table.mean.cols(), "noise");
    return table.mean + transform_variance(table.raw_variance).cwiseSqrt().cwiseProduct(noise);
}

double uncertainty_score(const GaussianTable& table, NodeId node) {
    if (node >= table.rows()) fail(ErrorCode::IdOutOfRange, "uncertainty_score: node out of range");
    double total = 0.0;
    for (Eigen::Index i = 0; i < table.dim(); ++i) {
        total += std::sqrt(transform_variance(table.raw_variance(node, i))) /
                 (std::abs(table.mean(node, i)) + kUncertaintyGuard);
    }
    return total;
}

}  // namespace gpcl

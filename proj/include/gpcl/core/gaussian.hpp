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

#include "gpcl/core/matrix.hpp"

namespace gpcl {

/// Diagonal Gaussian per node: mean and unconstrained raw variance.
struct GaussianTable {
    Matrix mean;
    Matrix raw_variance;

    Eigen::Index rows() const { return mean.rows(); }
    Eigen::Index dim() const { return mean.cols(); }
};

struct GaussianInit {
    double mean_scale = 0.1;
    double raw_var_init = -2.0;
};

/// ELU(x) + 1 with alpha = 1: x + 1 for x >= 0, exp(x) below.
double transform_variance(double raw);
Matrix transform_variance(const Matrix& raw);

/// mean ~ N(0, mean_scale^2), raw variance constant.
GaussianTable init_table(Eigen::Index rows, Eigen::Index dim, const GaussianInit& init,
                         std::uint64_t seed);
GaussianTable init_table(Eigen::Index rows, Eigen::Index dim, const GaussianInit& init,
                         std::mt19937_64& rng);

/// i.i.d. standard normal noise, one value per (node, dimension).
Matrix draw_noise(Eigen::Index rows, Eigen::Index dim, std::mt19937_64& rng);

/// mu + sqrt(sigma') * eps.
Matrix sample(const GaussianTable& table, const Matrix& noise);

inline constexpr double kUncertaintyGuard = 1e-12;

/// sum_i sqrt(sigma'_i) / (|mu_i| + guard)
double uncertainty_score(const GaussianTable& table, NodeId node);

}  // namespace gpcl

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

#include "gpcl/core/optimizer.hpp"

#include <cmath>

namespace gpcl {

AdamState make_adam(const std::vector<Parameter>& params, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    for (const auto& p : params) {
        s.first_moment.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
        s.second_moment.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
    return s;
}

void adam_step(std::vector<Parameter>& params, AdamState& s) {
    if (s.first_moment.size() != params.size() || s.second_moment.size() != params.size()) {
        fail(ErrorCode::DimensionMismatch, "optimizer state does not match parameters");
    }
    ++s.step;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params[i];
        Matrix& m = s.first_moment[i];
        Matrix& v = s.second_moment[i];
        require_shape(m, p.value.rows(), p.value.cols(), "adam first moment");
        require_shape(p.grad, p.value.rows(), p.value.cols(), "gradient");
        m = s.beta1 * m + (1.0 - s.beta1) * p.grad;
        v = s.beta2 * v + (1.0 - s.beta2) * p.grad.cwiseAbs2();
        p.value.array() -= s.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + s.epsilon);
    }
}

}  // namespace gpcl

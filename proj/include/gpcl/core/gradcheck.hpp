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

#include <string>
#include <vector>

#include "gpcl/core/model.hpp"

namespace gpcl {

/// Tiny fixed dataset and config (M=5, O=6, N=7, D=4, K=3, T=2) used as a
/// standing gradient check.
struct MicroInstance {
    InteractionDataset data;
    RunConfig config;
};

MicroInstance micro_instance();

struct GradcheckOptions {
    double step = 1e-5;        // central difference h
    double tolerance = 1e-4;   // on relative error
    // |a - b| / max(|a|, |b|, floor); keeps entries whose true gradient is
    // zero from dividing rounding noise by zero
    double floor = 1e-6;
};

struct ParamGradError {
    std::string name;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t entries = 0;
};

struct GradcheckReport {
    std::vector<ParamGradError> params;
    double max_rel_error = 0.0;
    std::string worst_param;
    double seconds = 0.0;
    bool passed = false;
};

/// Compares tape gradients of the full averaged loss against central
/// differences. Noise, batch and prototype assignments are drawn once at the
/// starting point and held fixed, matching the stop-gradient semantics of
/// the assignment step.
GradcheckReport gradcheck(const InteractionDataset& ds, const RunConfig& cfg, const GradcheckOptions& opts = {});

}  // namespace gpcl

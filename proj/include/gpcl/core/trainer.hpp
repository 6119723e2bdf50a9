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

#include <functional>
#include <string>
#include <vector>

#include "gpcl/core/checkpoint.hpp"
#include "gpcl/core/eval.hpp"

namespace gpcl {

struct StepRecord {
    std::uint64_t epoch = 0;
    std::uint64_t step = 0;  // global, 1-based
    LossBreakdown loss;
    bool sinkhorn_converged = true;
};

struct EvalRecord {
    std::uint64_t epoch = 0;
    std::vector<MetricResult> metrics;  // tune split
};

struct TrainResult {
    TrainState final_state;
    TrainState best_state;  // highest tune NDCG@early_stop_n; final state if never evaluated
    std::uint64_t best_epoch = 0;
    bool early_stopped = false;
    std::vector<StepRecord> steps;
    std::vector<EvalRecord> evals;
};

/// Receives one JSON object per line, without the trailing newline.
using LogSink = std::function<void(const std::string&)>;

/// Fresh model and optimizer for cfg.
TrainState init_state(const RunConfig& cfg, const EntityCounts& counts);

/// Runs cfg.trainer.epochs epochs of ceil(|train| / batch_size) steps. The
/// first log line is the resolved config. Throws NonFiniteLoss on the first
/// non-finite step loss after logging the offending step.
TrainResult train(const InteractionDataset& ds, const RunConfig& cfg, const LogSink& log = {});

std::string json_escape(const std::string& s);
std::string json_number(double v);
std::string config_json(const RunConfig& cfg);
std::string metrics_json(const std::string& event, std::uint64_t epoch, const std::vector<MetricResult>& metrics);

}  // namespace gpcl

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

#include "gpcl/core/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gpcl {

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string json_number(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

std::string config_json(const RunConfig& cfg) {
    std::ostringstream o;
    o << "{\"event\":\"config\",\"config\":{";
    bool first = true;
    for (const auto& k : RunConfig::keys()) {
        o << (first ? "" : ",") << '"' << k << "\":\"" << json_escape(cfg.get(k)) << '"';
        first = false;
    }
    o << "}}";
    return o.str();
}

std::string metrics_json(const std::string& event, std::uint64_t epoch, const std::vector<MetricResult>& metrics) {
    std::ostringstream o;
    o << "{\"event\":\"" << event << "\",\"epoch\":" << epoch;
    for (const auto& m : metrics) {
        o << ",\"" << to_string(m.split) << ".recall@" << m.n << "\":" << json_number(m.recall);
        o << ",\"" << to_string(m.split) << ".ndcg@" << m.n << "\":" << json_number(m.ndcg);
    }
    o << "}";
    return o.str();
}

namespace {

std::string step_json(const StepRecord& r) {
    std::ostringstream o;
    o << "{\"event\":\"step\",\"epoch\":" << r.epoch << ",\"step\":" << r.step
      << ",\"l_bpr\":" << json_number(r.loss.l_bpr) << ",\"l_cl\":" << json_number(r.loss.l_cl)
      << ",\"l_proto\":" << json_number(r.loss.l_proto) << ",\"l_ot\":" << json_number(r.loss.l_ot)
      << ",\"total\":" << json_number(r.loss.total)
      << ",\"sinkhorn_converged\":" << (r.sinkhorn_converged ? "true" : "false") << "}";
    return o.str();
}

double ndcg_at(const std::vector<MetricResult>& ms, int n) {
    for (const auto& m : ms)
        if (m.n == n) return m.ndcg;
    return 0.0;
}

}  // namespace

TrainState init_state(const RunConfig& cfg, const EntityCounts& counts) {
    TrainState s;
    s.model = Model(cfg, counts);
    s.adam = make_adam(s.model.parameters(), cfg.trainer.learning_rate);
    // stream distinct from the one used for initialization
    s.rng.seed(cfg.trainer.seed ^ 0x9e3779b97f4a7c15ULL);
    return s;
}

TrainResult train(const InteractionDataset& ds, const RunConfig& cfg, const LogSink& log) {
    cfg.validate();
    ds.validate();
    auto emit = [&](const std::string& line) {
        if (log) log(line);
    };
    emit(config_json(cfg));

    TrainResult result;
    result.final_state = init_state(cfg, ds.counts);
    TrainState& state = result.final_state;
    Model& model = state.model;
    const ModelGraphs graphs = ModelGraphs::build(ds);
    BatchSampler sampler(ds, cfg.trainer.seed + 1);
    AssignmentCache cache;

    const LossWeights w = cfg.effective_loss();
    const auto batch_size = static_cast<std::size_t>(cfg.trainer.batch_size);
    const std::size_t steps_per_epoch = std::max<std::size_t>(1, (ds.ub_train.size() + batch_size - 1) / batch_size);
    std::vector<int> eval_ns = cfg.eval.topn;
    if (std::find(eval_ns.begin(), eval_ns.end(), cfg.trainer.early_stop_n) == eval_ns.end()) {
        eval_ns.push_back(cfg.trainer.early_stop_n);
    }

    double best_ndcg = -1.0;
    int stale = 0;
    bool evaluated = false;
    std::uint64_t global_step = state.adam.step;

    for (int epoch = 1; epoch <= cfg.trainer.epochs; ++epoch) {
        for (std::size_t k = 0; k < steps_per_epoch; ++k) {
            const TrainBatch batch = sampler.sample(batch_size);
            const ModelGraphs dropped =
                cfg.model.edge_dropout > 0.0 ? graphs.with_edge_dropout(cfg.model.edge_dropout, state.rng) : ModelGraphs{};
            const ModelGraphs& g = cfg.model.edge_dropout > 0.0 ? dropped : graphs;
            std::vector<SampleNoise> noise;
            for (int s = 0; s < w.samples; ++s) noise.push_back(model.draw_noise(state.rng));

            model.zero_grad();
            ad::Tape tape;
            const auto vars = ad::bind(tape, model, true);
            const StepLoss loss = build_step_loss(tape, vars, model, g, batch, noise, &cache, global_step);

            StepRecord rec;
            rec.epoch = static_cast<std::uint64_t>(epoch);
            rec.step = ++global_step;
            rec.loss = loss.breakdown;
            rec.sinkhorn_converged = loss.sinkhorn_converged;
            emit(step_json(rec));
            result.steps.push_back(rec);
            if (!std::isfinite(tape.value(loss.total)(0, 0))) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << " step " << rec.step << ": l_bpr=" << rec.loss.l_bpr
                    << " l_cl=" << rec.loss.l_cl << " l_proto=" << rec.loss.l_proto << " l_ot=" << rec.loss.l_ot;
                for (const auto& p : model.parameters()) {
                    msg << " |" << p.name << "|max=" << p.value.cwiseAbs().maxCoeff();
                }
                fail(ErrorCode::NonFiniteLoss, msg.str());
            }
            tape.backward(loss.total);
            adam_step(model.parameters(), state.adam);
        }
        model.zero_grad();
        state.epoch = static_cast<std::uint64_t>(epoch);

        if (cfg.trainer.eval_every > 0 && epoch % cfg.trainer.eval_every == 0) {
            EvalRecord ev;
            ev.epoch = state.epoch;
            ev.metrics = evaluate(model, graphs, ds, Split::Tune, eval_ns, cfg.eval.mask_seen);
            emit(metrics_json("eval", ev.epoch, ev.metrics));
            result.evals.push_back(ev);
            const double ndcg = ndcg_at(ev.metrics, cfg.trainer.early_stop_n);
            evaluated = true;
            if (ndcg > best_ndcg) {
                best_ndcg = ndcg;
                stale = 0;
                result.best_state = state;
                result.best_epoch = state.epoch;
            } else if (++stale >= cfg.trainer.patience) {
                result.early_stopped = true;
                break;
            }
        }
    }
    if (!evaluated) {
        result.best_state = state;
        result.best_epoch = state.epoch;
    }
    return result;
}

}  // namespace gpcl

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

#include "gpcl/core/gradcheck.hpp"

#include <chrono>
#include <cmath>

namespace gpcl {

MicroInstance micro_instance() {
    MicroInstance m;
    m.data.counts = {5, 6, 7};
    m.data.ub_train.kind = RelationKind::UserBundle;
    m.data.ub_tune.kind = RelationKind::UserBundle;
    m.data.ub_test.kind = RelationKind::UserBundle;
    m.data.ui.kind = RelationKind::UserItem;
    m.data.bi.kind = RelationKind::BundleItem;
    for (NodeId u = 0; u < 5; ++u) {
        m.data.ub_train.pairs.push_back({u, u});
        m.data.ub_train.pairs.push_back({u, (u + 1) % 6});
        m.data.ub_tune.pairs.push_back({u, (u + 3) % 6});
        m.data.ub_test.pairs.push_back({u, (u + 4) % 6});
        for (NodeId off : {0u, 1u, 4u}) m.data.ui.pairs.push_back({u, (u + off) % 7});
    }
    for (NodeId b = 0; b < 6; ++b)
        for (NodeId off : {0u, 2u, 5u}) m.data.bi.pairs.push_back({b, (b + off) % 7});
    m.data.validate();

    RunConfig& c = m.config;
    c.model.dim = 4;
    c.model.user_prototypes = 3;
    c.model.bundle_prototypes = 3;
    c.model.init.mean_scale = 0.5;
    c.model.init.raw_var_init = -1.0;
    c.model.layers = 2;
    c.loss.samples = 2;
    c.loss.gamma_cl = 0.5;
    c.loss.gamma_pcl = 0.5;
    c.loss.gamma_ot = 0.5;
    c.trainer.batch_size = 10;
    c.trainer.seed = 7;
    return m;
}

GradcheckReport gradcheck(const InteractionDataset& ds, const RunConfig& cfg_in, const GradcheckOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = cfg_in;
    cfg.model.edge_dropout = 0.0;
    cfg.validate();

    Model model(cfg, ds.counts);
    const ModelGraphs graphs = ModelGraphs::build(ds);
    BatchSampler sampler(ds, cfg.trainer.seed + 1);
    const TrainBatch batch = sampler.sample(static_cast<std::size_t>(cfg.trainer.batch_size));
    std::mt19937_64 rng(cfg.trainer.seed + 2);
    std::vector<SampleNoise> noise;
    for (int s = 0; s < cfg.effective_loss().samples; ++s) noise.push_back(model.draw_noise(rng));
    // the first evaluation fills the cache; every later one reuses it
    AssignmentCache cache;
    cache.pinned = true;

    auto loss_value = [&]() {
        ad::Tape t;
        const auto vars = ad::bind(t, model, false);
        return t.value(build_step_loss(t, vars, model, graphs, batch, noise, &cache, 0).total)(0, 0);
    };

    model.zero_grad();
    {
        ad::Tape t;
        const auto vars = ad::bind(t, model, true);
        const StepLoss loss = build_step_loss(t, vars, model, graphs, batch, noise, &cache, 0);
        t.backward(loss.total);
    }

    GradcheckReport report;
    for (auto& p : model.parameters()) {
        ParamGradError e;
        e.name = p.name;
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            double& x = p.value.data()[i];
            const double saved = x;
            x = saved + opts.step;
            const double up = loss_value();
            x = saved - opts.step;
            const double down = loss_value();
            x = saved;
            const double fd = (up - down) / (2.0 * opts.step);
            const double an = p.grad.data()[i];
            const double abs_err = std::abs(fd - an);
            const double rel = abs_err / std::max({std::abs(fd), std::abs(an), opts.floor});
            e.max_abs_error = std::max(e.max_abs_error, abs_err);
            e.max_rel_error = std::max(e.max_rel_error, rel);
            ++e.entries;
        }
        if (e.max_rel_error >= report.max_rel_error) {
            report.max_rel_error = e.max_rel_error;
            report.worst_param = e.name;
        }
        report.params.push_back(e);
    }
    report.passed = report.max_rel_error < opts.tolerance;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace gpcl

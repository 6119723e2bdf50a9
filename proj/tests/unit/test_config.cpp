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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gpcl/core/config.hpp"

using namespace gpcl;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidSpec;
}

}  // namespace

TEST_CASE("defaults") {
    const RunConfig c;
    CHECK(c.model.dim == 64);
    CHECK(c.trainer.batch_size == 2048);
    CHECK(c.trainer.learning_rate == 1e-4);
    CHECK(c.loss.tau == 0.25);
    CHECK(c.loss.gamma_cl == 0.04);
    CHECK(c.loss.gamma_pcl == 0.1);
    CHECK(c.loss.gamma_ot == 0.1);
    CHECK(c.ot.lambda == 0.05);
    CHECK(c.ot.max_iters == 100);
    CHECK(c.ot.tol == 1e-6);
    CHECK(c.model.init.raw_var_init == -2.0);
    CHECK(c.trainer.patience == 20);
    CHECK(c.eval.topn == std::vector<int>{20, 40});
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("set and get every key") {
    RunConfig c;
    for (const auto& k : RunConfig::keys()) {
        CAPTURE(k);
        const std::string v = c.get(k);
        CHECK_NOTHROW(c.set(k, v));
        CHECK(c.get(k) == v);
    }
    c.set("model.combine", "mean");
    CHECK(c.model.combine == LayerCombine::MeanWithLayer0);
    c.set("eval.topn", "5,10");
    CHECK(c.eval.topn == std::vector<int>{5, 10});
    c.set("loss.gamma_ot", "0.15");
    CHECK(c.loss.gamma_ot == 0.15);
}

TEST_CASE("strict keys and values") {
    RunConfig c;
    CHECK(code_of([&] { c.set("foo.bar", "1"); }) == ErrorCode::UnknownConfigKey);
    CHECK(code_of([&] { c.get("model.nope"); }) == ErrorCode::UnknownConfigKey);
    CHECK(code_of([&] { c.set("model.dim", "abc"); }) == ErrorCode::InvalidConfigValue);
    CHECK(code_of([&] { c.set("model.combine", "sum"); }) == ErrorCode::InvalidConfigValue);
    CHECK(code_of([&] { c.set("model.disable_proto", "maybe"); }) == ErrorCode::InvalidConfigValue);
    RunConfig bad;
    bad.model.dim = 0;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfigValue);
}

TEST_CASE("text round trip") {
    RunConfig c;
    c.set("model.dim", "12");
    c.set("loss.tau", "0.1");
    c.set("trainer.lr", "0.003");
    c.set("data.dir", "/tmp/x y");
    RunConfig back;
    back.apply_text(c.to_text());
    CHECK(back.to_text() == c.to_text());
    CHECK(back.loss.tau == 0.1);
}

TEST_CASE("sections and comments") {
    RunConfig c;
    c.apply_text("# leading comment\nloss.tau = 0.5\n[model]\ndim = 32  # trailing\n\n[trainer]\nepochs = 7\n");
    CHECK(c.model.dim == 32);
    CHECK(c.trainer.epochs == 7);
    CHECK(c.loss.tau == 0.5);
    CHECK(code_of([&] { c.apply_text("[model]\nunknown = 1\n"); }) == ErrorCode::UnknownConfigKey);

    const auto path = std::filesystem::temp_directory_path() / "gpcl_unit_config.txt";
    std::ofstream(path) << "model.layers = 2\n";
    c.load_file(path);
    CHECK(c.model.layers == 2);
}

TEST_CASE("effective loss honours the ablation flags") {
    RunConfig c;
    c.loss.samples = 4;
    c.model.disable_gaussian = true;
    CHECK(c.effective_loss().samples == 1);
    c.model.disable_gaussian = false;
    c.model.disable_proto = true;
    const LossWeights w = c.effective_loss();
    CHECK(w.samples == 4);
    CHECK(w.gamma_pcl == 0.0);
    CHECK(w.gamma_ot == 0.0);
    CHECK(w.gamma_cl == c.loss.gamma_cl);
}

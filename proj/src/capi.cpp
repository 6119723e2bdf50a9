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

#include "gpcl/gpcl.h"

#include <cstring>
#include <new>
#include <string>

#include "gpcl/core/checkpoint.hpp"
#include "gpcl/core/eval.hpp"
#include "gpcl/core/gradcheck.hpp"
#include "gpcl/core/trainer.hpp"

struct gpcl_config {
    gpcl::RunConfig value;
};
struct gpcl_dataset {
    gpcl::InteractionDataset value;
};
struct gpcl_model {
    gpcl::TrainState value;
};

namespace {

thread_local std::string g_last_error;

gpcl_status map_code(gpcl::ErrorCode c) {
    using gpcl::ErrorCode;
    switch (c) {
        case ErrorCode::MissingFile: return GPCL_ERR_MISSING_FILE;
        case ErrorCode::MalformedLine: return GPCL_ERR_MALFORMED_LINE;
        case ErrorCode::IdOutOfRange: return GPCL_ERR_ID_OUT_OF_RANGE;
        case ErrorCode::DuplicatePair: return GPCL_ERR_DUPLICATE_PAIR;
        case ErrorCode::OverlappingSplits: return GPCL_ERR_OVERLAPPING_SPLITS;
        case ErrorCode::NoNegativeAvailable: return GPCL_ERR_NO_NEGATIVE_AVAILABLE;
        case ErrorCode::InvalidSpec: return GPCL_ERR_INVALID_SPEC;
        case ErrorCode::DimensionMismatch: return GPCL_ERR_DIMENSION_MISMATCH;
        case ErrorCode::EmptyBatch: return GPCL_ERR_EMPTY_BATCH;
        case ErrorCode::EmptySampleList: return GPCL_ERR_EMPTY_SAMPLE_LIST;
        case ErrorCode::EmptyGroundTruth: return GPCL_ERR_EMPTY_GROUND_TRUTH;
        case ErrorCode::NonFiniteLoss: return GPCL_ERR_NON_FINITE_LOSS;
        case ErrorCode::NumericOverflow: return GPCL_ERR_NUMERIC_OVERFLOW;
        case ErrorCode::IoError: return GPCL_ERR_IO;
        case ErrorCode::VersionMismatch: return GPCL_ERR_VERSION_MISMATCH;
        case ErrorCode::ChecksumMismatch: return GPCL_ERR_CHECKSUM_MISMATCH;
        case ErrorCode::UnknownConfigKey: return GPCL_ERR_UNKNOWN_CONFIG_KEY;
        case ErrorCode::InvalidConfigValue: return GPCL_ERR_INVALID_CONFIG_VALUE;
    }
    return GPCL_ERR_INTERNAL;
}

gpcl_status set_error(gpcl_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

// Runs fn, translating every exception into a status; nothing escapes.
template <typename Fn>
gpcl_status guarded(Fn&& fn) noexcept {
    try {
        g_last_error.clear();
        return fn();
    } catch (const gpcl::Error& e) {
        return set_error(map_code(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(GPCL_ERR_OUT_OF_MEMORY, "out of memory");
    } catch (const std::exception& e) {
        return set_error(GPCL_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(GPCL_ERR_INTERNAL, "unknown exception");
    }
}

gpcl_status null_arg(const char* what) { return set_error(GPCL_ERR_INVALID_ARGUMENT, std::string(what) + " is NULL"); }

gpcl_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
    if (needed != nullptr) *needed = s.size() + 1;
    if (cap < s.size() + 1) return set_error(GPCL_ERR_BUFFER_TOO_SMALL, "output buffer too small");
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return GPCL_OK;
}

gpcl::Split to_split(gpcl_split s) { return s == GPCL_SPLIT_TEST ? gpcl::Split::Test : gpcl::Split::Tune; }

void fill_metrics(const std::vector<gpcl::MetricResult>& ms, gpcl_metric* out) {
    for (size_t i = 0; i < ms.size(); ++i) {
        out[i].split = ms[i].split == gpcl::Split::Test ? GPCL_SPLIT_TEST : GPCL_SPLIT_TUNE;
        out[i].n = ms[i].n;
        out[i].recall = ms[i].recall;
        out[i].ndcg = ms[i].ndcg;
        out[i].users = ms[i].users;
    }
}

}  // namespace

extern "C" {

const char* gpcl_status_string(gpcl_status status) {
    switch (status) {
        case GPCL_OK: return "Ok";
        case GPCL_ERR_INVALID_ARGUMENT: return "InvalidArgument";
        case GPCL_ERR_BUFFER_TOO_SMALL: return "BufferTooSmall";
        case GPCL_ERR_OUT_OF_MEMORY: return "OutOfMemory";
        case GPCL_ERR_INTERNAL: return "Internal";
        default: break;
    }
    if (status > GPCL_OK && status <= GPCL_ERR_INVALID_CONFIG_VALUE) {
        return gpcl::to_string(static_cast<gpcl::ErrorCode>(status - 1));
    }
    return "UnknownStatus";
}

const char* gpcl_last_error(void) { return g_last_error.c_str(); }

gpcl_status gpcl_config_new(gpcl_config** out) {
    return guarded([&] {
        if (out == nullptr) return null_arg("out");
        *out = new gpcl_config{};
        return GPCL_OK;
    });
}

void gpcl_config_free(gpcl_config* cfg) { delete cfg; }

gpcl_status gpcl_config_clone(const gpcl_config* cfg, gpcl_config** out) {
    return guarded([&] {
        if (cfg == nullptr || out == nullptr) return null_arg("cfg/out");
        *out = new gpcl_config{cfg->value};
        return GPCL_OK;
    });
}

gpcl_status gpcl_config_load_file(gpcl_config* cfg, const char* path) {
    return guarded([&] {
        if (cfg == nullptr || path == nullptr) return null_arg("cfg/path");
        cfg->value.load_file(path);
        return GPCL_OK;
    });
}

gpcl_status gpcl_config_apply_text(gpcl_config* cfg, const char* text) {
    return guarded([&] {
        if (cfg == nullptr || text == nullptr) return null_arg("cfg/text");
        cfg->value.apply_text(text);
        return GPCL_OK;
    });
}

gpcl_status gpcl_config_set(gpcl_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        if (cfg == nullptr || key == nullptr || value == nullptr) return null_arg("cfg/key/value");
        cfg->value.set(key, value);
        return GPCL_OK;
    });
}

gpcl_status gpcl_config_get(const gpcl_config* cfg, const char* key, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        if (cfg == nullptr || key == nullptr) return null_arg("cfg/key");
        return copy_out(cfg->value.get(key), buf, cap, needed);
    });
}

gpcl_status gpcl_config_validate(const gpcl_config* cfg) {
    return guarded([&] {
        if (cfg == nullptr) return null_arg("cfg");
        cfg->value.validate();
        return GPCL_OK;
    });
}

gpcl_status gpcl_config_text(const gpcl_config* cfg, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        if (cfg == nullptr) return null_arg("cfg");
        return copy_out(cfg->value.to_text(), buf, cap, needed);
    });
}

gpcl_status gpcl_dataset_load(const char* dir, gpcl_dataset** out) {
    return guarded([&] {
        if (dir == nullptr || out == nullptr) return null_arg("dir/out");
        *out = new gpcl_dataset{gpcl::load_dataset(dir)};
        return GPCL_OK;
    });
}

gpcl_status gpcl_dataset_synthesize(const gpcl_config* cfg, gpcl_dataset** out) {
    return guarded([&] {
        if (cfg == nullptr || out == nullptr) return null_arg("cfg/out");
        *out = new gpcl_dataset{gpcl::generate_synthetic(cfg->value.synth).data};
        return GPCL_OK;
    });
}

gpcl_status gpcl_dataset_write(const gpcl_dataset* ds, const char* dir) {
    return guarded([&] {
        if (ds == nullptr || dir == nullptr) return null_arg("ds/dir");
        gpcl::write_dataset(ds->value, dir);
        return GPCL_OK;
    });
}

gpcl_status gpcl_dataset_counts(const gpcl_dataset* ds, uint32_t* users, uint32_t* bundles, uint32_t* items) {
    return guarded([&] {
        if (ds == nullptr) return null_arg("ds");
        if (users != nullptr) *users = ds->value.counts.users;
        if (bundles != nullptr) *bundles = ds->value.counts.bundles;
        if (items != nullptr) *items = ds->value.counts.items;
        return GPCL_OK;
    });
}

gpcl_status gpcl_dataset_stats(const gpcl_dataset* ds, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        if (ds == nullptr) return null_arg("ds");
        return copy_out(gpcl::format_stats_table(gpcl::compute_stats(ds->value)), buf, cap, needed);
    });
}

void gpcl_dataset_free(gpcl_dataset* ds) { delete ds; }

gpcl_status gpcl_train(const gpcl_dataset* ds, const gpcl_config* cfg, gpcl_log_fn log, void* user_data,
                       gpcl_model** final_state, gpcl_model** best_state) {
    return guarded([&] {
        if (ds == nullptr || cfg == nullptr) return null_arg("ds/cfg");
        gpcl::LogSink sink;
        if (log != nullptr) sink = [&](const std::string& line) { log(line.c_str(), user_data); };
        gpcl::TrainResult r = gpcl::train(ds->value, cfg->value, sink);
        if (final_state != nullptr) *final_state = new gpcl_model{std::move(r.final_state)};
        if (best_state != nullptr) *best_state = new gpcl_model{std::move(r.best_state)};
        return GPCL_OK;
    });
}

gpcl_status gpcl_model_save(const gpcl_model* model, const char* path) {
    return guarded([&] {
        if (model == nullptr || path == nullptr) return null_arg("model/path");
        gpcl::save_checkpoint(model->value, path);
        return GPCL_OK;
    });
}

gpcl_status gpcl_model_load(const char* path, gpcl_model** out) {
    return guarded([&] {
        if (path == nullptr || out == nullptr) return null_arg("path/out");
        *out = new gpcl_model{gpcl::load_checkpoint(path)};
        return GPCL_OK;
    });
}

gpcl_status gpcl_model_load_checked(const char* path, const gpcl_config* expected, gpcl_model** out) {
    return guarded([&] {
        if (path == nullptr || expected == nullptr || out == nullptr) return null_arg("path/expected/out");
        *out = new gpcl_model{gpcl::load_checkpoint(path, expected->value)};
        return GPCL_OK;
    });
}

gpcl_status gpcl_model_config(const gpcl_model* model, gpcl_config** out) {
    return guarded([&] {
        if (model == nullptr || out == nullptr) return null_arg("model/out");
        *out = new gpcl_config{model->value.model.config()};
        return GPCL_OK;
    });
}

gpcl_status gpcl_model_epoch(const gpcl_model* model, uint64_t* epoch) {
    return guarded([&] {
        if (model == nullptr || epoch == nullptr) return null_arg("model/epoch");
        *epoch = model->value.epoch;
        return GPCL_OK;
    });
}

void gpcl_model_free(gpcl_model* model) { delete model; }

namespace {

void require_compatible(const gpcl_model* model, const gpcl_dataset* ds) {
    if (!(model->value.model.counts() == ds->value.counts)) {
        gpcl::fail(gpcl::ErrorCode::VersionMismatch, "checkpoint entity counts do not match the dataset");
    }
}

std::vector<int> to_ns(const int* ns, size_t count) { return std::vector<int>(ns, ns + count); }

}  // namespace

gpcl_status gpcl_evaluate(const gpcl_model* model, const gpcl_dataset* ds, gpcl_split split, const int* ns,
                          size_t count, int mask_seen, gpcl_metric* out) {
    return guarded([&] {
        if (model == nullptr || ds == nullptr || ns == nullptr || out == nullptr) return null_arg("argument");
        require_compatible(model, ds);
        const auto graphs = gpcl::ModelGraphs::build(ds->value);
        fill_metrics(gpcl::evaluate(model->value.model, graphs, ds->value, to_split(split), to_ns(ns, count),
                                    mask_seen != 0),
                     out);
        return GPCL_OK;
    });
}

gpcl_status gpcl_evaluate_popularity(const gpcl_dataset* ds, gpcl_split split, const int* ns, size_t count,
                                     int mask_seen, gpcl_metric* out) {
    return guarded([&] {
        if (ds == nullptr || ns == nullptr || out == nullptr) return null_arg("argument");
        fill_metrics(gpcl::evaluate_scores(gpcl::popularity_scores(ds->value), ds->value, to_split(split),
                                           to_ns(ns, count), mask_seen != 0),
                     out);
        return GPCL_OK;
    });
}

gpcl_status gpcl_random_expected_recall(const gpcl_dataset* ds, gpcl_split split, int n, int mask_seen,
                                        double* out) {
    return guarded([&] {
        if (ds == nullptr || out == nullptr) return null_arg("ds/out");
        *out = gpcl::random_expected_recall(ds->value, to_split(split), n, mask_seen != 0);
        return GPCL_OK;
    });
}

gpcl_status gpcl_top_n(const gpcl_model* model, const gpcl_dataset* ds, uint32_t user, int n, int mask_seen,
                       uint32_t* bundles, double* scores, size_t* count) {
    return guarded([&] {
        if (model == nullptr || ds == nullptr || count == nullptr) return null_arg("argument");
        require_compatible(model, ds);
        if (user >= ds->value.counts.users) return set_error(GPCL_ERR_ID_OUT_OF_RANGE, "user id out of range");
        const auto graphs = gpcl::ModelGraphs::build(ds->value);
        const gpcl::Matrix all = gpcl::score_all(model->value.model, graphs);
        const auto seen = ds->value.user_bundles(ds->value.ub_train);
        const auto list = gpcl::top_n(user, all.row(user), n, mask_seen != 0 ? &seen[user] : nullptr);
        *count = list.bundles.size();
        for (size_t i = 0; i < list.bundles.size(); ++i) {
            if (bundles != nullptr) bundles[i] = list.bundles[i];
            if (scores != nullptr) scores[i] = list.scores[i];
        }
        return GPCL_OK;
    });
}

gpcl_status gpcl_predict(const gpcl_model* model, const gpcl_dataset* ds, uint32_t user, uint32_t bundle,
                         int samples, uint64_t seed, double* mean, double* variance) {
    return guarded([&] {
        if (model == nullptr || ds == nullptr) return null_arg("model/ds");
        require_compatible(model, ds);
        const auto graphs = gpcl::ModelGraphs::build(ds->value);
        std::mt19937_64 rng(seed);
        const auto p = gpcl::predict_uncertain(model->value.model, graphs, user, bundle, samples, rng);
        if (mean != nullptr) *mean = p.mean_score;
        if (variance != nullptr) *variance = p.variance_score;
        return GPCL_OK;
    });
}

gpcl_status gpcl_uncertainty_report(const gpcl_model* model, const gpcl_dataset* ds, gpcl_family family,
                                    const char* buckets, gpcl_uncertainty_row* rows, size_t cap, size_t* count) {
    return guarded([&] {
        if (model == nullptr || ds == nullptr || buckets == nullptr || count == nullptr) return null_arg("argument");
        require_compatible(model, ds);
        const auto report = gpcl::uncertainty_report(
            model->value.model, ds->value, family == GPCL_BUNDLES ? gpcl::NodeFamily::Bundles : gpcl::NodeFamily::Users,
            gpcl::parse_buckets(buckets));
        *count = report.size();
        if (cap < report.size()) return set_error(GPCL_ERR_BUFFER_TOO_SMALL, "row buffer too small");
        for (size_t i = 0; i < report.size(); ++i) {
            rows[i].lo = report[i].bucket.lo;
            rows[i].unbounded = report[i].bucket.hi ? 0 : 1;
            rows[i].hi = report[i].bucket.hi.value_or(0);
            rows[i].nodes = report[i].nodes;
            rows[i].mean_uncertainty = report[i].mean_uncertainty;
        }
        return GPCL_OK;
    });
}

gpcl_status gpcl_gradcheck(const gpcl_dataset* ds, const gpcl_config* cfg, gpcl_gradcheck_result* out) {
    return guarded([&] {
        if (out == nullptr) return null_arg("out");
        if ((ds == nullptr) != (cfg == nullptr)) return null_arg("one of ds/cfg");
        const gpcl::MicroInstance micro = ds == nullptr ? gpcl::micro_instance() : gpcl::MicroInstance{};
        const gpcl::GradcheckOptions opts;
        const auto r = ds == nullptr ? gpcl::gradcheck(micro.data, micro.config, opts)
                                     : gpcl::gradcheck(ds->value, cfg->value, opts);
        out->max_rel_error = r.max_rel_error;
        out->tolerance = opts.tolerance;
        out->seconds = r.seconds;
        out->passed = r.passed ? 1 : 0;
        std::memset(out->worst_param, 0, sizeof out->worst_param);
        std::strncpy(out->worst_param, r.worst_param.c_str(), sizeof out->worst_param - 1);
        return GPCL_OK;
    });
}

}  // extern "C"

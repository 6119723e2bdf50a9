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

// Command-line front end. Talks to the engine only through the C API.

#include <cmath>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpcl/gpcl.h"

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct Failure {
    gpcl_status status;
    std::string message;
};

void check(gpcl_status s) {
    if (s != GPCL_OK) throw Failure{s, gpcl_last_error()};
}

struct ConfigDeleter {
    void operator()(gpcl_config* p) const { gpcl_config_free(p); }
};
struct DatasetDeleter {
    void operator()(gpcl_dataset* p) const { gpcl_dataset_free(p); }
};
struct ModelDeleter {
    void operator()(gpcl_model* p) const { gpcl_model_free(p); }
};
using ConfigPtr = std::unique_ptr<gpcl_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<gpcl_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<gpcl_model, ModelDeleter>;

std::string read_string(const std::function<gpcl_status(char*, size_t, size_t*)>& fn) {
    size_t needed = 0;
    gpcl_status s = fn(nullptr, 0, &needed);
    if (s != GPCL_OK && s != GPCL_ERR_BUFFER_TOO_SMALL) check(s);
    std::string buf(needed, '\0');
    check(fn(buf.data(), buf.size(), &needed));
    buf.resize(needed - 1);
    return buf;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw Failure{GPCL_ERR_INVALID_CONFIG_VALUE, "not an integer list: " + s};
        }
    }
    if (out.empty()) throw Failure{GPCL_ERR_INVALID_CONFIG_VALUE, "empty list: " + s};
    return out;
}

struct Globals {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string data_dir;
};

void apply_override(gpcl_config* cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure{GPCL_ERR_INVALID_CONFIG_VALUE, "--set expects KEY=VALUE, got " + kv};
    check(gpcl_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
}

ConfigPtr resolve_config(const Globals& g) {
    gpcl_config* raw = nullptr;
    check(gpcl_config_new(&raw));
    ConfigPtr cfg(raw);
    if (!g.config_path.empty()) check(gpcl_config_load_file(cfg.get(), g.config_path.c_str()));
    for (const auto& kv : g.overrides) apply_override(cfg.get(), kv);
    if (g.seed) check(gpcl_config_set(cfg.get(), "trainer.seed", std::to_string(*g.seed).c_str()));
    if (!g.data_dir.empty()) check(gpcl_config_set(cfg.get(), "data.dir", g.data_dir.c_str()));
    check(gpcl_config_validate(cfg.get()));
    return cfg;
}

std::string config_get(const gpcl_config* cfg, const std::string& key) {
    return read_string([&](char* b, size_t c, size_t* n) { return gpcl_config_get(cfg, key.c_str(), b, c, n); });
}

DatasetPtr load_data(const gpcl_config* cfg) {
    const std::string dir = config_get(cfg, "data.dir");
    if (dir.empty()) throw Failure{GPCL_ERR_INVALID_CONFIG_VALUE, "no dataset: pass --data or set data.dir"};
    gpcl_dataset* raw = nullptr;
    check(gpcl_dataset_load(dir.c_str(), &raw));
    return DatasetPtr(raw);
}

ModelPtr load_model(const std::string& path) {
    if (path.empty()) throw Failure{GPCL_ERR_INVALID_CONFIG_VALUE, "--checkpoint is required"};
    gpcl_model* raw = nullptr;
    check(gpcl_model_load(path.c_str(), &raw));
    return ModelPtr(raw);
}

std::filesystem::path out_dir(const Globals& g) {
    std::filesystem::path p = g.out_dir.empty() ? std::filesystem::path("gpcl_out") : std::filesystem::path(g.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw Failure{GPCL_ERR_IO, "cannot create " + p.string() + ": " + ec.message()};
    return p;
}

const char* split_name(gpcl_split s) { return s == GPCL_SPLIT_TEST ? "test" : "tune"; }

std::vector<gpcl_metric> evaluate(const gpcl_model* m, const gpcl_dataset* ds, gpcl_split split,
                                  const std::vector<int>& ns, bool mask) {
    std::vector<gpcl_metric> out(ns.size());
    check(gpcl_evaluate(m, ds, split, ns.data(), ns.size(), mask ? 1 : 0, out.data()));
    return out;
}

void print_metrics(const std::vector<gpcl_metric>& ms, std::ostream& os) {
    if (ms.empty()) return;
    os << "[" << split_name(ms.front().split) << "]\n";
    for (const auto& m : ms) os << "recall@" << m.n << "\t" << m.recall << "\n";
    for (const auto& m : ms) os << "ndcg@" << m.n << "\t" << m.ndcg << "\n";
}

std::string metrics_json(const std::vector<std::vector<gpcl_metric>>& groups) {
    std::ostringstream o;
    o.precision(17);
    o << "{\"event\":\"metrics\"";
    for (const auto& ms : groups)
        for (const auto& m : ms) {
            o << ",\"" << split_name(m.split) << ".recall@" << m.n << "\":" << m.recall;
            o << ",\"" << split_name(m.split) << ".ndcg@" << m.n << "\":" << m.ndcg;
        }
    o << "}";
    return o.str();
}

bool mask_seen(const gpcl_config* cfg) { return config_get(cfg, "eval.mask_seen") == "true"; }

struct LogFile {
    std::ofstream file;
    bool echo = true;
};

void log_line(const char* line, void* user) {
    auto* lf = static_cast<LogFile*>(user);
    if (lf->file) lf->file << line << "\n";
    if (lf->echo) std::cout << line << "\n";
}

int cmd_train(const Globals& g, int repeats, bool quiet) {
    ConfigPtr cfg = resolve_config(g);
    DatasetPtr ds = load_data(cfg.get());
    const auto dir = out_dir(g);
    const std::vector<int> ns = parse_int_list(config_get(cfg.get(), "eval.topn"));
    const bool mask = mask_seen(cfg.get());
    const std::uint64_t base_seed = std::stoull(config_get(cfg.get(), "trainer.seed"));

    std::map<std::string, std::vector<double>> samples;
    for (int r = 0; r < repeats; ++r) {
        gpcl_config* run_raw = nullptr;
        check(gpcl_config_clone(cfg.get(), &run_raw));
        ConfigPtr run(run_raw);
        check(gpcl_config_set(run.get(), "trainer.seed", std::to_string(base_seed + static_cast<std::uint64_t>(r)).c_str()));
        const std::string suffix = repeats > 1 ? "_r" + std::to_string(r) : "";

        LogFile lf;
        lf.echo = !quiet;
        lf.file.open(dir / ("log" + suffix + ".jsonl"));
        if (!lf.file) throw Failure{GPCL_ERR_IO, "cannot write log in " + dir.string()};
        gpcl_model *fin = nullptr, *best = nullptr;
        check(gpcl_train(ds.get(), run.get(), log_line, &lf, &fin, &best));
        ModelPtr final_state(fin), best_state(best);
        check(gpcl_model_save(final_state.get(), (dir / ("final" + suffix + ".ckpt")).string().c_str()));
        check(gpcl_model_save(best_state.get(), (dir / ("best" + suffix + ".ckpt")).string().c_str()));

        const auto tune = evaluate(best_state.get(), ds.get(), GPCL_SPLIT_TUNE, ns, mask);
        const auto test = evaluate(best_state.get(), ds.get(), GPCL_SPLIT_TEST, ns, mask);
        log_line(metrics_json({tune, test}).c_str(), &lf);
        if (repeats == 1) {
            print_metrics(tune, std::cout);
            print_metrics(test, std::cout);
        }
        for (const auto* group : {&tune, &test})
            for (const auto& m : *group) {
                samples[std::string(split_name(m.split)) + ".recall@" + std::to_string(m.n)].push_back(m.recall);
                samples[std::string(split_name(m.split)) + ".ndcg@" + std::to_string(m.n)].push_back(m.ndcg);
            }
    }
    if (repeats > 1) {
        for (const auto& [name, xs] : samples) {
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double ss = 0.0;
            for (double x : xs) ss += (x - mean) * (x - mean);
            const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
            std::cout << name << "\t" << mean << " +- " << sd << "\n";
        }
    }
    return kOk;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& n_list) {
    ConfigPtr cfg = resolve_config(g);
    ModelPtr model = load_model(checkpoint);
    DatasetPtr ds = load_data(cfg.get());
    const std::vector<int> ns = parse_int_list(n_list.empty() ? config_get(cfg.get(), "eval.topn") : n_list);
    const bool mask = mask_seen(cfg.get());
    const auto tune = evaluate(model.get(), ds.get(), GPCL_SPLIT_TUNE, ns, mask);
    const auto test = evaluate(model.get(), ds.get(), GPCL_SPLIT_TEST, ns, mask);
    print_metrics(tune, std::cout);
    print_metrics(test, std::cout);
    std::cout << metrics_json({tune, test}) << "\n";
    return kOk;
}

int cmd_predict(const Globals& g, const std::string& checkpoint, std::uint32_t user,
                std::optional<std::uint32_t> bundle, int samples, int n) {
    ConfigPtr cfg = resolve_config(g);
    ModelPtr model = load_model(checkpoint);
    DatasetPtr ds = load_data(cfg.get());
    if (bundle) {
        double mean = 0.0, var = 0.0;
        const std::uint64_t seed = std::stoull(config_get(cfg.get(), "trainer.seed"));
        check(gpcl_predict(model.get(), ds.get(), user, *bundle, samples, seed, &mean, &var));
        std::cout << "user\tbundle\tmean\tvariance\tsamples\n"
                  << user << "\t" << *bundle << "\t" << mean << "\t" << var << "\t" << samples << "\n";
        return kOk;
    }
    std::vector<std::uint32_t> ids(static_cast<size_t>(std::max(n, 0)));
    std::vector<double> scores(ids.size());
    size_t count = 0;
    check(gpcl_top_n(model.get(), ds.get(), user, n, mask_seen(cfg.get()) ? 1 : 0, ids.data(), scores.data(), &count));
    std::cout << "rank\tbundle\tscore\n";
    for (size_t i = 0; i < count; ++i) std::cout << i + 1 << "\t" << ids[i] << "\t" << scores[i] << "\n";
    return kOk;
}

int cmd_stats(const Globals& g) {
    ConfigPtr cfg = resolve_config(g);
    DatasetPtr ds = load_data(cfg.get());
    std::cout << read_string([&](char* b, size_t c, size_t* n) { return gpcl_dataset_stats(ds.get(), b, c, n); });
    return kOk;
}

int cmd_synth(const Globals& g) {
    ConfigPtr cfg = resolve_config(g);
    gpcl_dataset* raw = nullptr;
    check(gpcl_dataset_synthesize(cfg.get(), &raw));
    DatasetPtr ds(raw);
    const auto dir = out_dir(g);
    check(gpcl_dataset_write(ds.get(), dir.string().c_str()));
    std::cout << "wrote " << dir.string() << "\n";
    std::cout << read_string([&](char* b, size_t c, size_t* n) { return gpcl_dataset_stats(ds.get(), b, c, n); });
    return kOk;
}

int cmd_gradcheck(const Globals& g) {
    gpcl_gradcheck_result r{};
    if (!g.data_dir.empty()) {
        ConfigPtr cfg = resolve_config(g);
        DatasetPtr ds = load_data(cfg.get());
        check(gpcl_gradcheck(ds.get(), cfg.get(), &r));
    } else {
        check(gpcl_gradcheck(nullptr, nullptr, &r));
    }
    std::cout << "worst parameter: " << r.worst_param << "\n";
    std::cout << "max rel err = " << r.max_rel_error << " (" << r.seconds << " s)\n";
    std::ostringstream tol;
    tol << std::setprecision(3) << std::defaultfloat << r.tolerance;
    std::string t = tol.str();  // 0.0001 -> 1e-4 for readability
    if (r.tolerance > 0 && r.tolerance < 1e-3) {
        std::ostringstream e;
        const int exp = static_cast<int>(std::floor(std::log10(r.tolerance)));
        const double mant = r.tolerance / std::pow(10.0, exp);
        if (std::abs(mant - 1.0) < 1e-12) e << "1e" << exp; else e << mant << "e" << exp;
        t = e.str();
    }
    std::cout << "max rel err < " << t << ": " << (r.passed ? "PASS" : "FAIL") << "\n";
    return r.passed ? kOk : kRuntime;
}

int cmd_uncertainty(const Globals& g, const std::string& checkpoint, const std::string& buckets,
                    const std::string& family) {
    ConfigPtr cfg = resolve_config(g);
    ModelPtr model = load_model(checkpoint);
    DatasetPtr ds = load_data(cfg.get());
    std::cout << "family\tbucket\tnodes\tmean_uncertainty\n";
    for (const auto& [name, fam] : {std::pair{"users", GPCL_USERS}, std::pair{"bundles", GPCL_BUNDLES}}) {
        if (family != "both" && family != name) continue;
        size_t count = 0;
        std::vector<gpcl_uncertainty_row> rows(64);
        check(gpcl_uncertainty_report(model.get(), ds.get(), fam, buckets.c_str(), rows.data(), rows.size(), &count));
        for (size_t i = 0; i < count; ++i) {
            const auto& r = rows[i];
            std::cout << name << "\t" << r.lo << "-" << (r.unbounded ? std::string() : std::to_string(r.hi)) << "\t"
                      << r.nodes << "\t" << r.mean_uncertainty << "\n";
        }
    }
    return kOk;
}

int cmd_sweep(const Globals& g, const std::vector<std::string>& grid) {
    ConfigPtr base = resolve_config(g);
    DatasetPtr ds = load_data(base.get());
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const auto& spec : grid) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw Failure{GPCL_ERR_INVALID_CONFIG_VALUE, "--grid expects key=v1,v2: " + spec};
        std::vector<std::string> values;
        std::stringstream in(spec.substr(eq + 1));
        std::string v;
        while (std::getline(in, v, ','))
            if (!v.empty()) values.push_back(v);
        if (values.empty()) throw Failure{GPCL_ERR_INVALID_CONFIG_VALUE, "--grid has no values: " + spec};
        axes.emplace_back(spec.substr(0, eq), values);
    }
    const std::vector<int> ns = parse_int_list(config_get(base.get(), "eval.topn"));
    const bool mask = mask_seen(base.get());

    for (const auto& [key, values] : axes) std::cout << key << "\t";
    for (size_t k = 0; k < ns.size(); ++k) std::cout << (k ? "\t" : "") << "test.recall@" << ns[k] << "\ttest.ndcg@" << ns[k];
    std::cout << "\n";

    std::vector<size_t> idx(axes.size(), 0);
    while (true) {
        gpcl_config* raw = nullptr;
        check(gpcl_config_clone(base.get(), &raw));
        ConfigPtr cell(raw);
        for (size_t a = 0; a < axes.size(); ++a)
            check(gpcl_config_set(cell.get(), axes[a].first.c_str(), axes[a].second[idx[a]].c_str()));
        check(gpcl_config_validate(cell.get()));
        gpcl_model* best = nullptr;
        check(gpcl_train(ds.get(), cell.get(), nullptr, nullptr, nullptr, &best));
        ModelPtr model(best);
        const auto test = evaluate(model.get(), ds.get(), GPCL_SPLIT_TEST, ns, mask);
        for (size_t a = 0; a < axes.size(); ++a) std::cout << axes[a].second[idx[a]] << "\t";
        for (size_t k = 0; k < test.size(); ++k) std::cout << (k ? "\t" : "") << test[k].recall << "\t" << test[k].ndcg;
        std::cout << "\n" << std::flush;

        size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++idx[a] < axes[a].second.size()) break;
            idx[a] = 0;
        }
        if (a == axes.size()) break;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gpcl: bundle recommendation with Gaussian embeddings and prototype contrast"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "config file of key = value lines");
    app.add_option("--set", g.overrides, "KEY=VALUE override, repeatable");
    app.add_option("--seed", g.seed, "overrides trainer.seed");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--data", g.data_dir, "dataset directory; overrides data.dir");

    std::string checkpoint, n_list, buckets = "1-10,11-30,31-50,51-", family = "both";
    int repeats = 1, samples = 10, top = 20;
    bool quiet = false;
    std::uint32_t user = 0;
    std::optional<std::uint32_t> bundle;
    std::vector<std::string> grid;

    auto* train = app.add_subcommand("train", "train a model and write checkpoints and logs to --out");
    train->add_option("--repeats", repeats, "independent runs with consecutive seeds")->check(CLI::PositiveNumber);
    train->add_flag("--quiet", quiet, "do not echo the log to stdout");
    auto* eval = app.add_subcommand("eval", "Recall@n and NDCG@n on tune and test");
    eval->add_option("--checkpoint", checkpoint)->required();
    eval->add_option("--n", n_list, "comma separated cutoffs");
    auto* predict = app.add_subcommand("predict", "score one pair or list the top-n bundles of a user");
    predict->add_option("--checkpoint", checkpoint)->required();
    predict->add_option("--user", user)->required();
    predict->add_option("--bundle", bundle);
    predict->add_option("--samples", samples, "noise draws for the pair score")->check(CLI::PositiveNumber);
    predict->add_option("--n", top, "list length");
    app.add_subcommand("stats", "dataset summary table");
    app.add_subcommand("synth", "write a planted-cluster dataset to --out");
    app.add_subcommand("gradcheck", "finite-difference gradient check");
    auto* unc = app.add_subcommand("uncertainty", "mean uncertainty per interaction-frequency bucket");
    unc->add_option("--checkpoint", checkpoint)->required();
    unc->add_option("--buckets", buckets);
    unc->add_option("--family", family)->check(CLI::IsMember({"users", "bundles", "both"}));
    auto* sweep = app.add_subcommand("sweep", "train every cell of a config grid");
    sweep->add_option("--grid", grid, "key=v1,v2,..., repeatable")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "train") return cmd_train(g, repeats, quiet);
        if (name == "eval") return cmd_eval(g, checkpoint, n_list);
        if (name == "predict") return cmd_predict(g, checkpoint, user, bundle, samples, top);
        if (name == "stats") return cmd_stats(g);
        if (name == "synth") return cmd_synth(g);
        if (name == "gradcheck") return cmd_gradcheck(g);
        if (name == "uncertainty") return cmd_uncertainty(g, checkpoint, buckets, family);
        if (name == "sweep") return cmd_sweep(g, grid);
    } catch (const Failure& f) {
        std::cerr << "error: " << gpcl_status_string(f.status) << ": " << f.message << "\n";
        const bool usage = f.status == GPCL_ERR_UNKNOWN_CONFIG_KEY || f.status == GPCL_ERR_INVALID_CONFIG_VALUE ||
                           f.status == GPCL_ERR_INVALID_ARGUMENT;
        return usage ? kUsage : kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}

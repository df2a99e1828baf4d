/*
 * Copyright 2026 The geoqa Authors
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

#include "geoqa/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "geoqa/evaluator.hpp"
#include "geoqa/geo_store.hpp"
#include "geoqa/oracle.hpp"
#include "geoqa/qa_generator.hpp"
#include "geoqa/text.hpp"

namespace geoqa {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& workdir, const std::string& p) {
    fs::path x(p);
    return x.is_absolute() ? x : workdir / x;
}

bool looks_secret(const std::string& key) {
    const auto k = to_lower(key);
    if (k == "api_key_env") return false;
    for (const char* bad : {"api_key", "apikey", "token", "secret", "password"}) {
        if (k.find(bad) != std::string::npos) return true;
    }
    return false;
}

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (looks_secret(k)) {
            throw ConfigError(where + "." + k + ": credentials are read from environment variables only (use api_key_env)");
        }
        if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
    }
}

template <class T>
void take(const nlohmann::json& j, const char* key, T& dst, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

void write_text(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(f), {}};
}

void require_file(const fs::path& p, const std::string& what, const std::string& hint) {
    if (!fs::exists(p)) throw ConfigError(what + " not found at " + p.string() + " (" + hint + ")");
}

std::vector<ToolRequest> request_corpus(const std::vector<QAInstance>& instances) {
    std::vector<ToolRequest> out;
    for (const auto& i : instances) {
        for (const auto& s : i.tool_trace) out.push_back(s.request());
    }
    return out;
}

// Everything a command may need, loaded lazily.
struct Context {
    CliConfig cfg;
    std::ostream& out;
    std::ostream& err;

    GeoStore store() const {
        require_file(cfg.paths.store, "store", "run `geoqa ingest` first");
        return GeoStore::open(cfg.paths.store);
    }
    std::unique_ptr<ToolCache> frozen_cache() const {
        require_file(cfg.paths.cache, "tool cache", "run `geoqa cache-populate` first");
        auto c = ToolCache::load(cfg.paths.cache);
        c->freeze();
        return c;
    }
    std::vector<QAInstance> dataset(const fs::path& p) const {
        require_file(p, "dataset", "run `geoqa generate` first");
        return read_dataset(p);
    }
};

int cmd_ingest(Context& ctx, bool synthetic) {
    if (synthetic) {
        FixtureSpec spec;
        spec.cities = ctx.cfg.cities;
        spec.communities_per_city = ctx.cfg.communities_per_city;
        spec.pois_per_city = ctx.cfg.pois_per_city;
        spec.seed = ctx.cfg.fixture_seed;
        write_synthetic_fixture(spec, ctx.cfg.paths.fixtures);
        ctx.err << "wrote synthetic fixture to " << ctx.cfg.paths.fixtures.string() << "\n";
    }
    require_file(ctx.cfg.paths.fixtures, "fixture directory", "pass --synthetic to create one");
    StoreConfig sc;
    sc.cities = ctx.cfg.cities;
    sc.seed = ctx.cfg.fixture_seed;
    GeoStore store = [&] {
        try {
            return GeoStore::ingest_fixture(sc, ctx.cfg.paths.fixtures);
        } catch (const IngestError& e) {
            throw ConfigError(e.what());
        }
    }();
    if (fs::exists(ctx.cfg.paths.store)) fs::remove(ctx.cfg.paths.store);
    if (ctx.cfg.paths.store.has_parent_path()) fs::create_directories(ctx.cfg.paths.store.parent_path());
    store.save(ctx.cfg.paths.store);
    ctx.out << nlohmann::json{{"communities", store.communities().size()},
                              {"pois", store.pois().size()},
                              {"tables", store.list_captions().size()},
                              {"store", ctx.cfg.paths.store.string()}}
                   .dump(2)
            << "\n";
    return kExitOk;
}

int cmd_pairs(Context& ctx) {
    require_file(ctx.cfg.paths.store, "store", "run `geoqa ingest` first");
    auto store = GeoStore::open(ctx.cfg.paths.store, false);
    const auto counts = store.build_proximity_pairs();
    const auto tmp = fs::path(ctx.cfg.paths.store.string() + ".tmp");
    if (fs::exists(tmp)) fs::remove(tmp);
    store.save(tmp);
    fs::rename(tmp, ctx.cfg.paths.store);
    ctx.out << nlohmann::json{{"poi_community", counts.poi_community}, {"community_community", counts.community_community}}.dump(2)
            << "\n";
    return kExitOk;
}

int cmd_generate(Context& ctx) {
    auto store = ctx.store();
    if (store.pairs().empty()) throw ConfigError("store has no proximity pairs; run `geoqa pairs` first");
    auto templates = load_templates(ctx.cfg.paths.templates);
    ToolCache scratch(std::make_shared<SyntheticProvider>(store.pois(), ctx.cfg.fixture_seed));
    GenerationConfig gc;
    gc.seed = ctx.cfg.generation_seed;
    gc.attempts_per_template = ctx.cfg.attempts_per_template;
    auto res = generate_dataset(templates, store, scratch, gc);
    write_dataset(ctx.cfg.paths.dataset, res.instances);
    write_text(fs::path(ctx.cfg.paths.dataset.string() + ".report.json"), res.report.to_json().dump(2) + "\n");
    ctx.out << res.report.to_json().dump(2) << "\n";
    return res.instances.empty() ? kExitValidation : kExitOk;
}

int cmd_cache_populate(Context& ctx) {
    auto store = ctx.store();
    auto instances = ctx.dataset(ctx.cfg.paths.dataset);
    ToolCache cache(std::make_shared<SyntheticProvider>(store.pois(), ctx.cfg.fixture_seed));
    const auto rep = cache.populate(request_corpus(instances));
    cache.save(ctx.cfg.paths.cache);
    ctx.out << nlohmann::json{{"requested", rep.requested},
                              {"unique", rep.unique},
                              {"added", rep.added},
                              {"entries", rep.entries},
                              {"failures", rep.failures}}
                   .dump(2)
            << "\n";
    return rep.ok() ? kExitOk : kExitBackend;
}

int cmd_validate(Context& ctx) {
    auto store = ctx.store();
    auto cache = ctx.frozen_cache();
    auto instances = ctx.dataset(ctx.cfg.paths.dataset);
    nlohmann::json problems = nlohmann::json::array();
    std::set<std::string> ids;
    for (const auto& inst : instances) {
        auto p = validate_instance(inst, store, *cache);
        if (!ids.insert(inst.id).second) p.push_back("duplicate id");
        if (!p.empty()) problems.push_back({{"id", inst.id}, {"problems", p}});
    }
    ctx.out << nlohmann::json{{"instances", instances.size()}, {"mismatches", problems.size()}, {"problems", problems}}.dump(2)
            << "\n";
    return problems.empty() ? kExitOk : kExitValidation;
}

int cmd_split(Context& ctx) {
    auto instances = ctx.dataset(ctx.cfg.paths.dataset);
    SplitSpec spec;
    spec.seed = ctx.cfg.split_seed;
    auto s = stratified_split(instances, spec);
    write_dataset(ctx.cfg.paths.splits / "train.jsonl", s.train);
    write_dataset(ctx.cfg.paths.splits / "val.jsonl", s.val);
    write_dataset(ctx.cfg.paths.splits / "test.jsonl", s.test);
    for (const auto& w : s.warnings) ctx.err << "warning: " << w << "\n";
    ctx.out << nlohmann::json{{"train", s.train.size()}, {"val", s.val.size()}, {"test", s.test.size()}, {"warnings", s.warnings}}
                   .dump(2)
            << "\n";
    return kExitOk;
}

struct RunOptions {
    std::string name;
    std::string split = "test";
    std::string dataset;  // overrides split
    bool oracle = false;
    std::string fault;
    std::string slu = "fewshot";
    std::string inject;
    std::size_t limit = 0;
    bool overwrite = false;
};

fs::path instances_path(const Context& ctx, const RunOptions& o) {
    if (!o.dataset.empty()) return o.dataset;
    if (o.split != "train" && o.split != "val" && o.split != "test") throw ConfigError("--split must be train, val or test");
    return ctx.cfg.paths.splits / (o.split + ".jsonl");
}

Injection parse_injection(const std::string& s) {
    Injection inj;
    if (s.empty() || s == "none") return inj;
    for (const auto& part : split(s, '+')) {
        for (const auto& p : split(part, ',')) {
            const auto x = trim(p);
            if (x == "slu") inj.slu = true;
            else if (x == "sql") inj.sql = true;
            else if (x == "api") inj.api = true;
            else if (!x.empty()) throw ConfigError("unknown injection stage '" + x + "'");
        }
    }
    return inj;
}

BackendFactory make_factory(const Context& ctx, const RunOptions& o) {
    if (!o.fault.empty()) {
        FaultStage stage;
        if (o.fault == "slu") stage = FaultStage::slu;
        else if (o.fault == "sql") stage = FaultStage::sql;
        else if (o.fault == "tool") stage = FaultStage::tool;
        else throw ConfigError("--fault must be slu, sql or tool");
        return [stage](const QAInstance& g) { return make_fault_backend(g, stage); };
    }
    if (o.oracle) return [](const QAInstance& g) { return make_oracle_backend(g); };
    if (ctx.cfg.backend.endpoint.empty()) {
        throw ConfigError("no chat backend configured: set backend.endpoint and backend.model in the config, or pass --oracle");
    }
    std::shared_ptr<ChatBackend> shared;
    try {
        shared = std::make_shared<HttpChatBackend>(ctx.cfg.backend);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return [shared](const QAInstance&) { return shared; };
}

fs::path prepare_run_dir(const Context& ctx, const std::string& name, bool overwrite) {
    if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..") {
        throw ConfigError("run name must be a plain directory name");
    }
    const auto dir = ctx.cfg.paths.runs / name;
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!overwrite) throw ConfigError("run directory " + dir.string() + " exists; pass --overwrite to replace it");
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
    return dir;
}

std::string transcripts_jsonl(const std::vector<EpisodeTranscript>& ts) {
    std::string s;
    for (const auto& t : ts) s += t.to_json().dump() + "\n";
    return s;
}

void write_suite(const fs::path& dir, const SuiteResult& r) {
    write_text(dir / "transcripts.jsonl", transcripts_jsonl(r.transcripts));
    write_text(dir / "report.json", r.report.to_json().dump(2) + "\n");
    write_text(dir / "report.txt", r.report.render());
}

bool all_backend_failures(const SuiteResult& r) {
    if (r.transcripts.empty()) return false;
    for (const auto& t : r.transcripts) {
        if (t.answer || !starts_with(t.failure, "backend_error")) return false;
    }
    return true;
}

struct Prepared {
    std::vector<QAInstance> instances;
    GeoStore store;
    std::unique_ptr<ToolCache> cache;
    std::unique_ptr<CaptionIndex> index;
    std::unique_ptr<LexiconSlu> lexicon;
    RunEnvironment env;
    RunConfig rc;
};

std::unique_ptr<Prepared> prepare(const Context& ctx, const RunOptions& o) {
    auto factory = make_factory(ctx, o);
    auto mode = parse_slu_mode(o.slu);
    if (!mode) throw ConfigError("--slu must be lexicon or fewshot");
    const auto inj = parse_injection(o.inject);
    auto instances = ctx.dataset(instances_path(ctx, o));
    if (o.limit && instances.size() > o.limit) instances.resize(o.limit);
    auto p = std::unique_ptr<Prepared>(new Prepared{std::move(instances), ctx.store(), ctx.frozen_cache(), nullptr, nullptr, {}, {}});
    p->index = std::make_unique<CaptionIndex>(CaptionIndex::from_store(p->store));
    if (*mode == SluMode::lexicon) {
        p->lexicon = std::make_unique<LexiconSlu>(Gazetteer::build(p->store), load_templates(ctx.cfg.paths.templates));
    }
    p->env.store = &p->store;
    p->env.cache = p->cache.get();
    p->env.index = p->index.get();
    p->env.lexicon = p->lexicon.get();
    p->env.db_examples = default_db_examples();
    p->env.fewshot_pool = default_fewshot_pool();
    p->env.backend = std::move(factory);
    p->rc.slu = *mode;
    p->rc.inject = inj;
    p->rc.step_cap = ctx.cfg.step_cap;
    p->rc.parallelism = ctx.cfg.parallelism;
    p->rc.seed = ctx.cfg.generation_seed;
    return p;
}

nlohmann::json run_manifest(const Context& ctx, const RunOptions& o, const fs::path& instances) {
    auto backend = o.fault.empty() ? (o.oracle ? std::string("oracle") : "http:" + ctx.cfg.backend.model) : "fault:" + o.fault;
    return {{"name", o.name},       {"instances", instances.string()}, {"limit", o.limit},
            {"backend", backend},   {"slu", o.slu},                    {"inject", parse_injection(o.inject).label()},
            {"step_cap", ctx.cfg.step_cap}};
}

int cmd_run(Context& ctx, const RunOptions& o) {
    auto p = prepare(ctx, o);
    const auto dir = prepare_run_dir(ctx, o.name, o.overwrite);
    write_text(dir / "run.json", run_manifest(ctx, o, instances_path(ctx, o)).dump(2) + "\n");
    p->rc.label = o.name;
    const auto res = run_suite(p->instances, p->env, p->rc);
    write_suite(dir, res);
    ctx.out << res.report.render();
    return all_backend_failures(res) ? kExitBackend : kExitOk;
}

int cmd_eval(Context& ctx, const std::string& name, const std::string& dataset_override) {
    const auto dir = ctx.cfg.paths.runs / name;
    require_file(dir / "run.json", "run manifest", "run `geoqa run --name " + name + "` first");
    const auto manifest = nlohmann::json::parse(read_text(dir / "run.json"));
    auto golds = ctx.dataset(dataset_override.empty() ? fs::path(manifest.at("instances").get<std::string>()) : fs::path(dataset_override));
    const auto limit = manifest.value("limit", std::size_t{0});
    if (limit && golds.size() > limit) golds.resize(limit);
    std::vector<EpisodeTranscript> ts;
    for (const auto& line : split_lines(read_text(dir / "transcripts.jsonl"))) {
        if (trim(line).empty()) continue;
        ts.push_back(transcript_from_json(nlohmann::json::parse(line)));
    }
    EvalReport r;
    try {
        r = evaluate(ts, golds, name);
    } catch (const std::invalid_argument& e) {
        ctx.err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    write_text(dir / "eval.json", r.to_json().dump(2) + "\n");
    ctx.out << r.render();
    return kExitOk;
}

int cmd_ablate(Context& ctx, const RunOptions& o) {
    auto p = prepare(ctx, o);
    const auto dir = prepare_run_dir(ctx, o.name, o.overwrite);
    write_text(dir / "run.json", run_manifest(ctx, o, instances_path(ctx, o)).dump(2) + "\n");
    const auto ladder = run_ablation(p->instances, p->env, p->rc);
    nlohmann::json summary = nlohmann::json::array();
    std::string text;
    bool backend_down = true;
    for (const auto& r : ladder) {
        write_suite(dir / ("rung_" + r.report.label), r);
        summary.push_back(r.report.to_json());
        text += r.report.render() + "\n";
        backend_down = backend_down && all_backend_failures(r);
    }
    write_text(dir / "ladder.json", summary.dump(2) + "\n");
    write_text(dir / "ladder.txt", text);
    ctx.out << text;
    return backend_down ? kExitBackend : kExitOk;
}

}  // namespace

CliConfig CliConfig::defaults(const fs::path& workdir) {
    CliConfig c;
    c.paths = {workdir / "fixtures",     workdir / "store.sqlite", default_template_dir(), workdir / "cache.jsonl",
               workdir / "dataset.jsonl", workdir / "splits",       workdir / "runs"};
    return c;
}

CliConfig CliConfig::from_json(const nlohmann::json& j, const fs::path& workdir) {
    auto c = defaults(workdir);
    check_keys(j, {"paths", "backend", "cities", "fixture", "seeds", "attempts_per_template", "step_cap", "parallelism"}, "config");
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        check_keys(p, {"fixtures", "store", "templates", "cache", "dataset", "splits", "runs"}, "paths");
        auto set = [&](const char* k, fs::path& dst) {
            std::string v;
            take(p, k, v, "paths");
            if (!v.empty()) dst = resolve(workdir, v);
        };
        set("fixtures", c.paths.fixtures);
        set("store", c.paths.store);
        set("templates", c.paths.templates);
        set("cache", c.paths.cache);
        set("dataset", c.paths.dataset);
        set("splits", c.paths.splits);
        set("runs", c.paths.runs);
    }
    if (j.contains("backend")) {
        const auto& b = j["backend"];
        check_keys(b, {"endpoint", "model", "api_key_env", "temperature", "timeout_seconds", "max_retries"}, "backend");
        take(b, "endpoint", c.backend.endpoint, "backend");
        take(b, "model", c.backend.model, "backend");
        take(b, "api_key_env", c.backend.api_key_env, "backend");
        take(b, "temperature", c.backend.temperature, "backend");
        take(b, "timeout_seconds", c.backend.timeout_seconds, "backend");
        take(b, "max_retries", c.backend.max_retries, "backend");
    }
    take(j, "cities", c.cities, "config");
    if (j.contains("fixture")) {
        check_keys(j["fixture"], {"communities_per_city", "pois_per_city"}, "fixture");
        take(j["fixture"], "communities_per_city", c.communities_per_city, "fixture");
        take(j["fixture"], "pois_per_city", c.pois_per_city, "fixture");
    }
    if (j.contains("seeds")) {
        check_keys(j["seeds"], {"fixture", "generation", "split"}, "seeds");
        take(j["seeds"], "fixture", c.fixture_seed, "seeds");
        take(j["seeds"], "generation", c.generation_seed, "seeds");
        take(j["seeds"], "split", c.split_seed, "seeds");
    }
    take(j, "attempts_per_template", c.attempts_per_template, "config");
    take(j, "step_cap", c.step_cap, "config");
    take(j, "parallelism", c.parallelism, "config");
    if (c.cities.empty()) throw ConfigError("config.cities must not be empty");
    if (c.step_cap == 0) throw ConfigError("config.step_cap must be positive");
    if (c.parallelism == 0) c.parallelism = 1;
    return c;
}

nlohmann::json CliConfig::to_json() const {
    return {{"paths",
             {{"fixtures", paths.fixtures.string()},
              {"store", paths.store.string()},
              {"templates", paths.templates.string()},
              {"cache", paths.cache.string()},
              {"dataset", paths.dataset.string()},
              {"splits", paths.splits.string()},
              {"runs", paths.runs.string()}}},
            {"backend",
             {{"endpoint", backend.endpoint},
              {"model", backend.model},
              {"api_key_env", backend.api_key_env},
              {"temperature", backend.temperature},
              {"timeout_seconds", backend.timeout_seconds},
              {"max_retries", backend.max_retries}}},
            {"cities", cities},
            {"fixture", {{"communities_per_city", communities_per_city}, {"pois_per_city", pois_per_city}}},
            {"seeds", {{"fixture", fixture_seed}, {"generation", generation_seed}, {"split", split_seed}}},
            {"attempts_per_template", attempts_per_template},
            {"step_cap", step_cap},
            {"parallelism", parallelism}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"geoqa: synthetic geospatial QA benchmark and multi-agent harness", "geoqa"};
    app.require_subcommand(1);
    std::string config_path;
    std::string workdir = ".";
    app.add_option("-c,--config", config_path, "JSON config file");
    app.add_option("-w,--workdir", workdir, "base directory for relative paths");

    bool synthetic = false;
    auto* ingest = app.add_subcommand("ingest", "load fixture CSVs into the store");
    ingest->add_flag("--synthetic", synthetic, "write a synthetic fixture first");
    auto* pairs = app.add_subcommand("pairs", "build proximity pair tables");
    auto* populate = app.add_subcommand("cache-populate", "resolve every tool request of the dataset into the cache");
    auto* generate = app.add_subcommand("generate", "instantiate templates into a dataset");
    auto* validate = app.add_subcommand("validate", "re-execute every trace and re-derive every answer");
    auto* split_cmd = app.add_subcommand("split", "stratified 8:1:1 split per template");

    RunOptions ro;
    auto add_run_opts = [&ro](CLI::App* c) {
        c->add_option("-n,--name", ro.name, "run directory name")->required();
        c->add_option("--split", ro.split, "train, val or test");
        c->add_option("--dataset", ro.dataset, "instances file (overrides --split)");
        c->add_flag("--oracle", ro.oracle, "use the gold-driven oracle backend");
        c->add_option("--fault", ro.fault, "oracle backend that breaks one stage: slu, sql or tool");
        c->add_option("--slu", ro.slu, "lexicon or fewshot");
        c->add_option("--limit", ro.limit, "use at most this many instances");
        c->add_flag("--overwrite", ro.overwrite, "replace an existing run directory");
    };
    auto* run = app.add_subcommand("run", "run episodes and write transcripts");
    add_run_opts(run);
    run->add_option("--inject", ro.inject, "gold stages, e.g. slu+sql");
    auto* ablate = app.add_subcommand("ablate", "run the injection ladder none, slu, slu+sql, slu+sql+api");
    add_run_opts(ablate);
    std::string eval_name, eval_dataset;
    auto* eval = app.add_subcommand("eval", "re-score a run directory");
    eval->add_option("-n,--name", eval_name, "run directory name")->required();
    eval->add_option("--dataset", eval_dataset, "gold instances (default: those the run used)");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        const fs::path wd = fs::absolute(workdir).lexically_normal();
        CliConfig cfg = config_path.empty() ? CliConfig::defaults(wd)
                                            : CliConfig::from_json(nlohmann::json::parse(read_text(config_path)), wd);
        Context ctx{cfg, out, err};
        if (*ingest) return cmd_ingest(ctx, synthetic);
        if (*pairs) return cmd_pairs(ctx);
        if (*populate) return cmd_cache_populate(ctx);
        if (*generate) return cmd_generate(ctx);
        if (*validate) return cmd_validate(ctx);
        if (*split_cmd) return cmd_split(ctx);
        if (*run) return cmd_run(ctx, ro);
        if (*ablate) return cmd_ablate(ctx, ro);
        if (*eval) return cmd_eval(ctx, eval_name, eval_dataset);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nlohmann::json::parse_error& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TemplateError& e) {
        err << "template error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BackendError& e) {
        err << "backend failure: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitConfig;
}

}  // namespace geoqa

#include "fairprep/study.hpp"

#include <algorithm>
#include <cstdlib>

#include "fairprep/error.hpp"
#include "fairprep/fetch.hpp"
#include "fairprep/io.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

namespace {

template <typename T>
T arg(const RecipeStep& step, const char* key) {
    try {
        return step.args.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DataError("recipe step '" + step.op + "' needs a valid '" + key + "'");
    }
}

std::string_view model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Logistic: return "logistic";
        case ModelKind::Linear: return "linear";
        case ModelKind::Ridge: return "ridge";
    }
    return "?";
}

std::vector<std::uint64_t> effective_seeds(const StudyConfig& cfg, const StudyOptions& options) {
    auto seeds = cfg.seeds;
    if (seeds.empty()) seeds.push_back(1);
    if (options.seed_count) {
        const auto n = *options.seed_count;
        if (n == 0) throw UsageError("--seeds must be at least 1");
        while (seeds.size() < n) seeds.push_back(*std::max_element(seeds.begin(), seeds.end()) + 1);
        seeds.resize(n);
    }
    return seeds;
}

}  // namespace

DataTable apply_step(const DataTable& table, const RecipeStep& step) {
    const auto& op = step.op;
    if (op == "filter_rows") {
        const auto keep = arg<std::vector<std::string>>(step, "keep");
        return filter_rows(table, arg<std::string>(step, "column"), keep);
    }
    if (op == "quartile_binarize") return quartile_binarize(table, arg<std::string>(step, "column"));
    if (op == "bucket_numeric") {
        const auto edges = arg<std::vector<double>>(step, "edges");
        std::optional<std::vector<std::string>> labels;
        if (step.args.contains("labels")) labels = arg<std::vector<std::string>>(step, "labels");
        return bucket_numeric(table, arg<std::string>(step, "column"), edges, labels);
    }
    if (op == "binarize_threshold") {
        const auto cmp = arg<std::string>(step, "comparison");
        if (cmp != ">=" && cmp != ">") throw DataError("binarize_threshold comparison must be '>=' or '>'");
        return binarize_threshold(table, arg<std::string>(step, "column"),
                                  cmp == ">=" ? Comparison::GreaterEqual : Comparison::Greater,
                                  arg<double>(step, "threshold"));
    }
    if (op == "drop_sparse_columns") return drop_sparse_columns(table, arg<std::size_t>(step, "k"));
    if (op == "drop_columns") {
        const auto cols = arg<std::vector<std::string>>(step, "columns");
        return drop_columns(table, cols);
    }
    if (op == "drop_missing_rows") {
        const auto col = table.index_of(arg<std::string>(step, "column"));
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < table.rows(); ++r) {
            if (!is_missing(table.cell(r, col))) rows.push_back(r);
        }
        return table.select_rows(rows);
    }
    if (op == "set_role") return table.with_role(arg<std::string>(step, "column"), parse_role(arg<std::string>(step, "role")));
    throw DataError("unknown recipe op '" + op + "'");
}

DataTable apply_recipe(const DataTable& table, const std::vector<RecipeStep>& recipe) {
    DataTable out = table;
    for (const auto& step : recipe) out = apply_step(out, step);
    return out;
}

nlohmann::json ModelSpec::to_json() const {
    nlohmann::json doc = {{"kind", model_kind_name(kind)}};
    if (kind == ModelKind::Ridge) doc["lambda"] = ridge_lambda;
    if (kind == ModelKind::Logistic) {
        doc["learning_rate"] = train.learning_rate;
        doc["epochs"] = train.epochs;
        doc["l2"] = train.l2;
        doc["batch_size"] = train.batch_size;
    }
    return doc;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& doc) {
    ModelSpec m;
    try {
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "logistic") m.kind = ModelKind::Logistic;
        else if (kind == "linear") m.kind = ModelKind::Linear;
        else if (kind == "ridge") m.kind = ModelKind::Ridge;
        else throw DataError("unknown model kind '" + kind + "'");
        m.ridge_lambda = doc.value("lambda", m.ridge_lambda);
        m.train.learning_rate = doc.value("learning_rate", m.train.learning_rate);
        m.train.epochs = doc.value("epochs", m.train.epochs);
        m.train.l2 = doc.value("l2", m.train.l2);
        m.train.batch_size = doc.value("batch_size", m.train.batch_size);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model spec: ") + e.what());
    }
    m.train.validate();
    return m;
}

nlohmann::json StudyConfig::to_json() const {
    auto recipe_json = nlohmann::json::array();
    for (const auto& s : recipe) {
        auto j = s.args;
        j["op"] = s.op;
        recipe_json.push_back(std::move(j));
    }
    nlohmann::json src = {{"file", source.file}, {"url", source.url}, {"bundled", source.bundled.string()}};
    src["sha256"] = source.sha256 ? nlohmann::json(*source.sha256) : nlohmann::json(nullptr);
    src["bundled_sha256"] = source.bundled_sha256 ? nlohmann::json(*source.bundled_sha256) : nlohmann::json(nullptr);
    if (source.delimiter != ',') src["delimiter"] = std::string(1, source.delimiter);
    if (!source.header.empty()) src["header"] = source.header;
    nlohmann::json audit = {{"on", audit_on_all ? "all" : "test"},
                            {"stratify", stratify},
                            {"stratum_names", stratum_names},
                            {"bins", bins}};
    if (contrast) audit["contrast"] = {contrast->first, contrast->second};
    return {{"name", name},
            {"source", src},
            {"schema", schema_to_json(schema)},
            {"recipe", recipe_json},
            {"protected", protected_column},
            {"target", target_column},
            {"model", model.to_json()},
            {"debias", debias.to_json()},
            {"debias_fit_on", debias_fit_on_all ? "all" : "train"},
            {"seeds", seeds},
            {"test_fraction", test_fraction},
            {"audit", audit}};
}

StudyConfig StudyConfig::from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    StudyConfig c;
    try {
        c.name = doc.at("name").get<std::string>();
        const auto& src = doc.at("source");
        c.source.file = src.value("file", std::string());
        c.source.url = src.value("url", std::string());
        if (src.contains("sha256") && !src["sha256"].is_null()) c.source.sha256 = src["sha256"].get<std::string>();
        if (src.contains("bundled")) {
            std::filesystem::path p = src["bundled"].get<std::string>();
            c.source.bundled = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        }
        if (src.contains("bundled_sha256") && !src["bundled_sha256"].is_null())
            c.source.bundled_sha256 = src["bundled_sha256"].get<std::string>();
        if (src.contains("delimiter")) {
            const auto d = src["delimiter"].get<std::string>();
            if (d.size() != 1) throw DataError("source.delimiter must be a single character");
            c.source.delimiter = d[0];
        }
        c.source.header = src.value("header", std::vector<std::string>{});
        c.schema = schema_from_json(doc.at("schema"));
        for (const auto& j : doc.value("recipe", nlohmann::json::array())) {
            RecipeStep s;
            s.op = j.at("op").get<std::string>();
            s.args = j;
            s.args.erase("op");
            c.recipe.push_back(std::move(s));
        }
        c.protected_column = doc.at("protected").get<std::string>();
        c.target_column = doc.at("target").get<std::string>();
        c.model = ModelSpec::from_json(doc.at("model"));
        if (doc.contains("debias")) c.debias = DebiasConfig::from_json(doc["debias"]);
        c.debias_fit_on_all = doc.value("debias_fit_on", std::string("all")) == "all";
        c.seeds = doc.value("seeds", std::vector<std::uint64_t>{1, 2, 3, 4, 5});
        c.test_fraction = doc.value("test_fraction", c.test_fraction);
        if (doc.contains("audit")) {
            const auto& a = doc["audit"];
            const auto on = a.value("on", std::string("all"));
            if (on != "all" && on != "test") throw DataError("audit.on must be 'all' or 'test'");
            c.audit_on_all = on == "all";
            c.stratify = a.value("stratify", c.stratify);
            c.stratum_names = a.value("stratum_names", c.stratum_names);
            c.bins = a.value("bins", c.bins);
            if (a.contains("contrast")) {
                const auto pair = a["contrast"].get<std::vector<std::string>>();
                if (pair.size() != 2) throw DataError("audit.contrast must name exactly two groups");
                c.contrast = std::make_pair(pair[0], pair[1]);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed study config: ") + e.what());
    }
    // Recipe columns must exist: replay the recipe on an empty table.
    std::vector<std::vector<double>> empty(c.schema.size());
    const DataTable probe(c.schema, empty);
    DataTable shape = probe;
    for (const auto& step : c.recipe) {
        if (step.op == "filter_rows" || step.op == "drop_missing_rows") {
            shape.index_of(arg<std::string>(step, "column"));
            continue;  // row filters need data; only the column reference is checked
        }
        if (step.op == "drop_sparse_columns") {
            arg<std::size_t>(step, "k");
            continue;  // which columns go depends on the data
        }
        if (step.op == "quartile_binarize") {
            // Binarizing needs values; mimic its effect on the schema.
            const auto col = shape.index_of(arg<std::string>(step, "column"));
            if (shape.spec(col).kind != ColumnKind::Numeric)
                throw DataError("quartile_binarize: column '" + shape.spec(col).name + "' is not numeric");
            shape = shape.with_column(col, binary_column(shape.spec(col).name, shape.spec(col).role), {});
            continue;
        }
        shape = apply_step(shape, step);
    }
    const auto target = shape.index_of(c.target_column);
    shape.index_of(c.protected_column);
    const bool binary_target = shape.spec(target).kind == ColumnKind::Binary;
    if (binary_target != (c.model.kind == ModelKind::Logistic))
        throw DataError("study '" + c.name + "': model kind does not match the target kind");
    return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
    try {
        return StudyConfig::from_json(nlohmann::json::parse(read_file(path)), path.parent_path());
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

LoadedData acquire_data(const StudyConfig& cfg, const AcquireOptions& options) {
    LoadedData out;
    const CsvOptions csv{.allow_extra_columns = true};
    std::optional<std::filesystem::path> cache = options.cache_dir;
    if (!cache) {
        if (const char* env = std::getenv("FAIRPREP_DATA_DIR"); env && *env) cache = env;
    }
    if (cache && !cfg.source.file.empty()) {
        const auto path = *cache / cfg.source.file;
        if (!std::filesystem::exists(path) && !options.offline && !cfg.source.url.empty()) {
            try {
                std::filesystem::create_directories(*cache);
                download_file(cfg.source.url, path);
                out.origin = "download";
            } catch (const Error& e) {
                out.warnings.push_back(std::string("download failed: ") + e.what());
            }
        }
        if (std::filesystem::exists(path)) {
            std::string content = read_file(path);
            const auto digest = sha256_hex(content);
            if (cfg.source.sha256 && *cfg.source.sha256 != digest) {
                out.warnings.push_back("checksum mismatch for " + path.string() + "; ignoring it");
            } else {
                try {
                    if (!cfg.source.header.empty()) {
                        std::string line;
                        for (const auto& name : cfg.source.header) {
                            if (!line.empty()) line.push_back(cfg.source.delimiter);
                            line += name;
                        }
                        content = line + "\n" + content;
                    }
                    out.table = table_from_csv(parse_csv(content, cfg.source.delimiter), cfg.schema, csv);
                    if (out.origin.empty()) out.origin = "cache";
                    out.path = path;
                    out.sha256 = digest;
                    return out;
                } catch (const DataError& e) {
                    out.warnings.push_back("cannot read " + path.string() + ": " + e.what());
                    out.origin.clear();
                }
            }
        }
    }
    if (cfg.source.bundled.empty() || !std::filesystem::exists(cfg.source.bundled))
        throw DataError("study '" + cfg.name + "': dataset unavailable and no bundled surrogate");
    const auto content = read_file(cfg.source.bundled);
    out.sha256 = sha256_hex(content);
    if (cfg.source.bundled_sha256 && *cfg.source.bundled_sha256 != out.sha256)
        throw DataError("bundled data " + cfg.source.bundled.string() + " fails its checksum");
    out.table = table_from_csv(parse_csv(content), cfg.schema, csv);
    out.origin = "bundled";
    out.path = cfg.source.bundled;
    out.warnings.push_back("public dataset not available; using the bundled surrogate " +
                           cfg.source.bundled.filename().string());
    return out;
}

PipelineRun run_pipeline(const DataTable& table, const std::string& target, const ModelSpec& model,
                         const SplitIndices& split, std::uint64_t seed) {
    const auto tcol = table.index_of(target);
    const auto train = table.select_rows(split.train);
    const auto encoding = fit_encoding(train);
    const Matrix x_all = encode(table, encoding).values;
    const Matrix x_train = encode(train, encoding).values;
    std::vector<double> y_train;
    for (double v : train.column(tcol)) y_train.push_back(v);

    LinearModel fitted;
    switch (model.kind) {
        case ModelKind::Logistic: {
            TrainConfig cfg = model.train;
            cfg.seed = seed;
            fitted = fit_logistic(x_train, y_train, cfg);
            break;
        }
        case ModelKind::Linear:
            fitted = fit_linear(x_train, y_train, 0.0);
            break;
        case ModelKind::Ridge:
            fitted = fit_linear(x_train, y_train, model.ridge_lambda);
            break;
    }
    PipelineRun run;
    const Vector est = predict(fitted, x_all);
    run.estimates.assign(est.data(), est.data() + est.size());

    std::vector<double> pred_test, y_test;
    for (auto r : split.test) {
        pred_test.push_back(run.estimates[r]);
        y_test.push_back(table.cell(r, tcol));
    }
    const auto desc = "test rows (" + std::to_string(split.test.size()) + " of " + std::to_string(table.rows()) +
                      "), seed " + std::to_string(seed);
    if (model.kind == ModelKind::Logistic) {
        run.performance = {"accuracy", accuracy(pred_test, y_test), desc};
    } else {
        run.performance = {"r2", r_squared(pred_test, y_test), desc};
    }
    nlohmann::json pipeline = {{"model", model.to_json()},
                               {"target", target},
                               {"seed", seed},
                               {"train_rows", split.train.size()},
                               {"test_rows", split.test.size()}};
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(pipeline.dump())));
    run.digest = hex;
    return run;
}

Spread spread(std::vector<double> values) {
    if (values.empty()) return {};
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    const double median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return {median, values.front(), values.back()};
}

const StratumAggregate& StudyResult::stratum(std::string_view name) const {
    for (const auto& s : strata) {
        if (s.stratum == name) return s;
    }
    throw DataError("study has no stratum '" + std::string(name) + "'");
}

StudyResult run_study(const StudyConfig& cfg, const StudyOptions& options) {
    return run_study_on(cfg, acquire_data(cfg, options.acquire), options);
}

StudyResult run_study_on(const StudyConfig& cfg, LoadedData data, const StudyOptions& options) {
    StudyResult result;
    result.name = cfg.name;
    result.config_echo = cfg.to_json();

    DataTable prepared = drop_role_columns(apply_recipe(data.table, cfg.recipe));
    // Rows without a target cannot be modelled or stratified.
    {
        const auto tcol = prepared.index_of(cfg.target_column);
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < prepared.rows(); ++r) {
            if (!is_missing(prepared.cell(r, tcol))) rows.push_back(r);
        }
        prepared = prepared.select_rows(rows);
    }
    if (prepared.spec(prepared.index_of(cfg.target_column)).role != ColumnRole::Target)
        throw DataError("study '" + cfg.name + "': '" + cfg.target_column + "' does not have role=target");
    if (prepared.spec(prepared.index_of(cfg.protected_column)).role != ColumnRole::Protected)
        throw DataError("study '" + cfg.name + "': '" + cfg.protected_column + "' does not have role=protected");
    result.rows = prepared.rows();
    result.config_echo["effective_seeds"] = effective_seeds(cfg, options);

    const bool regression = cfg.model.kind != ModelKind::Logistic;
    AuditOptions audit_opts;
    audit_opts.protected_column = cfg.protected_column;
    if (cfg.stratify && !regression) audit_opts.stratum_column = cfg.target_column;
    audit_opts.contrast = cfg.contrast;
    audit_opts.stratum_names = cfg.stratum_names;
    audit_opts.bins = cfg.bins;
    if (!regression) audit_opts.range = std::make_pair(0.0, 1.0);
    if (regression) audit_opts.truth_column = cfg.target_column;

    for (const auto seed : effective_seeds(cfg, options)) {
        SeedResult sr;
        sr.seed = seed;
        const auto split = split_indices(prepared, cfg.test_fraction, seed);

        DebiasConfig dcfg = cfg.debias;
        dcfg.seed = seed;
        const DataTable fit_table = cfg.debias_fit_on_all ? prepared : prepared.select_rows(split.train);
        auto trained = train_debiaser(fit_table, dcfg);
        const DataTable debiased = transform(trained.model, prepared);
        sr.trace = std::move(trained.trace);

        const auto pre = run_pipeline(prepared, cfg.target_column, cfg.model, split, seed);
        const auto post = run_pipeline(debiased, cfg.target_column, cfg.model, split, seed);

        auto audit_rows = [&](const PipelineRun& run, const DataTable& table) {
            nlohmann::json meta = {{"seed", seed}, {"pipeline_digest", run.digest}};
            if (cfg.audit_on_all) {
                return audit(run.estimates, table, audit_opts, run.performance, meta);
            }
            std::vector<double> est;
            for (auto r : split.test) est.push_back(run.estimates[r]);
            return audit(est, table.select_rows(split.test), audit_opts, run.performance, meta);
        };
        sr.pre = audit_rows(pre, prepared);
        sr.post = audit_rows(post, debiased);
        sr.probe_auc_pre = leakage_probe(prepared, cfg.protected_column, seed);
        sr.probe_auc_post = leakage_probe(debiased, cfg.protected_column, seed);
        result.seeds.push_back(std::move(sr));
    }

    const auto& first = result.seeds.front();
    for (std::size_t i = 0; i < first.pre.bias_table.rows.size(); ++i) {
        StratumAggregate agg;
        agg.stratum = first.pre.bias_table.rows[i].stratum;
        std::vector<double> pre, post;
        for (const auto& s : result.seeds) {
            pre.push_back(s.pre.bias_table.rows[i].score);
            post.push_back(s.post.bias_table.rows[i].score);
        }
        agg.pre = spread(pre);
        agg.post = spread(post);
        if (first.pre.true_values) agg.truth = first.pre.true_values->rows[i].score;
        result.strata.push_back(std::move(agg));
    }
    std::vector<double> perf_pre, perf_post, probe_pre, probe_post;
    for (const auto& s : result.seeds) {
        perf_pre.push_back(s.pre.performance.value);
        perf_post.push_back(s.post.performance.value);
        probe_pre.push_back(s.probe_auc_pre);
        probe_post.push_back(s.probe_auc_post);
    }
    result.performance_pre = spread(perf_pre);
    result.performance_post = spread(perf_post);
    result.probe_pre = spread(probe_pre);
    result.probe_post = spread(probe_post);
    result.data = std::move(data);
    return result;
}

namespace {

nlohmann::json spread_json(const Spread& s) {
    return {{"median", score_to_json(s.median)}, {"min", score_to_json(s.min)}, {"max", score_to_json(s.max)}};
}

}  // namespace

nlohmann::json StudyResult::to_json() const {
    auto seeds_json = nlohmann::json::array();
    for (const auto& s : seeds) {
        std::vector<double> recon, adv;
        for (const auto& e : s.trace.epochs) {
            recon.push_back(e.reconstruction_loss);
            adv.push_back(e.adversary_loss);
        }
        seeds_json.push_back({{"seed", s.seed},
                              {"pre", fairprep::to_json(s.pre)},
                              {"post", fairprep::to_json(s.post)},
                              {"probe_auc_pre", s.probe_auc_pre},
                              {"probe_auc_post", s.probe_auc_post},
                              {"final_reconstruction_loss", recon.empty() ? 0.0 : recon.back()},
                              {"final_adversary_loss", adv.empty() ? 0.0 : adv.back()},
                              {"warnings", s.trace.warnings}});
    }
    auto strata_json = nlohmann::json::array();
    for (const auto& a : strata) {
        nlohmann::json j = {{"stratum", a.stratum}, {"pre", spread_json(a.pre)}, {"post", spread_json(a.post)}};
        if (a.truth) j["true_values"] = score_to_json(*a.truth);
        strata_json.push_back(std::move(j));
    }
    const std::string metric = seeds.empty() ? "" : seeds.front().pre.performance.metric;
    return {{"study", name},
            {"data",
             {{"origin", data.origin},
              {"path", data.path.filename().string()},
              {"sha256", data.sha256},
              {"rows_after_recipe", rows},
              {"warnings", data.warnings}}},
            {"config", config_echo},
            {"seeds", seeds_json},
            {"aggregate",
             {{"strata", strata_json},
              {"performance", {{"metric", metric}, {"pre", spread_json(performance_pre)}, {"post", spread_json(performance_post)}}},
              {"probe_auc", {{"pre", spread_json(probe_pre)}, {"post", spread_json(probe_post)}}}}}};
}

void write_study_outputs(const StudyResult& result, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_file_atomic(out_dir / "result.json", dump_json(result.to_json()));
    std::string tables_txt, tables_csv;
    for (const auto& s : result.seeds) {
        std::vector<TitledTable> cols;
        if (s.pre.true_values) cols.emplace_back("true", &*s.pre.true_values);
        cols.emplace_back("pre", &s.pre.bias_table);
        cols.emplace_back("post", &s.post.bias_table);
        const auto tag = "seed_" + std::to_string(s.seed);
        write_file_atomic(out_dir / (tag + "_bias_table.csv"), bias_tables_csv(cols));
        tables_txt += "seed " + std::to_string(s.seed) + "\n" + bias_tables_text(cols) + "\n";
        write_file_atomic(out_dir / (tag + "_hist_pre.csv"), histograms_csv(s.pre));
        write_file_atomic(out_dir / (tag + "_hist_post.csv"), histograms_csv(s.post));
    }
    write_file_atomic(out_dir / "bias_tables.txt", tables_txt);
}

}  // namespace fairprep

// fairprep command-line entry point.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairprep/audit.hpp"
#include "fairprep/debias.hpp"
#include "fairprep/error.hpp"
#include "fairprep/io.hpp"
#include "fairprep/study.hpp"
#include "fairprep/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairprep;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void require_input(const std::string& flag, const fs::path& path) {
    if (path.empty()) throw UsageError(flag + " is required");
    if (!fs::is_regular_file(path)) throw DataError(flag + ": cannot read " + path.string());
}

void require_output(const std::string& flag, const fs::path& path) {
    if (path.empty()) return;
    const auto parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(parent)) throw UsageError(flag + ": directory " + parent.string() + " does not exist");
    if (fs::is_directory(path)) throw UsageError(flag + ": " + path.string() + " is a directory");
}

// ---------------------------------------------------------------- debias

struct DebiasArgs {
    std::string input, schema, protected_columns, output, model_out, report, config;
    std::optional<double> lambda;
    std::optional<int> epochs;
    std::optional<std::size_t> latent;
    std::optional<std::uint64_t> seed;
};

json trace_json(const TrainingTrace& trace) {
    auto epochs = json::array();
    for (std::size_t i = 0; i < trace.epochs.size(); ++i) {
        const auto& e = trace.epochs[i];
        epochs.push_back({{"epoch", i + 1},
                          {"recon_loss", e.reconstruction_loss},
                          {"adv_loss", e.adversary_loss},
                          {"combined", e.combined_loss}});
    }
    return {{"epochs", epochs}, {"warnings", trace.warnings}};
}

int run_debias(const DebiasArgs& a) {
    require_input("--input", a.input);
    require_input("--schema", a.schema);
    if (a.output.empty()) throw UsageError("--output is required");
    require_output("--output", a.output);
    require_output("--model-out", a.model_out);
    require_output("--report", a.report);
    if (!a.config.empty()) require_input("--config", a.config);

    // Precedence: flag > config file > built-in default.
    DebiasConfig cfg;
    if (!a.config.empty()) {
        try {
            cfg = DebiasConfig::from_json(json::parse(read_file(a.config)));
        } catch (const json::parse_error& e) {
            throw DataError("--config: " + std::string(e.what()));
        }
    }
    if (a.lambda) cfg.adversary_weight = *a.lambda;
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.latent) cfg.latent_dim = *a.latent;
    if (a.seed) cfg.seed = *a.seed;
    cfg.validate();

    const Schema schema = load_schema(a.schema);
    DataTable table = load_csv(a.input, schema);
    if (!a.protected_columns.empty()) {
        const auto names = split_list(a.protected_columns);
        for (const auto& name : names) table = table.with_role(name, ColumnRole::Protected);
        // Protected columns the schema declares but the flag omits become plain features.
        for (auto c : table.columns_with_role(ColumnRole::Protected)) {
            const auto& n = table.spec(c).name;
            if (std::find(names.begin(), names.end(), n) == names.end()) table = table.with_role(n, ColumnRole::Feature);
        }
    }

    json report = {{"command", "debias"},
                   {"input", {{"path", a.input}, {"sha256", sha256_hex(read_file(a.input))}, {"rows", table.rows()}}},
                   {"config", cfg.to_json()}};
    auto write_report = [&] {
        if (!a.report.empty()) write_file_atomic(a.report, dump_json(report));
    };

    DebiasResult result;
    try {
        result = train_debiaser(table, cfg);
    } catch (const DebiasDivergence& e) {
        report["status"] = "diverged";
        report["error"] = e.what();
        report["trace"] = trace_json(e.trace());
        write_report();
        throw;
    }
    report["config"] = result.model.config.to_json();
    const DataTable debiased = transform(result.model, table);

    json probes = json::array();
    for (const auto& p : result.model.protected_columns) {
        probes.push_back({{"column", p.name},
                          {"pre", leakage_probe(table, p.name, cfg.seed)},
                          {"post", leakage_probe(debiased, p.name, cfg.seed)}});
    }

    save_csv(a.output, debiased);
    if (!a.model_out.empty()) save_debias_model(a.model_out, result.model);
    report["status"] = "ok";
    report["output"] = {{"path", a.output}, {"rows", debiased.rows()}};
    if (!a.model_out.empty()) report["model"] = a.model_out;
    report["probe_auc"] = probes;
    report["trace"] = trace_json(result.trace);
    write_report();

    for (const auto& p : probes) {
        std::cout << "debias: " << p["column"].get<std::string>() << " probe AUC " << p["pre"].get<double>()
                  << " -> " << p["post"].get<double>() << "\n";
    }
    return kOk;
}

// ---------------------------------------------------------------- audit

struct AuditArgs {
    std::string estimates, groups, strata, report, contrast, table, histograms;
    std::string estimate_column = "estimate";
    std::size_t bins = 20;
};

int run_audit(const AuditArgs& a) {
    require_input("--estimates", a.estimates);
    if (a.groups.empty()) throw UsageError("--groups is required");
    if (a.report.empty()) throw UsageError("--report is required");
    require_output("--report", a.report);
    require_output("--table", a.table);
    require_output("--histograms", a.histograms);
    if (a.bins == 0) throw UsageError("--bins must be positive");

    const auto doc = parse_csv(read_file(a.estimates));
    auto column_of = [&](const std::string& name) {
        const auto it = std::find(doc.header.begin(), doc.header.end(), name);
        if (it == doc.header.end()) throw DataError("estimates file has no column '" + name + "'");
        return static_cast<std::size_t>(it - doc.header.begin());
    };
    const auto est_col = column_of(a.estimate_column);
    const auto group_col = column_of(a.groups);
    std::optional<std::size_t> stratum_col;
    if (!a.strata.empty()) stratum_col = column_of(a.strata);

    std::vector<double> estimates;
    std::set<std::string> group_labels, stratum_labels;
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        const auto& cell = doc.rows[r][est_col];
        double v = 0;
        try {
            std::size_t used = 0;
            v = std::stod(cell, &used);
            if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw DataError("estimates file row " + std::to_string(r + 1) + ": '" + cell + "' is not a number");
        }
        estimates.push_back(v);
        if (doc.rows[r][group_col].empty()) throw DataError("estimates file row " + std::to_string(r + 1) + ": empty group");
        group_labels.insert(doc.rows[r][group_col]);
        if (stratum_col) stratum_labels.insert(doc.rows[r][*stratum_col]);
    }
    if (estimates.empty()) throw DataError("estimates file has no rows");

    Schema schema = {categorical_column(a.groups, {group_labels.begin(), group_labels.end()}, ColumnRole::Protected)};
    if (schema[0].categories.size() < 2) throw DataError("fewer than two groups");
    std::vector<std::vector<double>> cols(1);
    if (stratum_col) {
        std::vector<std::string> cats(stratum_labels.begin(), stratum_labels.end());
        if (cats.size() < 2) cats.push_back("\x01");  // a one-stratum file still needs a valid schema
        schema.push_back(categorical_column(a.strata, cats, ColumnRole::Drop));
        cols.emplace_back();
    }
    for (const auto& row : doc.rows) {
        cols[0].push_back(static_cast<double>(*schema[0].category_index(row[group_col])));
        if (stratum_col) cols[1].push_back(static_cast<double>(*schema[1].category_index(row[*stratum_col])));
    }
    const DataTable table(schema, std::move(cols));

    AuditOptions opts;
    opts.protected_column = a.groups;
    if (stratum_col) opts.stratum_column = a.strata;
    opts.bins = a.bins;
    if (!a.contrast.empty()) {
        const auto pair = split_list(a.contrast);
        if (pair.size() != 2) throw UsageError("--contrast needs two comma-separated groups");
        opts.contrast = std::make_pair(pair[0], pair[1]);
    }
    const json config = {{"estimates", a.estimates}, {"estimate_column", a.estimate_column}, {"groups", a.groups},
                         {"strata", a.strata.empty() ? json(nullptr) : json(a.strata)},
                         {"contrast", a.contrast.empty() ? json(nullptr) : json(a.contrast)}, {"bins", a.bins}};
    const auto report = audit(estimates, table, opts, Performance{}, {{"command", "audit"}, {"config", config}});

    write_file_atomic(a.report, dump_json(to_json(report)));
    if (!a.table.empty()) write_file_atomic(a.table, bias_tables_csv({{"estimates", &report.bias_table}}));
    if (!a.histograms.empty()) write_file_atomic(a.histograms, histograms_csv(report));
    std::cout << bias_tables_text({{"estimates", &report.bias_table}});
    return kOk;
}

// ---------------------------------------------------------------- run-study

struct StudyArgs {
    std::string config, out, data_dir;
    std::optional<std::size_t> seeds;
    bool offline = false;
};

int run_run_study(const StudyArgs& a) {
    require_input("--config", a.config);
    if (a.out.empty()) throw UsageError("--out is required");
    if (fs::exists(a.out) && !fs::is_directory(a.out)) throw UsageError("--out: " + a.out + " is not a directory");
    // The directory itself is created on demand; its parent must exist.
    {
        auto dir = fs::path(a.out).lexically_normal();
        if (!dir.has_filename()) dir = dir.parent_path();
        const auto parent = dir.parent_path();
        if (!parent.empty() && !fs::is_directory(parent))
            throw UsageError("--out: directory " + parent.string() + " does not exist");
    }
    if (a.seeds && *a.seeds == 0) throw UsageError("--seeds must be at least 1");

    const auto cfg = load_study_config(a.config);
    StudyOptions options;
    options.acquire.offline = a.offline;
    if (!a.data_dir.empty()) options.acquire.cache_dir = a.data_dir;
    options.seed_count = a.seeds;
    const auto result = run_study(cfg, options);
    write_study_outputs(result, a.out);

    for (const auto& w : result.data.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& s : result.strata) {
        std::cout << cfg.name << " " << s.stratum << ": bias " << s.pre.median << " -> " << s.post.median;
        if (s.truth) std::cout << " (true values " << *s.truth << ")";
        std::cout << "\n";
    }
    std::cout << cfg.name << " " << (cfg.model.kind == ModelKind::Logistic ? "accuracy " : "R^2 ")
              << result.performance_pre.median << " -> " << result.performance_post.median << "\n";
    return kOk;
}

// ---------------------------------------------------------------- synth-check

struct SynthArgs {
    SyntheticSpec spec;
    std::string report;
    std::optional<double> lambda;
    std::optional<int> epochs;
    std::optional<std::size_t> latent;
};

int run_synth_check(const SynthArgs& a) {
    require_output("--report", a.report);
    a.spec.validate();
    DebiasConfig debias;
    if (a.lambda) debias.adversary_weight = *a.lambda;
    if (a.epochs) debias.epochs = *a.epochs;
    debias.latent_dim = a.latent.value_or(std::max<std::size_t>(2, a.spec.features));
    debias.validate();
    const auto cmp = synth_check(a.spec, debias, ModelSpec{});
    json doc = cmp.to_json();
    doc["command"] = "synth-check";
    doc["config"] = {{"spec", a.spec.to_json()}, {"debias", debias.to_json()}, {"model", ModelSpec{}.to_json()}};
    if (!a.report.empty()) write_file_atomic(a.report, dump_json(doc));
    std::cout << "synth-check: " << cmp.outcome << "; fair accuracy " << cmp.fair_accuracy_pre << " -> "
              << cmp.fair_accuracy_post << ", bias " << cmp.bias_pre << " -> " << cmp.bias_post << ", probe AUC "
              << cmp.probe_auc_pre << " -> " << cmp.probe_auc_post << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairprep: adversarial debiasing and bias audits for tabular data"};
    app.require_subcommand(1);
    app.allow_extras(false);

    DebiasArgs debias;
    auto* cmd_debias = app.add_subcommand("debias", "Train a debiaser and write the debiased table");
    cmd_debias->add_option("--input", debias.input, "Input CSV");
    cmd_debias->add_option("--schema", debias.schema, "Schema JSON");
    cmd_debias->add_option("--protected", debias.protected_columns, "Protected column(s), comma-separated");
    cmd_debias->add_option("--output", debias.output, "Debiased CSV to write");
    cmd_debias->add_option("--model-out", debias.model_out, "Model artifact JSON to write");
    cmd_debias->add_option("--report", debias.report, "Report JSON to write");
    cmd_debias->add_option("--config", debias.config, "Debias config JSON");
    cmd_debias->add_option("--lambda", debias.lambda, "Adversary weight");
    cmd_debias->add_option("--epochs", debias.epochs, "Training epochs");
    cmd_debias->add_option("--latent", debias.latent, "Latent dimension");
    cmd_debias->add_option("--seed", debias.seed, "Random seed");

    AuditArgs audit_args;
    auto* cmd_audit = app.add_subcommand("audit", "Bias table from a standalone estimates file");
    cmd_audit->add_option("--estimates", audit_args.estimates, "Estimates CSV");
    cmd_audit->add_option("--estimate-column", audit_args.estimate_column, "Column holding the estimates")
        ->capture_default_str();
    cmd_audit->add_option("--groups", audit_args.groups, "Group column");
    cmd_audit->add_option("--strata", audit_args.strata, "Stratum column");
    cmd_audit->add_option("--contrast", audit_args.contrast, "The two groups to compare, comma-separated");
    cmd_audit->add_option("--bins", audit_args.bins, "Histogram bins")->capture_default_str();
    cmd_audit->add_option("--report", audit_args.report, "Report JSON to write");
    cmd_audit->add_option("--table", audit_args.table, "Bias table CSV to write");
    cmd_audit->add_option("--histograms", audit_args.histograms, "Histogram CSV to write");

    StudyArgs study;
    auto* cmd_study = app.add_subcommand("run-study", "Reproduce a case study from its config");
    cmd_study->add_option("--config", study.config, "Study config JSON");
    cmd_study->add_option("--seeds", study.seeds, "Number of seeds");
    cmd_study->add_option("--out", study.out, "Output directory");
    cmd_study->add_option("--data-dir", study.data_dir, "Dataset cache directory (default $FAIRPREP_DATA_DIR)");
    cmd_study->add_flag("--offline", study.offline, "Never download datasets");

    SynthArgs synth;
    auto* cmd_synth = app.add_subcommand("synth-check", "Ground-truth check on synthetic biased data");
    cmd_synth->add_option("--n", synth.spec.n, "Rows")->capture_default_str();
    cmd_synth->add_option("--beta", synth.spec.bias, "Label-flip probability for the protected group")
        ->capture_default_str();
    cmd_synth->add_option("--rho", synth.spec.proxy_strength, "Proxy strength")->capture_default_str();
    cmd_synth->add_option("--prevalence", synth.spec.prevalence, "Protected-group share")->capture_default_str();
    cmd_synth->add_option("--features", synth.spec.features, "Fair features")->capture_default_str();
    cmd_synth->add_option("--proxies", synth.spec.proxies, "Proxy features")->capture_default_str();
    cmd_synth->add_option("--seed", synth.spec.seed, "Random seed")->capture_default_str();
    cmd_synth->add_option("--lambda", synth.lambda, "Adversary weight");
    cmd_synth->add_option("--epochs", synth.epochs, "Debias training epochs");
    cmd_synth->add_option("--latent", synth.latent, "Latent width (default: number of fair features)");
    cmd_synth->add_option("--report", synth.report, "Report JSON to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*cmd_debias) return run_debias(debias);
        if (*cmd_audit) return run_audit(audit_args);
        if (*cmd_study) return run_run_study(study);
        if (*cmd_synth) return run_synth_check(synth);
    } catch (const UsageError& e) {
        std::cerr << "fairprep: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "fairprep: " << e.what() << "\n";
        return kNumerical;
    } catch (const DataError& e) {
        std::cerr << "fairprep: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "fairprep: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}

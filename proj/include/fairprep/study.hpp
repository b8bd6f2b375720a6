#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairprep/audit.hpp"
#include "fairprep/debias.hpp"
#include "fairprep/linear.hpp"
#include "fairprep/table.hpp"
#include "fairprep/transforms.hpp"

namespace fairprep {

// One step of a preparation recipe, as written in a study config:
//   {"op": "filter_rows", "column": "race", "keep": ["Caucasian", ...]}
//   {"op": "quartile_binarize", "column": "..."}
//   {"op": "bucket_numeric", "column": "Age", "edges": [35, 45], "labels": [...]}
//   {"op": "binarize_threshold", "column": "...", "comparison": ">=" | ">", "threshold": 1}
//   {"op": "drop_sparse_columns", "k": 22}
//   {"op": "drop_columns", "columns": [...]}
//   {"op": "drop_missing_rows", "column": "..."}
//   {"op": "set_role", "column": "...", "role": "protected"}
struct RecipeStep {
    std::string op;
    nlohmann::json args;
};

DataTable apply_step(const DataTable& table, const RecipeStep& step);
DataTable apply_recipe(const DataTable& table, const std::vector<RecipeStep>& recipe);

enum class ModelKind { Logistic, Linear, Ridge };

struct ModelSpec {
    ModelKind kind = ModelKind::Logistic;
    double ridge_lambda = 1.0;  // ridge only
    TrainConfig train;          // logistic only; seed is overridden per run

    nlohmann::json to_json() const;
    static ModelSpec from_json(const nlohmann::json& doc);
};

struct DataSource {
    std::string file;                    // name inside the cache directory
    std::string url;
    std::optional<std::string> sha256;   // of the public file, when known
    std::filesystem::path bundled;       // surrogate shipped with the repo
    std::optional<std::string> bundled_sha256;
    char delimiter = ',';                // of the public file
    std::vector<std::string> header;     // for public files without a header row
};

struct StudyConfig {
    std::string name;
    DataSource source;
    Schema schema;
    std::vector<RecipeStep> recipe;
    std::string protected_column;
    std::string target_column;
    ModelSpec model;
    DebiasConfig debias;
    std::vector<std::uint64_t> seeds;
    double test_fraction = 0.3;
    bool audit_on_all = true;            // false: audit the test rows only
    bool debias_fit_on_all = true;       // false: fit the debiaser on the train rows
    bool stratify = true;                // strata = target labels (classification)
    std::optional<std::pair<std::string, std::string>> contrast;
    std::map<std::string, std::string> stratum_names;
    std::size_t bins = 20;

    nlohmann::json to_json() const;
    // Relative bundled paths resolve against `base_dir`.
    static StudyConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
};

StudyConfig load_study_config(const std::filesystem::path& path);

struct LoadedData {
    DataTable table;
    std::string origin;  // "cache", "download" or "bundled"
    std::filesystem::path path;
    std::string sha256;
    std::vector<std::string> warnings;
};

struct AcquireOptions {
    bool offline = true;
    // Defaults to $FAIRPREP_DATA_DIR.
    std::optional<std::filesystem::path> cache_dir;
};

// Cached public file first, then a download (unless offline), then the
// bundled surrogate. Checksums are enforced whenever the config has one.
LoadedData acquire_data(const StudyConfig& cfg, const AcquireOptions& options);

struct PipelineRun {
    std::vector<double> estimates;  // one per row of the input table
    Performance performance;
    std::string digest;             // identifies the pipeline configuration
};

// The downstream model: fit on the train rows (protected and target columns
// never enter the features), estimate every row, score the test rows. Pre-
// and post-debias runs call this with different tables and nothing else.
PipelineRun run_pipeline(const DataTable& table, const std::string& target, const ModelSpec& model,
                         const SplitIndices& split, std::uint64_t seed);

struct SeedResult {
    std::uint64_t seed = 0;
    AuditReport pre;
    AuditReport post;
    double probe_auc_pre = 0;
    double probe_auc_post = 0;
    TrainingTrace trace;
};

struct Spread {
    double median = 0;
    double min = 0;
    double max = 0;
};
Spread spread(std::vector<double> values);

struct StratumAggregate {
    std::string stratum;
    Spread pre;
    Spread post;
    std::optional<double> truth;
};

struct StudyResult {
    std::string name;
    LoadedData data;  // table omitted from JSON
    std::size_t rows = 0;
    std::vector<SeedResult> seeds;
    std::vector<StratumAggregate> strata;
    Spread performance_pre;
    Spread performance_post;
    Spread probe_pre;
    Spread probe_post;
    nlohmann::json config_echo;

    const StratumAggregate& stratum(std::string_view name) const;
    nlohmann::json to_json() const;
};

struct StudyOptions {
    AcquireOptions acquire;
    std::optional<std::size_t> seed_count;  // overrides the config's seed list length
};

// Loads, prepares, and runs every seed: pre-debias pipeline and audit, then
// debias (same seed), identical pipeline, audit; finally aggregates.
StudyResult run_study(const StudyConfig& cfg, const StudyOptions& options = {});
StudyResult run_study_on(const StudyConfig& cfg, LoadedData data, const StudyOptions& options = {});

// Writes result.json, bias_table.csv, bias_table.txt and one histogram CSV
// per (seed, pre/post) into `out_dir`.
void write_study_outputs(const StudyResult& result, const std::filesystem::path& out_dir);

}  // namespace fairprep

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairprep/encoding.hpp"
#include "fairprep/error.hpp"
#include "fairprep/mlp.hpp"
#include "fairprep/table.hpp"

namespace fairprep {

struct DebiasConfig {
    std::size_t latent_dim = 0;     // 0: max(2, ceil(d / 2))
    std::size_t hidden_width = 0;   // 0: 2d
    std::size_t adversary_width = 0;  // 0: max(8, 2 * latent_dim)
    double adversary_weight = 1.0;  // lambda; 0 gives a plain autoencoder
    int epochs = 200;
    int adversary_steps = 3;        // adversary updates per encoder/decoder update
    double learning_rate = 1e-2;
    std::size_t batch_size = 0;     // 0: full batch below 4096 rows, else 4096
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static DebiasConfig from_json(const nlohmann::json& doc);
};

struct TraceEntry {
    double reconstruction_loss = 0;
    double adversary_loss = 0;
    double combined_loss = 0;
};

struct TrainingTrace {
    std::vector<TraceEntry> epochs;
    std::vector<std::string> warnings;

    std::string to_csv() const;
};

struct DebiasModel {
    Encoding encoding;                // fitted on the feature columns
    Mlp encoder;                      // d -> latent
    Mlp decoder;                      // latent -> d (raw outputs; see transform)
    std::vector<Mlp> adversaries;     // latent -> categories, one per protected column
    std::vector<ColumnSpec> protected_columns;
    DebiasConfig config;              // effective values, defaults resolved

    std::size_t latent_dim() const { return encoder.output_dim(); }
};

struct DebiasResult {
    DebiasModel model;
    TrainingTrace trace;
};

// Raised when a loss turns non-finite; carries the trace up to that epoch.
class DebiasDivergence : public NumericalError {
public:
    DebiasDivergence(const std::string& what, int epoch, TrainingTrace trace)
        : NumericalError(what, epoch), trace_(std::move(trace)) {}
    const TrainingTrace& trace() const noexcept { return trace_; }

private:
    TrainingTrace trace_;
};

// Alternating adversarial training. Each epoch, per batch:
//   1. the adversaries take `adversary_steps` Adam steps on the cross-entropy
//      of predicting each protected column from the (frozen) latent code;
//   2. encoder and decoder take one Adam step on
//        reconstruction - lambda * adversary cross-entropy,
//      the second term reaching the encoder as a reversed gradient through
//      the frozen adversaries.
// Reconstruction is averaged per source feature column: squared error for
// numeric, sigmoid cross-entropy for binary, softmax cross-entropy for each
// one-hot group. Only role=feature columns enter the encoder.
DebiasResult train_debiaser(const DataTable& table, const DebiasConfig& cfg);

// Same schema and row order as the input; protected and target cells pass
// through unchanged, feature cells are the decoded reconstruction.
DataTable transform(const DebiasModel& model, const DataTable& table);

// Decoder output mapped back into design space: numeric values as is,
// binary columns through a sigmoid, one-hot groups through a softmax.
Matrix reconstruct_design(const DebiasModel& model, const Matrix& design);

// Test AUC of a fresh logistic probe (70/30 split stratified on the
// protected column) predicting the protected column from every feature
// column. Multi-category columns report the one-vs-rest mean.
double leakage_probe(const DataTable& table, std::string_view protected_column, std::uint64_t seed);

nlohmann::json debias_model_to_json(const DebiasModel& model);
DebiasModel debias_model_from_json(const nlohmann::json& doc);
void save_debias_model(const std::filesystem::path& path, const DebiasModel& model);
DebiasModel load_debias_model(const std::filesystem::path& path);

}  // namespace fairprep

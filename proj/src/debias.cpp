#include "fairprep/debias.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fairprep/io.hpp"
#include "fairprep/linear.hpp"
#include "fairprep/rng.hpp"
#include "fairprep/transforms.hpp"

namespace fairprep {

namespace {

constexpr std::size_t kMaxFullBatch = 4096;

// One protected column as training labels; rows with a missing cell are masked.
struct ProtectedLabels {
    Matrix one_hot;            // n x c
    std::vector<char> present;
    std::size_t count = 0;
};

ProtectedLabels protected_labels(const DataTable& table, std::size_t col) {
    const auto& spec = table.spec(col);
    const auto cells = table.column(col);
    ProtectedLabels out;
    out.one_hot = Matrix::Zero(static_cast<Eigen::Index>(cells.size()),
                               static_cast<Eigen::Index>(spec.categories.size()));
    out.present.assign(cells.size(), 0);
    for (std::size_t r = 0; r < cells.size(); ++r) {
        if (is_missing(cells[r])) continue;
        out.one_hot(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cells[r])) = 1.0;
        out.present[r] = 1;
        ++out.count;
    }
    return out;
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t k = 0; k < rows.size(); ++k)
        out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
    return out;
}

struct LossAndGrad {
    double loss = 0;
    Matrix grad;  // w.r.t. logits / raw outputs
};

// Mean softmax cross-entropy over the rows whose label is present.
LossAndGrad adversary_loss(const Matrix& logits, const Matrix& one_hot, std::span<const char> present) {
    LossAndGrad out;
    out.grad = Matrix::Zero(logits.rows(), logits.cols());
    const Matrix probs = apply_activation(Activation::Softmax, logits);
    std::size_t m = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        if (!present[static_cast<std::size_t>(r)]) continue;
        ++m;
        Eigen::Index k;
        one_hot.row(r).maxCoeff(&k);
        const double z_max = logits.row(r).maxCoeff();
        const double lse = z_max + std::log((logits.row(r).array() - z_max).exp().sum());
        out.loss += lse - logits(r, k);
        out.grad.row(r) = probs.row(r) - one_hot.row(r);
    }
    if (m > 0) {
        out.loss /= static_cast<double>(m);
        out.grad /= static_cast<double>(m);
    }
    return out;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Reconstruction loss per source column, averaged over rows and columns.
LossAndGrad reconstruction_loss(const Encoding& enc, const Matrix& raw, const Matrix& target) {
    LossAndGrad out;
    out.grad = Matrix::Zero(raw.rows(), raw.cols());
    const double norm = 1.0 / (static_cast<double>(raw.rows()) * static_cast<double>(enc.blocks.size()));
    for (const auto& b : enc.blocks) {
        const auto j = static_cast<Eigen::Index>(b.first);
        const auto w = static_cast<Eigen::Index>(b.width);
        switch (b.type) {
            case FeatureBlock::Type::Numeric: {
                const Vector diff = raw.col(j) - target.col(j);
                out.loss += diff.squaredNorm();
                out.grad.col(j) = 2.0 * diff;
                break;
            }
            case FeatureBlock::Type::Binary: {
                for (Eigen::Index r = 0; r < raw.rows(); ++r) {
                    const double z = raw(r, j);
                    const double t = target(r, j);
                    // -t log s(z) - (1-t) log(1-s(z)) = softplus(z) - t z
                    out.loss += softplus(z) - t * z;
                    out.grad(r, j) = 1.0 / (1.0 + std::exp(-z)) - t;
                }
                break;
            }
            case FeatureBlock::Type::OneHot: {
                const Matrix logits = raw.middleCols(j, w);
                const Matrix probs = apply_activation(Activation::Softmax, logits);
                for (Eigen::Index r = 0; r < raw.rows(); ++r) {
                    const double z_max = logits.row(r).maxCoeff();
                    const double lse = z_max + std::log((logits.row(r).array() - z_max).exp().sum());
                    out.loss += lse - logits.row(r).dot(target.row(r).segment(j, w));
                }
                out.grad.middleCols(j, w) = probs - target.middleCols(j, w);
                break;
            }
        }
    }
    out.loss *= norm;
    out.grad *= norm;
    return out;
}

DebiasConfig resolve(const DebiasConfig& cfg, std::size_t d, std::size_t n) {
    DebiasConfig out = cfg;
    if (out.latent_dim == 0) out.latent_dim = std::max<std::size_t>(2, (d + 1) / 2);
    if (out.hidden_width == 0) out.hidden_width = 2 * d;
    if (out.adversary_width == 0) out.adversary_width = std::max<std::size_t>(8, 2 * out.latent_dim);
    if (out.batch_size == 0) out.batch_size = n < kMaxFullBatch ? n : kMaxFullBatch;
    return out;
}

}  // namespace

void DebiasConfig::validate() const {
    if (!(adversary_weight >= 0)) throw UsageError("adversary weight must be non-negative");
    if (epochs < 1) throw UsageError("epochs must be at least 1");
    if (adversary_steps < 0) throw UsageError("adversary steps must be non-negative");
    if (!(learning_rate > 0)) throw UsageError("learning rate must be positive");
}

nlohmann::json DebiasConfig::to_json() const {
    return {{"latent_dim", latent_dim},         {"hidden_width", hidden_width},
            {"adversary_width", adversary_width},
            {"adversary_weight", adversary_weight}, {"epochs", epochs},
            {"adversary_steps", adversary_steps},   {"learning_rate", learning_rate},
            {"batch_size", batch_size},             {"seed", seed}};
}

DebiasConfig DebiasConfig::from_json(const nlohmann::json& doc) {
    DebiasConfig c;
    try {
        c.latent_dim = doc.value("latent_dim", c.latent_dim);
        c.hidden_width = doc.value("hidden_width", c.hidden_width);
        c.adversary_width = doc.value("adversary_width", c.adversary_width);
        c.adversary_weight = doc.value("adversary_weight", c.adversary_weight);
        c.epochs = doc.value("epochs", c.epochs);
        c.adversary_steps = doc.value("adversary_steps", c.adversary_steps);
        c.learning_rate = doc.value("learning_rate", c.learning_rate);
        c.batch_size = doc.value("batch_size", c.batch_size);
        c.seed = doc.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed debias config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string TrainingTrace::to_csv() const {
    std::string out = "epoch,recon_loss,adv_loss,combined\n";
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        const auto& e = epochs[i];
        out += std::to_string(i + 1) + "," + format_number(e.reconstruction_loss) + "," +
               format_number(e.adversary_loss) + "," + format_number(e.combined_loss) + "\n";
    }
    return out;
}

DebiasResult train_debiaser(const DataTable& table, const DebiasConfig& cfg_in) {
    cfg_in.validate();
    const auto protected_cols = table.columns_with_role(ColumnRole::Protected);
    if (protected_cols.empty()) throw DataError("train_debiaser: no protected column");
    if (table.rows() < 50)
        throw DataError("train_debiaser: need at least 50 rows, got " + std::to_string(table.rows()));

    DebiasResult result;
    auto& model = result.model;
    std::vector<ProtectedLabels> labels;
    for (auto c : protected_cols) {
        const auto& spec = table.spec(c);
        if (!spec.is_coded())
            throw DataError("train_debiaser: protected column '" + spec.name + "' must be categorical or binary");
        labels.push_back(protected_labels(table, c));
        const Vector counts = labels.back().one_hot.colwise().sum();
        if ((counts.array() > 0).count() < 2)
            throw DataError("train_debiaser: protected column '" + spec.name +
                            "' is constant; nothing to debias");
        model.protected_columns.push_back(spec);
    }

    const auto working = drop_role_columns(table);
    model.encoding = fit_encoding(working);
    const Matrix x = encode(working, model.encoding).values;
    const std::size_t n = table.rows();
    const std::size_t d = model.encoding.width();
    if (d == 0) throw DataError("train_debiaser: no feature columns");

    const auto cfg = resolve(cfg_in, d, n);
    model.config = cfg;
    if (cfg.latent_dim >= d)
        result.trace.warnings.push_back("latent_dim " + std::to_string(cfg.latent_dim) +
                                        " >= feature dim " + std::to_string(d) + ": identity mapping risk");

    const Rng root(cfg.seed);
    {
        Rng r = root.split("encoder");
        model.encoder = mlp_init({d, cfg.hidden_width, cfg.latent_dim}, Activation::Tanh, Activation::Identity, r);
    }
    {
        Rng r = root.split("decoder");
        model.decoder = mlp_init({cfg.latent_dim, cfg.hidden_width, d}, Activation::Tanh, Activation::Identity, r);
    }
    for (std::size_t p = 0; p < labels.size(); ++p) {
        Rng r = root.split("adversary").split(p);
        const auto c = static_cast<std::size_t>(labels[p].one_hot.cols());
        model.adversaries.push_back(
            mlp_init({cfg.latent_dim, cfg.adversary_width, c}, Activation::Tanh, Activation::Softmax, r));
    }

    Adam enc_opt(model.encoder, cfg.learning_rate);
    Adam dec_opt(model.decoder, cfg.learning_rate);
    std::vector<Adam> adv_opt;
    for (const auto& a : model.adversaries) adv_opt.emplace_back(a, cfg.learning_rate);

    Rng batch_rng = root.split("batches");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const bool full_batch = cfg.batch_size >= n;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (!full_batch) batch_rng.shuffle(std::span(order));
        TraceEntry entry;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t m = std::min(cfg.batch_size, n - start);
            const std::span<const std::size_t> rows(order.data() + start, m);
            const Matrix xb = full_batch ? x : take_rows(x, rows);
            std::vector<Matrix> tb;
            std::vector<std::vector<char>> pb;
            for (const auto& l : labels) {
                tb.push_back(full_batch ? l.one_hot : take_rows(l.one_hot, rows));
                std::vector<char> present(m);
                for (std::size_t k = 0; k < m; ++k) present[k] = l.present[full_batch ? k : rows[k]];
                pb.push_back(std::move(present));
            }

            // (1) adversaries on the frozen code.
            const Matrix code = mlp_forward(model.encoder, xb).output;
            for (std::size_t p = 0; p < model.adversaries.size(); ++p) {
                for (int s = 0; s < cfg.adversary_steps; ++s) {
                    const auto cache = mlp_forward(model.adversaries[p], code);
                    const auto lg = adversary_loss(cache.pre.back(), tb[p], pb[p]);
                    adv_opt[p].step(model.adversaries[p],
                                    mlp_backward_from_logits(model.adversaries[p], cache, lg.grad));
                }
            }

            // (2) encoder + decoder against the frozen adversaries.
            const auto enc_cache = mlp_forward(model.encoder, xb);
            const auto dec_cache = mlp_forward(model.decoder, enc_cache.output);
            const auto rec = reconstruction_loss(model.encoding, dec_cache.output, xb);
            const auto dec_grad = mlp_backward_from_logits(model.decoder, dec_cache, rec.grad);
            Matrix code_grad = dec_grad.input;
            double adv_total = 0;
            for (std::size_t p = 0; p < model.adversaries.size(); ++p) {
                const auto cache = mlp_forward(model.adversaries[p], enc_cache.output);
                const auto lg = adversary_loss(cache.pre.back(), tb[p], pb[p]);
                adv_total += lg.loss;
                if (cfg.adversary_weight > 0) {
                    const auto g = mlp_backward_from_logits(model.adversaries[p], cache, lg.grad);
                    code_grad -= cfg.adversary_weight * g.input;
                }
            }
            const auto enc_grad = mlp_backward(model.encoder, enc_cache, code_grad);
            enc_opt.step(model.encoder, enc_grad);
            dec_opt.step(model.decoder, dec_grad);

            const double share = static_cast<double>(m) / static_cast<double>(n);
            entry.reconstruction_loss += share * rec.loss;
            entry.adversary_loss += share * adv_total;
        }
        entry.combined_loss = entry.reconstruction_loss - cfg.adversary_weight * entry.adversary_loss;
        result.trace.epochs.push_back(entry);
        if (!std::isfinite(entry.combined_loss) || !model.encoder.finite() || !model.decoder.finite()) {
            throw DebiasDivergence("debiaser diverged at epoch " + std::to_string(epoch + 1), epoch + 1,
                                   result.trace);
        }
    }
    return result;
}

Matrix reconstruct_design(const DebiasModel& model, const Matrix& design) {
    const Matrix code = mlp_forward(model.encoder, design).output;
    Matrix raw = mlp_forward(model.decoder, code).output;
    for (const auto& b : model.encoding.blocks) {
        const auto j = static_cast<Eigen::Index>(b.first);
        const auto w = static_cast<Eigen::Index>(b.width);
        if (b.type == FeatureBlock::Type::Binary) {
            raw.col(j) = apply_activation(Activation::Sigmoid, raw.col(j));
        } else if (b.type == FeatureBlock::Type::OneHot) {
            raw.middleCols(j, w) = apply_activation(Activation::Softmax, raw.middleCols(j, w));
        }
    }
    return raw;
}

DataTable transform(const DebiasModel& model, const DataTable& table) {
    // The encoding covers the table minus drop-role columns; match against that.
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (table.spec(c).role != ColumnRole::Drop) kept.push_back(c);
    }
    const auto& fitted = model.encoding.schema;
    if (kept.size() != fitted.size())
        throw DataError("transform: table schema does not match the fitted schema");
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& have = table.spec(kept[i]);
        const auto& want = fitted[i];
        if (have.name != want.name || have.kind != want.kind ||
            (have.role == ColumnRole::Feature) != (want.role == ColumnRole::Feature))
            throw DataError("transform: column '" + have.name + "' does not match the fitted schema");
        if (have.categories != want.categories)
            throw DataError("transform: column '" + have.name + "' has categories unseen at fit time");
    }

    const auto working = drop_role_columns(table);
    const auto design = encode(working, model.encoding);
    const Matrix recon = reconstruct_design(model, design.values);

    // Write decoded feature cells back into the full table, drop columns included.
    const auto decoded = decode(recon, model.encoding, design.carried);
    DataTable out = table;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (fitted[i].role != ColumnRole::Feature) continue;
        const auto cells = decoded.column(i);
        out = out.with_column(kept[i], table.spec(kept[i]), std::vector<double>(cells.begin(), cells.end()));
    }
    return out;
}

double leakage_probe(const DataTable& table, std::string_view protected_column, std::uint64_t seed) {
    const auto pcol = table.index_of(protected_column);
    const auto& pspec = table.spec(pcol);
    if (!pspec.is_coded())
        throw DataError("leakage_probe: protected column '" + pspec.name + "' must be categorical or binary");

    // Features only, with the protected column acting as the split target.
    std::vector<std::size_t> drop;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (c != pcol && table.spec(c).role != ColumnRole::Feature) drop.push_back(c);
    }
    DataTable probe = table.without_columns(drop).with_role(pspec.name, ColumnRole::Target);
    {
        // Rows without a protected label cannot be scored.
        std::vector<std::size_t> rows;
        const auto cells = probe.column(pspec.name);
        for (std::size_t r = 0; r < cells.size(); ++r) {
            if (!is_missing(cells[r])) rows.push_back(r);
        }
        probe = probe.select_rows(rows);
    }
    const auto labels_col = probe.index_of(pspec.name);
    const auto cells = probe.column(labels_col);
    std::vector<std::size_t> counts(pspec.categories.size(), 0);
    for (double v : cells) ++counts[static_cast<std::size_t>(v)];
    if (std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) < 2)
        throw DataError("leakage_probe: protected column '" + pspec.name + "' has a single class");

    const auto split = split_indices(probe, 0.3, seed);
    const DataTable train = probe.select_rows(split.train);
    const DataTable test = probe.select_rows(split.test);
    const auto enc = fit_encoding(train);
    const Matrix xtr = encode(train, enc).values;
    const Matrix xte = encode(test, enc).values;

    TrainConfig cfg;
    cfg.seed = seed;
    std::vector<std::size_t> classes;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] > 0) classes.push_back(k);
    }
    // Binary: one probe for the second present class. Otherwise one-vs-rest.
    if (classes.size() == 2) classes.erase(classes.begin());
    double total = 0;
    for (auto k : classes) {
        std::vector<double> ytr, yte;
        for (double v : train.column(labels_col)) ytr.push_back(v == static_cast<double>(k) ? 1.0 : 0.0);
        for (double v : test.column(labels_col)) yte.push_back(v == static_cast<double>(k) ? 1.0 : 0.0);
        const auto model = fit_logistic(xtr, ytr, cfg);
        const Vector scores = predict(model, xte);
        total += roc_auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), yte);
    }
    return total / static_cast<double>(classes.size());
}

nlohmann::json debias_model_to_json(const DebiasModel& model) {
    auto adversaries = nlohmann::json::array();
    for (const auto& a : model.adversaries) adversaries.push_back(mlp_to_json(a));
    return {{"format", "fairprep.debias_model/1"},
            {"config", model.config.to_json()},
            {"seed", model.config.seed},
            {"protected", schema_to_json(model.protected_columns)},
            {"encoding", encoding_to_json(model.encoding)},
            {"encoder", mlp_to_json(model.encoder)},
            {"decoder", mlp_to_json(model.decoder)},
            {"adversaries", adversaries}};
}

DebiasModel debias_model_from_json(const nlohmann::json& doc) {
    DebiasModel m;
    try {
        if (doc.at("format").get<std::string>() != "fairprep.debias_model/1")
            throw DataError("unsupported debias model format");
        m.config = DebiasConfig::from_json(doc.at("config"));
        m.protected_columns = schema_from_json(doc.at("protected"));
        m.encoding = encoding_from_json(doc.at("encoding"));
        m.encoder = mlp_from_json(doc.at("encoder"));
        m.decoder = mlp_from_json(doc.at("decoder"));
        for (const auto& a : doc.at("adversaries")) m.adversaries.push_back(mlp_from_json(a));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed debias model: ") + e.what());
    }
    if (m.encoder.input_dim() != m.encoding.width() || m.decoder.output_dim() != m.encoding.width() ||
        m.decoder.input_dim() != m.encoder.output_dim())
        throw DataError("debias model networks do not chain");
    return m;
}

void save_debias_model(const std::filesystem::path& path, const DebiasModel& model) {
    write_file_atomic(path, dump_json(debias_model_to_json(model)));
}

DebiasModel load_debias_model(const std::filesystem::path& path) {
    try {
        return debias_model_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace fairprep

#include "fairprep/encoding.hpp"

#include <cmath>

#include "fairprep/error.hpp"
#include "fairprep/io.hpp"

namespace fairprep {

std::string Encoding::design_name(std::size_t j) const {
    for (const auto& b : blocks) {
        if (j < b.first || j >= b.first + b.width) continue;
        const auto& spec = schema[b.source];
        if (b.type != FeatureBlock::Type::OneHot) return spec.name;
        const auto k = j - b.first;
        return spec.name + "=" + (k < spec.categories.size() ? spec.categories[k] : std::string("<missing>"));
    }
    throw DataError("design column " + std::to_string(j) + " out of range");
}

std::span<const double> DesignMatrix::carried_column(std::size_t source) const {
    for (const auto& [idx, cells] : carried) {
        if (idx == source) return cells;
    }
    throw DataError("column " + std::to_string(source) + " is not carried by the design matrix");
}

Encoding fit_encoding(const DataTable& table, bool fit_scaler) {
    if (!table.columns_with_role(ColumnRole::Drop).empty())
        throw DataError("encode: drop-role columns must be removed first");
    Encoding enc;
    enc.schema = table.schema();
    enc.fill.assign(table.cols(), 0.0);
    std::size_t next = 0;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        const auto& spec = table.spec(c);
        const auto cells = table.column(c);
        double sum = 0;
        std::size_t present = 0;
        for (double v : cells) {
            if (!is_missing(v)) {
                sum += v;
                ++present;
            }
        }
        if (spec.role != ColumnRole::Feature) continue;
        if (present == 0) throw DataError("encode: column '" + spec.name + "' has no values");

        FeatureBlock block;
        block.source = c;
        block.first = next;
        switch (spec.kind) {
            case ColumnKind::Numeric: {
                const double mean = sum / static_cast<double>(present);
                double ss = 0;
                for (double v : cells) {
                    if (!is_missing(v)) ss += (v - mean) * (v - mean);
                }
                // Imputed cells sit at the mean, so they add nothing to ss but count in n.
                const double sd = std::sqrt(ss / static_cast<double>(cells.size()));
                block.type = FeatureBlock::Type::Numeric;
                enc.fill[c] = mean;
                enc.mean.push_back(fit_scaler ? mean : 0.0);
                enc.scale.push_back(fit_scaler && sd > 0 ? sd : 1.0);
                break;
            }
            case ColumnKind::Binary:
                block.type = FeatureBlock::Type::Binary;
                enc.fill[c] = sum / static_cast<double>(present);
                enc.mean.push_back(0.0);
                enc.scale.push_back(1.0);
                break;
            case ColumnKind::Categorical: {
                block.type = FeatureBlock::Type::OneHot;
                block.missing_slot = present < cells.size();
                block.width = spec.categories.size() + (block.missing_slot ? 1 : 0);
                std::vector<std::size_t> counts(spec.categories.size(), 0);
                for (double v : cells) {
                    if (!is_missing(v)) ++counts[static_cast<std::size_t>(v)];
                }
                std::size_t mode = 0;
                for (std::size_t k = 1; k < counts.size(); ++k) {
                    if (counts[k] > counts[mode]) mode = k;
                }
                enc.fill[c] = static_cast<double>(mode);
                for (std::size_t k = 0; k < block.width; ++k) {
                    enc.mean.push_back(0.0);
                    enc.scale.push_back(1.0);
                }
                break;
            }
        }
        next += block.width;
        enc.blocks.push_back(block);
    }
    return enc;
}

DesignMatrix encode(const DataTable& table, const Encoding& enc) {
    if (table.cols() != enc.schema.size())
        throw DataError("encode: table has " + std::to_string(table.cols()) + " columns, encoding expects " +
                        std::to_string(enc.schema.size()));
    for (std::size_t c = 0; c < table.cols(); ++c) {
        const auto& have = table.spec(c);
        const auto& want = enc.schema[c];
        if (have.name != want.name || have.kind != want.kind)
            throw DataError("encode: column " + std::to_string(c) + " is '" + have.name +
                            "', encoding expects '" + want.name + "'");
        if (have.categories != want.categories)
            throw DataError("encode: column '" + have.name + "' has categories unseen at fit time");
    }

    DesignMatrix out;
    out.encoding = enc;
    const auto n = static_cast<Eigen::Index>(table.rows());
    out.values = Matrix::Zero(n, static_cast<Eigen::Index>(enc.width()));
    for (const auto& b : enc.blocks) {
        const auto cells = table.column(b.source);
        const auto j0 = static_cast<Eigen::Index>(b.first);
        for (Eigen::Index r = 0; r < n; ++r) {
            double v = cells[static_cast<std::size_t>(r)];
            switch (b.type) {
                case FeatureBlock::Type::Numeric:
                    if (is_missing(v)) v = enc.fill[b.source];
                    out.values(r, j0) = (v - enc.mean[b.first]) / enc.scale[b.first];
                    break;
                case FeatureBlock::Type::Binary:
                    out.values(r, j0) = is_missing(v) ? enc.fill[b.source] : v;
                    break;
                case FeatureBlock::Type::OneHot: {
                    std::size_t k;
                    if (!is_missing(v)) {
                        k = static_cast<std::size_t>(v);
                    } else if (b.missing_slot) {
                        k = b.width - 1;
                    } else {
                        k = static_cast<std::size_t>(enc.fill[b.source]);
                    }
                    out.values(r, j0 + static_cast<Eigen::Index>(k)) = 1.0;
                    break;
                }
            }
        }
    }
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (table.spec(c).role == ColumnRole::Feature) continue;
        const auto cells = table.column(c);
        out.carried.emplace_back(c, std::vector<double>(cells.begin(), cells.end()));
    }
    return out;
}

DesignMatrix encode(const DataTable& table, bool fit_scaler) {
    return encode(table, fit_encoding(table, fit_scaler));
}

DataTable decode(const Matrix& values, const Encoding& enc,
                 const std::vector<std::pair<std::size_t, std::vector<double>>>& carried) {
    if (static_cast<std::size_t>(values.cols()) != enc.width())
        throw DataError("decode: matrix has " + std::to_string(values.cols()) + " columns, column map has " +
                        std::to_string(enc.width()));
    const auto n = static_cast<std::size_t>(values.rows());
    std::vector<std::vector<double>> columns(enc.schema.size());
    for (const auto& b : enc.blocks) {
        auto& col = columns[b.source];
        col.resize(n);
        const auto j0 = static_cast<Eigen::Index>(b.first);
        for (std::size_t r = 0; r < n; ++r) {
            const auto row = static_cast<Eigen::Index>(r);
            switch (b.type) {
                case FeatureBlock::Type::Numeric:
                    col[r] = values(row, j0) * enc.scale[b.first] + enc.mean[b.first];
                    break;
                case FeatureBlock::Type::Binary:
                    col[r] = values(row, j0) > 0.5 ? 1.0 : 0.0;
                    break;
                case FeatureBlock::Type::OneHot: {
                    std::size_t best = 0;
                    for (std::size_t k = 1; k < b.width; ++k) {
                        if (values(row, j0 + static_cast<Eigen::Index>(k)) >
                            values(row, j0 + static_cast<Eigen::Index>(best)))
                            best = k;
                    }
                    col[r] = (b.missing_slot && best == b.width - 1) ? kMissing : static_cast<double>(best);
                    break;
                }
            }
        }
    }
    for (const auto& [idx, cells] : carried) {
        if (idx >= columns.size() || cells.size() != n)
            throw DataError("decode: carried column does not fit the matrix");
        columns[idx] = cells;
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].size() != n)
            throw DataError("decode: no values for column '" + enc.schema[c].name + "'");
    }
    return DataTable(enc.schema, std::move(columns));
}

DataTable decode(const DesignMatrix& matrix) {
    return decode(matrix.values, matrix.encoding, matrix.carried);
}

namespace {

std::string_view block_type_name(FeatureBlock::Type t) {
    switch (t) {
        case FeatureBlock::Type::Numeric: return "numeric";
        case FeatureBlock::Type::Binary: return "binary";
        case FeatureBlock::Type::OneHot: return "one_hot";
    }
    return "?";
}

}  // namespace

nlohmann::json encoding_to_json(const Encoding& enc) {
    auto blocks = nlohmann::json::array();
    for (const auto& b : enc.blocks) {
        blocks.push_back({{"type", block_type_name(b.type)},
                          {"source", b.source},
                          {"first", b.first},
                          {"width", b.width},
                          {"missing_slot", b.missing_slot}});
    }
    return {{"schema", schema_to_json(enc.schema)},
            {"blocks", blocks},
            {"mean", enc.mean},
            {"scale", enc.scale},
            {"fill", enc.fill}};
}

Encoding encoding_from_json(const nlohmann::json& doc) {
    Encoding enc;
    try {
        enc.schema = schema_from_json(doc.at("schema"));
        for (const auto& j : doc.at("blocks")) {
            FeatureBlock b;
            const auto type = j.at("type").get<std::string>();
            if (type == "numeric") b.type = FeatureBlock::Type::Numeric;
            else if (type == "binary") b.type = FeatureBlock::Type::Binary;
            else if (type == "one_hot") b.type = FeatureBlock::Type::OneHot;
            else throw DataError("unknown feature block type '" + type + "'");
            b.source = j.at("source").get<std::size_t>();
            b.first = j.at("first").get<std::size_t>();
            b.width = j.at("width").get<std::size_t>();
            b.missing_slot = j.at("missing_slot").get<bool>();
            enc.blocks.push_back(b);
        }
        enc.mean = doc.at("mean").get<std::vector<double>>();
        enc.scale = doc.at("scale").get<std::vector<double>>();
        enc.fill = doc.at("fill").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed encoding: ") + e.what());
    }
    if (enc.mean.size() != enc.scale.size() || enc.fill.size() != enc.schema.size())
        throw DataError("malformed encoding: inconsistent lengths");
    return enc;
}

}  // namespace fairprep

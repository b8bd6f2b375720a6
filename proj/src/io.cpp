#include "fairprep/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "fairprep/error.hpp"

namespace fairprep {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_missing_token(std::string_view s) { return s.empty() || s == "NA" || s == "?"; }

double parse_double(std::string_view s) {
    // Spreadsheet exports write "75%" and "$31,141.72".
    std::string cleaned;
    if (s.ends_with('%') || s.starts_with('$')) {
        if (s.ends_with('%')) s.remove_suffix(1);
        if (s.starts_with('$')) s.remove_prefix(1);
        for (char c : s) {
            if (c != ',') cleaned.push_back(c);
        }
        s = cleaned;
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return kMissing;
    return v;
}

double parse_cell(std::string_view raw, const ColumnSpec& spec) {
    const auto s = trim(raw);
    if (is_missing_token(s)) return kMissing;
    switch (spec.kind) {
        case ColumnKind::Numeric:
            return parse_double(s);
        case ColumnKind::Binary: {
            const double v = parse_double(s);
            return (v == 0.0 || v == 1.0) ? v : kMissing;
        }
        case ColumnKind::Categorical:
            if (auto i = spec.category_index(s)) return static_cast<double>(*i);
            return kMissing;
    }
    return kMissing;
}

}  // namespace

CsvDocument parse_csv(std::string_view text, char delimiter) {
    CsvDocument doc;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        // A blank line yields a single empty field; skip it.
        if (!(record.size() == 1 && record.front().empty())) {
            if (doc.header.empty()) {
                doc.header = std::move(record);
            } else {
                if (record.size() != doc.header.size())
                    throw DataError("CSV line " + std::to_string(line) + " has " +
                                    std::to_string(record.size()) + " fields, header has " +
                                    std::to_string(doc.header.size()));
                doc.rows.push_back(std::move(record));
            }
        }
        record.clear();
    };

    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == delimiter) {
            record.push_back(std::move(field));
            field.clear();
            field_started = false;
            continue;
        }
        switch (c) {
            case '"':
                if (field_started && !field.empty())
                    throw DataError("CSV line " + std::to_string(line) + ": stray quote");
                in_quotes = true;
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes) throw DataError("CSV ends inside a quoted field");
    if (field_started || !record.empty()) end_record();
    if (doc.header.empty()) throw DataError("CSV has no header row");
    return doc;
}

std::string quote_csv_field(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

DataTable table_from_csv(const CsvDocument& doc, const Schema& schema, const CsvOptions& options) {
    validate_schema(schema);
    std::map<std::string, std::size_t, std::less<>> header_pos;
    for (std::size_t i = 0; i < doc.header.size(); ++i) {
        if (!header_pos.emplace(doc.header[i], i).second)
            throw DataError("duplicate header name '" + doc.header[i] + "'");
    }
    std::vector<std::size_t> source(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
        auto it = header_pos.find(schema[c].name);
        if (it == header_pos.end())
            throw DataError("schema column '" + schema[c].name + "' is not in the CSV header");
        source[c] = it->second;
    }
    if (!options.allow_extra_columns && doc.header.size() != schema.size()) {
        for (const auto& name : doc.header) {
            bool known = false;
            for (const auto& s : schema) known = known || s.name == name;
            if (!known) throw DataError("CSV column '" + name + "' is not in the schema");
        }
    }
    std::vector<std::vector<double>> columns(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
        columns[c].reserve(doc.rows.size());
        for (const auto& row : doc.rows) columns[c].push_back(parse_cell(row[source[c]], schema[c]));
    }
    return DataTable(schema, std::move(columns));
}

DataTable load_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& options) {
    return table_from_csv(parse_csv(read_file(path)), schema, options);
}

std::string to_csv(const DataTable& table) {
    std::string out;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (c) out.push_back(',');
        out += quote_csv_field(table.spec(c).name);
    }
    out.push_back('\n');
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (c) out.push_back(',');
            out += quote_csv_field(table.label(r, c));
        }
        out.push_back('\n');
    }
    return out;
}

void save_csv(const std::filesystem::path& path, const DataTable& table) {
    write_file_atomic(path, to_csv(table));
}

nlohmann::json schema_to_json(const Schema& schema) {
    auto out = nlohmann::json::array();
    for (const auto& c : schema) {
        nlohmann::json j = {{"name", c.name}, {"kind", to_string(c.kind)}, {"role", to_string(c.role)}};
        if (c.kind == ColumnKind::Categorical) j["categories"] = c.categories;
        out.push_back(std::move(j));
    }
    return out;
}

Schema schema_from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) throw DataError("schema must be a JSON list");
    Schema schema;
    try {
        for (const auto& j : doc) {
            ColumnSpec spec;
            spec.name = j.at("name").get<std::string>();
            spec.kind = parse_kind(j.at("kind").get<std::string>());
            spec.role = parse_role(j.value("role", std::string("feature")));
            if (spec.kind == ColumnKind::Binary) {
                spec.categories = {"0", "1"};
            } else if (j.contains("categories")) {
                spec.categories = j.at("categories").get<std::vector<std::string>>();
            }
            schema.push_back(std::move(spec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed schema: ") + e.what());
    }
    validate_schema(schema);
    return schema;
}

Schema load_schema(const std::filesystem::path& path) {
    try {
        return schema_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::string sha256_hex(std::string_view content) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(content.data(), content.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace fairprep

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairprep/table.hpp"

namespace fairprep {

struct CsvDocument {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// RFC 4180 style: double-quote quoting with "" escapes, LF or CRLF line
// ends. Throws DataError on ragged rows or open quotes.
CsvDocument parse_csv(std::string_view text, char delimiter = ',');
std::string quote_csv_field(std::string_view field);

struct CsvOptions {
    // Source files such as the public COMPAS export carry many more columns
    // than a recipe uses; with this set, unlisted header columns are skipped.
    bool allow_extra_columns = false;
};

// Columns come back in schema order. Empty fields, NA and ? are missing; so
// is any cell that does not parse under its column kind. Numeric cells may
// carry a trailing % or a leading $ with thousands separators.
DataTable load_csv(const std::filesystem::path& path, const Schema& schema,
                   const CsvOptions& options = {});
DataTable table_from_csv(const CsvDocument& doc, const Schema& schema,
                         const CsvOptions& options = {});

std::string to_csv(const DataTable& table);
void save_csv(const std::filesystem::path& path, const DataTable& table);

nlohmann::json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& doc);
Schema load_schema(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
// Serialization used for every report: two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& doc);

std::string sha256_hex(std::string_view content);

}  // namespace fairprep

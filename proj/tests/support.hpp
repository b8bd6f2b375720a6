#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fairprep/table.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

std::filesystem::path source_dir();
std::filesystem::path cli_path();
std::filesystem::path generator_path();

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

// Runs the fairprep CLI with the given arguments (shell-quoted here).
CommandResult run_cli(const std::vector<std::string>& args);
CommandResult run_command(const std::filesystem::path& exe, const std::vector<std::string>& args);

}  // namespace testing

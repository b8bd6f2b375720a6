#pragma once

#include <filesystem>
#include <string>

namespace fairprep {

// HTTP(S) GET into `dest` (written atomically). Follows redirects. Throws
// DataError on any failure.
void download_file(const std::string& url, const std::filesystem::path& dest);

}  // namespace fairprep

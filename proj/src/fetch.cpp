#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "fairprep/fetch.hpp"

#include <httplib.h>

#include <regex>

#include "fairprep/error.hpp"
#include "fairprep/io.hpp"

namespace fairprep {

void download_file(const std::string& url, const std::filesystem::path& dest) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) throw DataError("unsupported URL '" + url + "'");
    httplib::Client client(m[1].str());
    client.set_follow_location(true);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    const std::string path = m[2].matched ? m[2].str() : "/";
    auto res = client.Get(path);
    if (!res) throw DataError("download of '" + url + "' failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw DataError("download of '" + url + "' returned HTTP " + std::to_string(res->status));
    write_file_atomic(dest, res->body);
}

}  // namespace fairprep

#include "hydroquad/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hydroquad/errors.hpp"

namespace hydroquad {

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_str(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for hashing");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    if (in.bad()) throw IoError("read error while hashing " + path);
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ManifestEntry manifest_entry(const std::string& base_dir, const std::string& file,
                             const std::string& role) {
    namespace fs = std::filesystem;
    ManifestEntry e;
    std::error_code ec;
    const fs::path rel = fs::relative(file, base_dir, ec);
    if (ec || rel.empty() || rel.native().compare(0, 2, "..") == 0)
        e.path = fs::path(file).filename().string();
    else
        e.path = rel.generic_string();
    e.role = role;
    e.bytes = static_cast<std::uint64_t>(fs::file_size(file, ec));
    if (ec) throw IoError("cannot stat " + file);
    e.fnv1a64 = hex64(fnv1a64_file(file));
    return e;
}

void write_manifest(const std::string& path,
                    const std::map<std::string, std::string>& meta,
                    std::vector<ManifestEntry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) {
                  return a.role != b.role ? a.role < b.role : a.path < b.path;
              });
    nlohmann::json j;
    j["meta"] = meta;
    nlohmann::json files = nlohmann::json::array();
    for (const ManifestEntry& e : entries) {
        files.push_back({{"path", e.path},
                         {"role", e.role},
                         {"bytes", e.bytes},
                         {"fnv1a64", e.fnv1a64}});
    }
    j["files"] = files;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write error on manifest " + path);
}

} // namespace hydroquad

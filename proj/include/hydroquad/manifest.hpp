#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hydroquad {

/// FNV-1a 64-bit hash, streamed over bytes.
std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64_str(std::string_view s);

/// Hash of a file's contents. Throws IoError if unreadable.
std::uint64_t fnv1a64_file(const std::string& path);

/// 16 lowercase hex digits.
std::string hex64(std::uint64_t h);

/// Record of one file a command read or wrote. Paths are stored
/// relative to the manifest's own directory so run trees relocate cleanly.
struct ManifestEntry {
    std::string path;
    std::string role; // "output" or "input"
    std::uint64_t bytes = 0;
    std::string fnv1a64;
};

/// Hashes `file` and builds its entry with the path made relative to
/// base_dir (falls back to the basename for paths outside it).
ManifestEntry manifest_entry(const std::string& base_dir, const std::string& file,
                             const std::string& role);

/// Writes {meta, files} as JSON. Entries are sorted by (role, path); meta is
/// an ordered string map. Contains no timestamps or absolute paths, so
/// reruns are byte-identical.
void write_manifest(const std::string& path,
                    const std::map<std::string, std::string>& meta,
                    std::vector<ManifestEntry> entries);

} // namespace hydroquad

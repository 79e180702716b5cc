#pragma once

#include "io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stochwave::app {

std::string sha256_hex(const std::string& data);
std::string sha256_file(const fs::path& path);

struct ManifestFile {
    std::string path; // relative to the output directory, '/' separated
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct Manifest {
    std::string status = "incomplete"; // incomplete | complete
    std::string experiment;
    std::string version;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string config_sha256;
    std::vector<std::size_t> completed; // realisation indices already on disk
    int blowups = 0;
    std::vector<ManifestFile> files;
};

inline constexpr const char* kManifestName = "manifest.json";

// Hashes every regular file under dir (except the manifest and *.part files)
// in sorted order and writes manifest.json.
void write_manifest(const fs::path& dir, Manifest m);
std::optional<Manifest> read_manifest(const fs::path& dir);

// Problems found: missing files, hash mismatches, files not listed.
std::vector<std::string> verify_manifest(const fs::path& dir);

std::string version_string();

} // namespace stochwave::app

#include "manifest.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <memory>

#ifndef STOCHWAVE_VERSION_STRING
#define STOCHWAVE_VERSION_STRING "unknown"
#endif

namespace stochwave::app {

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
    }
    void update(const void* p, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), p, n) != 1) throw IoError("sha256 update failed");
    }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw IoError("sha256 final failed");
        static const char* digits = "0123456789abcdef";
        std::string s;
        for (unsigned int i = 0; i < len; ++i) {
            s += digits[md[i] >> 4];
            s += digits[md[i] & 15];
        }
        return s;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::vector<fs::path> listed_files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir);
        if (rel == kManifestName || e.path().extension() == ".part") continue;
        out.push_back(rel);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

std::string sha256_hex(const std::string& data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    Sha256 h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h.update(buf, static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

void write_manifest(const fs::path& dir, Manifest m) {
    m.files.clear();
    for (const auto& rel : listed_files(dir))
        m.files.push_back({rel.generic_string(), sha256_file(dir / rel), fs::file_size(dir / rel)});
    std::sort(m.completed.begin(), m.completed.end());
    nlohmann::ordered_json j;
    j["status"] = m.status;
    j["experiment"] = m.experiment;
    j["version"] = m.version;
    j["seed"] = m.seed;
    j["workers"] = m.workers;
    j["config_sha256"] = m.config_sha256;
    j["completed_realisations"] = m.completed;
    j["blowups"] = m.blowups;
    auto& files = j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    write_text(dir / kManifestName, j.dump(2) + "\n");
}

std::optional<Manifest> read_manifest(const fs::path& dir) {
    if (!fs::exists(dir / kManifestName)) return std::nullopt;
    const auto j = nlohmann::json::parse(read_text(dir / kManifestName));
    Manifest m;
    m.status = j.at("status").get<std::string>();
    m.experiment = j.at("experiment").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.workers = j.at("workers").get<int>();
    m.config_sha256 = j.at("config_sha256").get<std::string>();
    m.completed = j.at("completed_realisations").get<std::vector<std::size_t>>();
    m.blowups = j.at("blowups").get<int>();
    for (const auto& f : j.at("files"))
        m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(), f.at("bytes").get<std::uintmax_t>()});
    return m;
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
    std::vector<std::string> problems;
    const auto m = read_manifest(dir);
    if (!m) return {"no manifest in " + dir.string()};
    std::vector<std::string> listed;
    for (const auto& f : m->files) {
        listed.push_back(f.path);
        const fs::path p = dir / f.path;
        if (!fs::exists(p)) {
            problems.push_back("missing: " + f.path);
        } else if (sha256_file(p) != f.sha256) {
            problems.push_back("hash mismatch: " + f.path);
        }
    }
    std::sort(listed.begin(), listed.end());
    for (const auto& rel : listed_files(dir))
        if (!std::binary_search(listed.begin(), listed.end(), rel.generic_string()))
            problems.push_back("not in manifest: " + rel.generic_string());
    return problems;
}

std::string version_string() { return STOCHWAVE_VERSION_STRING; }

} // namespace stochwave::app

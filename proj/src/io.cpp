#include "io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace stochwave::app {

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : path_(path), tmp_(path.string() + ".part"), cols_(header.size()) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    f_ = std::fopen(tmp_.c_str(), "wb");
    if (!f_) throw IoError("cannot write " + tmp_.string());
    for (std::size_t i = 0; i < header.size(); ++i) std::fprintf(f_, "%s%s", i ? "," : "", header[i].c_str());
    std::fputc('\n', f_);
}

CsvWriter::~CsvWriter() {
    if (f_) {
        std::fclose(f_);
        std::error_code ec;
        fs::remove(tmp_, ec);
    }
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != cols_) throw IoError(path_.string() + ": row width does not match header");
    for (std::size_t i = 0; i < values.size(); ++i) std::fprintf(f_, "%s%s", i ? "," : "", fmt(values[i]).c_str());
    std::fputc('\n', f_);
}

void CsvWriter::close() {
    if (!f_) return;
    const bool bad = std::ferror(f_) != 0;
    std::fclose(f_);
    f_ = nullptr;
    if (bad) throw IoError("write failed for " + tmp_.string());
    fs::rename(tmp_, path_);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".part";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw IoError("missing column '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
    std::istringstream in(read_text(path));
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    {
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) t.header.push_back(c);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) r.push_back(std::strtod(c.c_str(), nullptr));
        if (r.size() != t.header.size()) throw IoError(path.string() + ": ragged row");
        t.rows.push_back(std::move(r));
    }
    return t;
}

} // namespace stochwave::app

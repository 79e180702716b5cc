#pragma once

#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochwave::app {

namespace fs = std::filesystem;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// %.17g; non-finite values as nan / inf / -inf.
std::string fmt(double x);

// Writes to <path>.part and renames on close, so a killed run never leaves a
// truncated file under the final name.
class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<double>& values);
    void close();

private:
    fs::path path_, tmp_;
    std::FILE* f_ = nullptr;
    std::size_t cols_ = 0;
};

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const fs::path& path);

} // namespace stochwave::app

#pragma once

// CSV output, run manifests and the config hash.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace nmuon::bench {

inline constexpr const char* kProjectVersion = "0.1.0";

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// Shortest text that parses back to the same double.
std::string format_double(double v);

// Fixed header, one row per call; rows must match the header width. Cells
// holding commas, quotes or newlines are quoted.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

    void row(const std::vector<std::string>& cells);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::size_t width_;
    std::ofstream out_;
};

struct Manifest {
    std::string experiment;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string status;  // "pass", "fail" or "error"
    std::vector<std::string> files;

    std::string to_json() const;
    void write(const std::filesystem::path& dir) const;
};

}  // namespace nmuon::bench

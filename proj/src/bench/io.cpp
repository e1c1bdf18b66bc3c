#include "nmuon/bench/io.hpp"

#include <charconv>
#include <cstdio>

#include "json.hpp"
#include "nmuon/errors.hpp"

namespace nmuon::bench {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), width_(header.size()) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot open '" + path.string() + "' for writing");
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw DimensionMismatch("CSV row width differs from the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out_ << (i ? "," : "");
        const std::string& c = cells[i];
        if (c.find_first_of(",\"\n") == std::string::npos) {
            out_ << c;
            continue;
        }
        out_ << '"';
        for (char ch : c) out_ << (ch == '"' ? "\"\"" : std::string(1, ch));
        out_ << '"';
    }
    out_ << '\n';
    out_.flush();
}

std::string Manifest::to_json() const {
    nlohmann::ordered_json j;
    j["experiment"] = experiment;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["status"] = status;
    j["versions"] = {{"nmuon", kProjectVersion}, {"compiler", __VERSION__}, {"cplusplus", __cplusplus}};
    j["files"] = files;
    return j.dump(2) + "\n";
}

void Manifest::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write manifest in '" + dir.string() + "'");
    out << to_json();
}

}  // namespace nmuon::bench

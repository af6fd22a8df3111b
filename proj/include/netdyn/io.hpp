#pragma once

// Delimited text input/output.  Input formats are plain comma-separated
// tables with a header row; weeks and scores are parsed as exact integers.
// Output tables carry a provenance comment block (tool version, config
// digest, seed, PRNG identity) ahead of the header.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "netdyn/core.hpp"
#include "netdyn/version.hpp"

namespace netdyn {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::int64_t parse_int_strict(std::string_view field, long line) {
    field = trim(field);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw parse_error("expected integer, got '" + std::string(field) + "'", line);
    return value;
}

inline double parse_double_strict(std::string_view field, long line) {
    field = trim(field);
    std::string tmp(field);
    char* end = nullptr;
    double value = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || tmp.empty())
        throw parse_error("expected number, got '" + std::string(field) + "'", line);
    return value;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::uint64_t file_digest(const std::string& path) { return fnv1a(read_file(path)); }

inline std::string format_double(double v, int precision = 10) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

// ---------------------------------------------------------------------------
// Provenance block written at the top of every output table.

struct Provenance {
    std::uint64_t config_digest = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> extra;

    std::string header_block() const {
        std::string out;
        out += std::string("# tool: ") + kToolName + " " + kToolVersion + "\n";
        out += "# config_digest: " + hex64(config_digest) + "\n";
        out += "# seed: " + std::to_string(seed) + "\n";
        out += std::string("# prng: ") + kPrngName + "\n";
        for (const auto& [k, v] : extra) out += "# " + k + ": " + v + "\n";
        return out;
    }
};

// Writes a delimited table; undefined values are emitted as empty fields.
class TableWriter {
public:
    TableWriter(const std::string& path, const Provenance& prov, std::string_view header)
        : out_(path, std::ios::binary) {
        if (!out_) throw error("cannot write file: " + path);
        out_ << prov.header_block();
        out_ << header << '\n';
    }

    void field(std::string_view v) {
        if (!first_) out_ << ',';
        out_ << v;
        first_ = false;
    }
    void field(double v) { field(std::string_view(format_double(v))); }
    void field(std::int64_t v) { field(std::string_view(std::to_string(v))); }
    void field(std::uint64_t v) { field(std::string_view(std::to_string(v))); }
    void field(int v) { field(static_cast<std::int64_t>(v)); }
    void field(unsigned v) { field(static_cast<std::uint64_t>(v)); }
    void field(bool v) { field(std::string_view(v ? "1" : "0")); }
    template <typename T>
    void field(const std::optional<T>& v) {
        if (v)
            field(*v);
        else
            field(std::string_view(""));
    }

    void end_row() {
        out_ << '\n';
        first_ = true;
    }

private:
    std::ofstream out_;
    bool first_ = true;
};

// Iterates data lines of a delimited file, skipping '#' comments; calls
// fn(line_number, fields).  The first non-comment line is the header and is
// passed to on_header.
template <typename HeaderFn, typename RowFn>
void for_each_csv_row(const std::string& path, HeaderFn&& on_header, RowFn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open file: " + path);
    std::string line;
    long lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        if (!saw_header) {
            on_header(lineno, split_fields(sv));
            saw_header = true;
            continue;
        }
        fn(lineno, split_fields(sv));
    }
    if (!saw_header) throw parse_error("empty input: " + path);
}

} // namespace netdyn

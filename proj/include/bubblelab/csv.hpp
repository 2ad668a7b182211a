#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bubblelab/errors.hpp"

namespace bubblelab {

// All numeric output uses 17 significant digits so values survive a
// write/read round trip bit-exactly and repeated runs are byte-identical.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Atomic file write: content lands under the final name only when complete.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot open for writing: " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

/// Series CSV with header `t,value`.
inline void write_series_csv(const std::filesystem::path& path,
                             const std::vector<double>& values) {
    std::string out = "t,value\n";
    for (std::size_t t = 0; t < values.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += format_double(values[t]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

inline std::vector<double> read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open series CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,value")
        throw ConfigError("series CSV must start with header 't,value': " +
                          path.string());
    std::vector<double> values;
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("malformed series CSV row: " + line);
        std::size_t t = 0;
        try {
            t = std::stoul(line.substr(0, comma));
        } catch (const std::exception&) {
            throw ConfigError("malformed series CSV index: " + line);
        }
        if (t != expected)
            throw ConfigError("series CSV rows must be consecutive from 0: " + line);
        try {
            values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ConfigError("malformed series CSV value: " + line);
        }
        ++expected;
    }
    if (values.empty()) throw ConfigError("series CSV has no rows: " + path.string());
    return values;
}

/// Generic table writer: caller supplies the header and preformatted rows.
inline void write_table_csv(const std::filesystem::path& path,
                            const std::string& header,
                            const std::vector<std::string>& rows) {
    std::string out = header;
    out += '\n';
    for (const auto& row : rows) {
        out += row;
        out += '\n';
    }
    write_file_atomic(path, out);
}

}  // namespace bubblelab

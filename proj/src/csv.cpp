#include "cosimo/errors.hpp"
#include "cosimo/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace cosimo {

void Table::add(std::vector<std::string> row) {
    if (row.size() != header.size())
        throw DimensionError("table row has " + std::to_string(row.size()) + " fields, header has " +
                             std::to_string(header.size()));
    rows.push_back(std::move(row));
}

std::string Table::to_csv() const {
    std::string out;
    const auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += fields[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string format_number(long long v) { return std::to_string(v); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace cosimo

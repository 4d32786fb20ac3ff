#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "io/csv.hpp"

namespace io {

namespace {

void check_field(const std::string& field) {
    if (field.find_first_of(",\"\n\r") != std::string::npos)
        throw std::invalid_argument("csv: field would need quoting: " + field);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

void write_csv(const std::string& path, const Csv& csv) {
    if (csv.header.empty()) throw std::invalid_argument("csv: header is mandatory");
    std::ostringstream out;
    for (size_t i = 0; i < csv.header.size(); ++i) {
        check_field(csv.header[i]);
        out << (i ? "," : "") << csv.header[i];
    }
    out << '\n';
    for (const auto& row : csv.rows) {
        if (row.size() != csv.header.size())
            throw std::invalid_argument("csv: row width differs from header");
        for (size_t i = 0; i < row.size(); ++i) {
            check_field(row[i]);
            out << (i ? "," : "") << row[i];
        }
        out << '\n';
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("csv: cannot open for writing: " + path);
    file << out.str();
    if (!file) throw std::runtime_error("csv: write failed: " + path);
}

Csv read_csv(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("csv: cannot open: " + path);
    Csv csv;
    std::string line;
    while (std::getline(file, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (csv.header.empty()) {
            csv.header = std::move(fields);
        } else {
            if (fields.size() != csv.header.size())
                throw std::runtime_error("csv: ragged row in " + path);
            csv.rows.push_back(std::move(fields));
        }
    }
    if (csv.header.empty()) throw std::runtime_error("csv: missing header in " + path);
    return csv;
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

} // namespace io

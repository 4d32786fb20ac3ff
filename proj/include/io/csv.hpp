#pragma once

#include <string>
#include <vector>

namespace io {

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows; // each row matches header size
};

// UTF-8, LF line endings, mandatory header. Fields must stay free of commas,
// quotes and newlines; violations throw rather than quote.
void write_csv(const std::string& path, const Csv& csv);

// Throws on unreadable file, missing header or ragged rows.
Csv read_csv(const std::string& path);

// Shortest decimal that round-trips the double.
std::string format_double(double x);

} // namespace io

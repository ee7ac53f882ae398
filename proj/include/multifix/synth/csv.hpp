#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "multifix/common.hpp"

namespace multifix::synth {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

// Comma-separated, UTF-8, first row is the header. Double quotes protect
// embedded commas; quotes double to escape.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("csv: cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty() && is.eof()) break;
        auto cells = split_csv_line(line);
        if (first) {
            t.header = cells;
            first = false;
        } else if (!(cells.size() == 1 && cells[0].empty())) {
            t.rows.push_back(cells);
        }
    }
    if (first) throw DataError("csv: '" + path + "' is empty");
    return t;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : os_(path) {
        if (!os_) throw DataError("csv: cannot open '" + path + "' for writing");
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << csv_escape(cells[i]);
        }
        os_ << '\n';
    }

  private:
    std::ofstream os_;
};

inline double parse_number(const std::string& s, int row, const std::string& col) {
    char* end = nullptr;
    double v = strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw DataError("csv: non-numeric value '" + s + "' in column '" + col + "' at data row " +
                        std::to_string(row));
    return v;
}

}  // namespace multifix::synth

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace ddpc {

/// Doubles are printed with %.17g so written values round-trip bit-exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : os_(path) {
        if (!os_) throw std::runtime_error("cannot open " + path + " for writing");
    }

    void header(const std::vector<std::string>& cols) { row_strings(cols); }

    void row_strings(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i];
        }
        os_ << '\n';
    }

    class Row {
    public:
        explicit Row(std::ofstream& os) : os_(os) {}
        Row& add(double v) {
            sep();
            os_ << format_double(v);
            return *this;
        }
        Row& add(int v) {
            sep();
            os_ << v;
            return *this;
        }
        Row& add(long v) {
            sep();
            os_ << v;
            return *this;
        }
        Row& add(const std::string& v) {
            sep();
            os_ << v;
            return *this;
        }
        ~Row() { os_ << '\n'; }

    private:
        void sep() {
            if (!first_) os_ << ',';
            first_ = false;
        }
        std::ofstream& os_;
        bool first_ = true;
    };

    Row row() { return Row(os_); }

private:
    std::ofstream os_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            table.columns = cells;
            first = false;
        } else {
            table.rows.push_back(cells);
        }
    }
    return table;
}

}  // namespace ddpc

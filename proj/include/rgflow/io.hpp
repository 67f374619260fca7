#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "rgflow/errors.hpp"

namespace rgflow {

// Fixed-width float formatting, locale independent: 12 significant digits for
// CSV data files, 17 for JSON reports.  Identical config must give
// byte-identical files.
inline std::string format_csv(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.11e", x);
    return buf;
}

inline std::string format_json(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns) : out_(path) {
        if (!out_) throw usage_error("cannot open output file: " + path);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ',';
            out_ << columns[i];
        }
        out_ << '\n';
        width_ = columns.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw usage_error("CSV row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
    std::size_t width_ = 0;
};

}  // namespace rgflow

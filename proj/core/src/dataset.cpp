#include "cam/dataset.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cam/errors.hpp"

namespace cam {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0';
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd x, std::vector<std::string> names)
    : x_(std::move(x)), names_(std::move(names)) {
    if (names_.empty()) {
        names_.reserve(p());
        for (int j = 0; j < p(); ++j) names_.push_back("x" + std::to_string(j));
    }
    if (static_cast<int>(names_.size()) != p()) {
        throw InvalidData("column name count does not match column count");
    }
}

Dataset Dataset::subsample_rows(const std::vector<int>& rows) const {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), p());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= n()) throw InvalidData("row index out of range");
        sub.row(static_cast<Eigen::Index>(i)) = x_.row(rows[i]);
    }
    return Dataset(std::move(sub), names_);
}

Dataset Dataset::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidData("cannot open " + path);

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw InvalidData("empty CSV: " + path);

    // Header detection: first row counts as a header iff some cell is non-numeric.
    std::vector<std::string> first = split_csv_line(lines[0]);
    bool has_header = false;
    for (const auto& c : first) {
        double v;
        if (!parse_double(c, v)) {
            has_header = true;
            break;
        }
    }
    std::vector<std::string> names;
    std::size_t start = 0;
    if (has_header) {
        names = first;
        start = 1;
    }
    if (start >= lines.size()) throw InvalidData("CSV has a header but no data rows: " + path);

    const std::size_t cols = split_csv_line(lines[start]).size();
    if (cols == 0) throw InvalidData("CSV has no columns: " + path);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(lines.size() - start),
                      static_cast<Eigen::Index>(cols));
    for (std::size_t i = start; i < lines.size(); ++i) {
        std::vector<std::string> cells = split_csv_line(lines[i]);
        if (cells.size() != cols) {
            throw InvalidData("ragged CSV row " + std::to_string(i + 1) + " in " + path);
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double v;
            if (!parse_double(cells[j], v)) {
                throw InvalidData("non-numeric cell at row " + std::to_string(i + 1) +
                                  ", column " + std::to_string(j + 1) + " in " + path);
            }
            x(static_cast<Eigen::Index>(i - start), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return Dataset(std::move(x), std::move(names));
}

void Dataset::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidData("cannot write " + path);
    for (int j = 0; j < p(); ++j) {
        out << names_[j] << (j + 1 < p() ? "," : "\n");
    }
    char buf[64];
    for (int i = 0; i < n(); ++i) {
        for (int j = 0; j < p(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", x_(i, j));
            out << buf << (j + 1 < p() ? "," : "\n");
        }
    }
}

}  // namespace cam

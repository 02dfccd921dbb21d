#include "mvsde/app/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mvsde/error.hpp"

namespace mvsde::app {

std::string format_double(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()), header_(header) {}

void CsvWriter::comment(const std::string& key, const std::string& value) {
    if (header_written_) {
        throw std::logic_error("CsvWriter: metadata must precede the header");
    }
    text_ += "# " + key + "=" + value + "\n";
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) {
        throw std::logic_error("CsvWriter: row width does not match the header");
    }
    if (!header_written_) {
        header_written_ = true;
        append(header_);
    }
    append(fields);
}

std::string CsvWriter::str() const {
    if (header_written_) {
        return text_;
    }
    CsvWriter copy = *this;
    copy.header_written_ = true;
    copy.append(header_);
    return copy.text_;
}

void CsvWriter::append(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) {
            text_ += ',';
        }
        text_ += fields[i];
    }
    text_ += '\n';
}

std::ptrdiff_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return static_cast<std::ptrdiff_t>(i);
        }
    }
    return -1;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

} // namespace

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            const auto body = line.substr(line.find_first_not_of("# "));
            const auto eq = body.find('=');
            if (eq != std::string::npos) {
                table.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            }
            continue;
        }
        auto fields = split(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw ConfigError("csv line " + std::to_string(lineno) + ": expected " +
                              std::to_string(table.header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (table.header.empty()) {
        throw ConfigError("csv: no header row");
    }
    return table;
}

double parse_double(const std::string& field) {
    if (field.empty() || field == "nan" || field == "-nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (field == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (field == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    char* end = nullptr;
    const double x = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0') {
        throw ConfigError("csv: '" + field + "' is not a number");
    }
    return x;
}

} // namespace mvsde::app

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace mvsde::app {

/// %.17g, so a double survives a text round trip. nan and inf print as such.
[[nodiscard]] std::string format_double(double x);

/// Builds LF-terminated CSV text. Fields are never quoted; callers pass plain tokens.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header);

    void comment(const std::string& key, const std::string& value);
    void row(const std::vector<std::string>& fields);

    /// Text so far; the header is always present even with no rows.
    [[nodiscard]] std::string str() const;

private:
    void append(const std::vector<std::string>& fields);

    std::string text_;
    std::size_t columns_;
    bool header_written_ = false;
    std::vector<std::string> header_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::pair<std::string, std::string>> metadata; ///< from "# key=value" lines

    [[nodiscard]] std::ptrdiff_t column(const std::string& name) const;
};

/// Parses text written by CsvWriter. Throws ConfigError on ragged rows or a missing header.
[[nodiscard]] CsvTable parse_csv(const std::string& text);

/// Parses a field as a double; "nan", "inf" and "-inf" are accepted. Empty gives nan.
[[nodiscard]] double parse_double(const std::string& field);

} // namespace mvsde::app

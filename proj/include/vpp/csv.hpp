#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vpp::csv {

/// Splits one CSV record. Double-quoted fields may contain commas; `""`
/// inside quotes is a literal quote.
std::vector<std::string> split_line(std::string_view line);

/// Header-aware line reader over a comma separated file.
class Reader {
public:
    explicit Reader(const std::filesystem::path& path);

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::optional<std::size_t> column(std::string_view name) const;

    /// Next non-empty record, or false at end of file.
    bool next(std::vector<std::string>& fields);
    std::size_t line_number() const noexcept { return line_no_; }

private:
    std::ifstream in_;
    std::vector<std::string> header_;
    std::size_t line_no_ = 0;
};

/// Shortest round-trip decimal representation.
std::string format_double(double v);

double parse_double(std::string_view text);

}  // namespace vpp::csv

#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace geotrace::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, embedded separators and
/// line breaks. CRLF and LF line endings are both accepted.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of input. Blank lines are skipped.
    std::optional<Row> next();
    /// Physical line where the last returned record started (1-based).
    std::size_t line() const { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

/// Column lookup by header name.
class Header {
public:
    explicit Header(const Row& names);
    std::optional<std::size_t> index(std::string_view name) const;

private:
    Row names_;
};

}  // namespace geotrace::csv

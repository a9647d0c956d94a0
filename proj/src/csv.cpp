#include "geotrace/csv.hpp"

#include <algorithm>

namespace geotrace::csv {

std::optional<Row> Reader::next() {
    while (true) {
        int c = in_.peek();
        if (c == std::char_traits<char>::eof()) return std::nullopt;
        if (c == '\n') {
            in_.get();
            ++line_;
            continue;
        }
        if (c == '\r') {
            in_.get();
            continue;
        }
        break;
    }
    record_line_ = line_;
    Row row;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    while (true) {
        int c = in_.get();
        if (c == std::char_traits<char>::eof()) break;
        if (quoted) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line_;
                field += static_cast<char>(c);
            }
            continue;
        }
        if (c == '"' && field.empty() && !field_was_quoted) {
            quoted = true;
            field_was_quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (c == '\r') {
            if (in_.peek() == '\n') continue;
            break;
        } else if (c == '\n') {
            ++line_;
            break;
        } else {
            field += static_cast<char>(c);
        }
    }
    row.push_back(std::move(field));
    return row;
}

std::string escape(std::string_view field) {
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_row(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << escape(row[i]);
    }
    out << '\n';
}

Header::Header(const Row& names) : names_(names) {
    for (auto& n : names_) {
        auto b = n.find_first_not_of(" \t");
        auto e = n.find_last_not_of(" \t");
        n = b == std::string::npos ? std::string{} : n.substr(b, e - b + 1);
    }
    // Strip a UTF-8 BOM from the first column name.
    if (!names_.empty() && names_[0].rfind("\xEF\xBB\xBF", 0) == 0) names_[0].erase(0, 3);
}

std::optional<std::size_t> Header::index(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

}  // namespace geotrace::csv

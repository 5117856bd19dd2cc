#pragma once
// Minimal RFC 4180 reader: quoted cells may contain commas, doubled quotes and
// newlines.

#include <istream>
#include <string>
#include <vector>

namespace metacot::csv {

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    // Reads one record; returns false at end of input.
    bool next(std::vector<std::string>& row) {
        row.clear();
        if (in_.peek() == std::char_traits<char>::eof()) return false;
        std::string cell;
        bool quoted = false;
        for (;;) {
            const int ch = in_.get();
            if (ch == std::char_traits<char>::eof()) {
                row.push_back(std::move(cell));
                return true;
            }
            const char c = static_cast<char>(ch);
            if (quoted) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        cell.push_back('"');
                        in_.get();
                    } else {
                        quoted = false;
                    }
                } else {
                    cell.push_back(c);
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                row.push_back(std::move(cell));
                cell.clear();
            } else if (c == '\n') {
                row.push_back(std::move(cell));
                return true;
            } else if (c != '\r') {
                cell.push_back(c);
            }
        }
    }

private:
    std::istream& in_;
};

// Quotes a cell when it contains a delimiter, quote or line break.
inline std::string escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace metacot::csv

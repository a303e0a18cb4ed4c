#ifndef MOLCOMM_CSV_HPP
#define MOLCOMM_CSV_HPP

// Locale-independent CSV output: comma separated, '.' decimal point,
// shortest round-trip formatting of doubles.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "molcomm/error_analysis.hpp"
#include "molcomm/errors.hpp"

namespace molcomm {

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string format_number(std::int64_t x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// A CSV cell: number, integer, text, or empty.
class CsvCell {
public:
    CsvCell() = default;
    CsvCell(double x) : text_(format_number(x)) {}
    CsvCell(std::int64_t x) : text_(format_number(x)) {}
    CsvCell(int x) : text_(format_number(static_cast<std::int64_t>(x))) {}
    CsvCell(std::uint64_t x) : text_(std::to_string(x)) {}
    CsvCell(std::optional<double> x) : text_(x ? format_number(*x) : std::string{}) {}
    CsvCell(const char* s) : text_(quote(s)) {}
    CsvCell(const std::string& s) : text_(quote(s)) {}

    const std::string& text() const noexcept { return text_; }

private:
    static std::string quote(std::string_view s) {
        if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + '"';
    }
    std::string text_;
};

class CsvWriter {
public:
    CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), columns_(header.size()) {
        write_row(std::vector<CsvCell>(header.begin(), header.end()));
    }

    void row(std::initializer_list<CsvCell> cells) { write_row(std::vector<CsvCell>(cells)); }
    void row(const std::vector<CsvCell>& cells) { write_row(cells); }

private:
    void write_row(const std::vector<CsvCell>& cells) {
        if (cells.size() != columns_)
            throw DomainError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(columns_));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i].text();
        }
        os_ << '\n';
    }
    std::ostream& os_;
    std::size_t columns_;
};

/// Per-interval error table: j (one-based), pe_analytic, pe_mc, ci95.
/// Either report may be absent; missing values are left empty.
inline void write_ber_csv(std::ostream& os, const BerReport* analytic, const BerReport* mc) {
    const std::size_t n = analytic ? analytic->per_interval.size() : mc ? mc->per_interval.size() : 0;
    if (analytic && mc && analytic->per_interval.size() != mc->per_interval.size())
        throw DomainError("write_ber_csv: reports cover different numbers of intervals");
    CsvWriter w(os, {"j", "pe_analytic", "pe_mc", "ci95"});
    for (std::size_t j = 0; j < n; ++j) {
        std::optional<double> pa, pm, ci;
        if (analytic) pa = analytic->per_interval[j];
        if (mc) {
            pm = mc->per_interval[j];
            ci = ci95_half_width(mc->per_interval[j], mc->ensemble_size);
        }
        w.row({static_cast<std::int64_t>(j + 1), pa, pm, ci});
    }
}

}  // namespace molcomm

#endif  // MOLCOMM_CSV_HPP

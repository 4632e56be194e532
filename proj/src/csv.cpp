#include "kinetik/csv.hpp"

#include <charconv>
#include <cmath>

#include "kinetik/common.hpp"

namespace kinetik {

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) : os_(path) {
    if (!os_) throw ValidationError("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
}

CsvWriter& CsvWriter::operator<<(double x) { return *this << fmt(x); }

CsvWriter& CsvWriter::operator<<(const std::string& s) {
    if (!row_start_) os_ << ',';
    os_ << s;
    row_start_ = false;
    return *this;
}

void CsvWriter::end_row() {
    os_ << '\n';
    row_start_ = true;
}

}  // namespace kinetik

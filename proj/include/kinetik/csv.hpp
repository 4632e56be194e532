#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace kinetik {

// Shortest round-trip decimal form, '.' separator regardless of locale.
std::string fmt(double x);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(const std::string& s);
    void end_row();

private:
    std::ofstream os_;
    bool row_start_ = true;
};

}  // namespace kinetik

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cvqkd {

/// Fixed-format number for CSV output: "%.10g", so identical inputs give
/// identical bytes.
std::string format_number(double v);

class CsvWriter {
   public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    const std::filesystem::path& path() const noexcept { return path_; }

   private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
};

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
    bool scatter{false};
    bool dashed{false};
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y{false};
    std::vector<PlotSeries> series;
};

/// Minimal static SVG line/scatter chart. Non-positive values are dropped on
/// a log axis.
void write_svg(const std::filesystem::path& path, const Plot& plot);

}  // namespace cvqkd

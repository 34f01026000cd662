#include "cvqkd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cvqkd/core.hpp"

namespace cvqkd {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw ProcessingError("report", "cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw ProcessingError("report", "CSV row has the wrong column count");
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
    out_ << '\n';
}

namespace {

constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            default: o += c;
        }
    }
    return o;
}

}  // namespace

void write_svg(const std::filesystem::path& path, const Plot& plot) {
    constexpr double W = 720, H = 480, L = 80, R = 160, Tm = 40, B = 60;
    auto ty = [&](double y) { return plot.log_y ? std::log10(y) : y; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.log_y && s.y[i] <= 0.0)) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!(x1 >= x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - Tm - B); };

    std::ofstream o(path, std::ios::binary);
    if (!o) throw ProcessingError("report", "cannot write " + path.string());
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(plot.title)
      << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << W - L - R << "\" height=\"" << H - Tm - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4.0;
        const double fy = y0 + (y1 - y0) * k / 4.0;
        const double X = px(fx);
        const double Y = H - B - (fy - y0) / (y1 - y0) * (H - Tm - B);
        o << "<text x=\"" << X << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << format_number(fx)
          << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << Y + 4 << "\" text-anchor=\"end\">"
          << format_number(plot.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">"
      << escape(plot.x_label) << "</text>\n";
    o << "<text x=\"18\" y=\"" << (Tm + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (Tm + H - B) / 2 << ")\">" << escape(plot.y_label) << "</text>\n";

    for (std::size_t si = 0; si < plot.series.size(); ++si) {
        const auto& s = plot.series[si];
        const char* color = palette[si % std::size(palette)];
        if (s.scatter) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (plot.log_y && s.y[i] <= 0.0) continue;
                o << "<circle cx=\"" << format_number(px(s.x[i])) << "\" cy=\"" << format_number(py(s.y[i]))
                  << "\" r=\"1.5\" fill=\"" << color << "\" fill-opacity=\"0.5\"/>\n";
            }
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
              << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (plot.log_y && s.y[i] <= 0.0) continue;
                o << format_number(px(s.x[i])) << "," << format_number(py(s.y[i])) << " ";
            }
            o << "\"/>\n";
        }
        const double ly = Tm + 14 + 18 * static_cast<double>(si);
        o << "<rect x=\"" << W - R + 12 << "\" y=\"" << ly - 8 << "\" width=\"12\" height=\"8\" fill=\"" << color
          << "\"/>\n<text x=\"" << W - R + 30 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
}

}  // namespace cvqkd

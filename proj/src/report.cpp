#include "mfl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mfl {

std::string format_cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot open for writing: " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw ConfigError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw ConfigError("rename failed: " + target.string() + ": " + ec.message());
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw ConfigError("CSV table needs at least one column");
}

void CsvTable::add_row(const std::vector<double>& cells) {
    std::vector<std::string> text(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) text[i] = format_cell(cells[i]);
    add_text_row(text);
}

void CsvTable::add_text_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
        throw ConfigError("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(columns_.size()));
    rows_.push_back(cells);
}

std::string CsvTable::to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) out << ',';
        out << columns_[i];
    }
    out << '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    return out.str();
}

void CsvTable::write(const std::string& path) const { write_text_atomic(path, to_string()); }

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct AxisMap {
    double lo = 0.0, hi = 1.0;
    bool log = false;
    double pix0 = 0.0, pix1 = 1.0;

    double to_pix(double v) const {
        double t = log ? (std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo))
                       : (v - lo) / (hi - lo);
        return pix0 + t * (pix1 - pix0);
    }
};

void axis_range(const std::vector<PlotSeries>& series, bool log, bool use_x, double& lo,
                double& hi) {
    lo = 1e300;
    hi = -1e300;
    for (const auto& s : series) {
        const auto& vals = use_x ? s.xs : s.ys;
        for (double v : vals) {
            if (log && v <= 0.0) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (lo > hi) {
        lo = log ? 0.1 : 0.0;
        hi = 1.0;
    }
    if (lo == hi) {
        const double pad = log ? 0.0 : std::max(1.0, std::abs(lo)) * 0.1;
        if (log) {
            lo *= 0.5;
            hi *= 2.0;
        } else {
            lo -= pad;
            hi += pad;
        }
    } else if (!log) {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    } else {
        lo *= 0.8;
        hi *= 1.25;
    }
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return std::string(buf);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<PlotSeries>& series, bool logx,
                    bool logy) {
    const double width = 720.0, height = 480.0;
    const double ml = 80.0, mr = 30.0, mt = 48.0, mb = 60.0;

    AxisMap X, Y;
    X.log = logx;
    Y.log = logy;
    axis_range(series, logx, true, X.lo, X.hi);
    axis_range(series, logy, false, Y.lo, Y.hi);
    X.pix0 = ml;
    X.pix1 = width - mr;
    Y.pix0 = height - mb;  // SVG y runs downward
    Y.pix1 = mt;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
           "font-family=\"sans-serif\">"
        << xml_escape(title) << "</text>\n";

    // Axes box.
    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (width - ml - mr)
        << "\" height=\"" << (height - mt - mb)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

    // Ticks: 5 per axis (log axes tick at geometric steps).
    const int nticks = 5;
    for (int i = 0; i < nticks; ++i) {
        const double t = static_cast<double>(i) / (nticks - 1);
        const double xv = X.log ? X.lo * std::pow(X.hi / X.lo, t) : X.lo + t * (X.hi - X.lo);
        const double yv = Y.log ? Y.lo * std::pow(Y.hi / Y.lo, t) : Y.lo + t * (Y.hi - Y.lo);
        const double px = X.to_pix(xv);
        const double py = Y.to_pix(yv);
        svg << "<line x1=\"" << px << "\" y1=\"" << (height - mb) << "\" x2=\"" << px << "\" y2=\""
            << (height - mb + 6) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << px << "\" y=\"" << (height - mb + 20)
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
            << tick_label(xv) << "</text>\n";
        svg << "<line x1=\"" << (ml - 6) << "\" y1=\"" << py << "\" x2=\"" << ml << "\" y2=\"" << py
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << (ml - 10) << "\" y=\"" << (py + 4)
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
            << tick_label(yv) << "</text>\n";
    }
    svg << "<text x=\"" << (ml + (width - ml - mr) / 2) << "\" y=\"" << (height - 16)
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
        << xml_escape(xlabel) << "</text>\n";
    svg << "<text x=\"20\" y=\"" << (mt + (height - mt - mb) / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 20 "
        << (mt + (height - mt - mb) / 2) << ")\">" << xml_escape(ylabel) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % 6];
        std::ostringstream pts;
        bool any = false;
        for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
            if ((logx && s.xs[i] <= 0.0) || (logy && s.ys[i] <= 0.0)) continue;
            pts << X.to_pix(s.xs[i]) << ',' << Y.to_pix(s.ys[i]) << ' ';
            any = true;
        }
        if (!any) continue;
        svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
        for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
            if ((logx && s.xs[i] <= 0.0) || (logy && s.ys[i] <= 0.0)) continue;
            svg << "<circle cx=\"" << X.to_pix(s.xs[i]) << "\" cy=\"" << Y.to_pix(s.ys[i])
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
        svg << "<text x=\"" << (ml + 12) << "\" y=\"" << (mt + 18 + 16 * static_cast<double>(k))
            << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << color << "\">"
            << xml_escape(s.name) << "</text>\n";
    }
    svg << "</svg>\n";
    write_text_atomic(path, svg.str());
}

}  // namespace mfl

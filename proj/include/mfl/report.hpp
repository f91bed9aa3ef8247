#pragma once

// Deterministic experiment output: CSV tables with fixed formatting and
// minimal self-contained SVG line plots. All files are written atomically
// (temp file + rename) so interrupted runs never leave half-written artifacts.

#include <string>
#include <vector>

#include "mfl/common.hpp"

namespace mfl {

/// Formats a double as the canonical cell text used in every CSV ("%.12g").
std::string format_cell(double v);

/// Writes `content` to `path` atomically. Throws ConfigError on I/O failure.
void write_text_atomic(const std::string& path, const std::string& content);

/// Column-typed CSV table. Rows are kept in insertion order; serialization is
/// byte-deterministic for identical inputs.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);

    void add_row(const std::vector<double>& cells);
    void add_text_row(const std::vector<std::string>& cells);

    int rows() const { return static_cast<int>(rows_.size()); }
    const std::vector<std::string>& columns() const { return columns_; }

    std::string to_string() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

struct PlotSeries {
    std::string name;
    std::vector<double> xs;
    std::vector<double> ys;
};

/// Hand-rolled SVG line plot (fixed 720x480 canvas, axes, ticks, legend).
/// Log axes drop non-positive points from the drawing.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<PlotSeries>& series, bool logx, bool logy);

}  // namespace mfl

#include "mfl/fitting.hpp"

#include <cmath>

namespace mfl {

SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ConfigError("fit_line: size mismatch");
    const int n = static_cast<int>(x.size());
    if (n < 2)
        throw ConfigError("fit_line: need at least two samples");

    double sx = 0, sy = 0;
    for (int i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / n, my = sy / n;

    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw ConfigError("fit_line: degenerate abscissae");

    SlopeFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ConfigError("fit_slope: size mismatch");
    std::vector<double> lx, ly;
    lx.reserve(x.size());
    ly.reserve(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]) || y[i] == 0.0)
            throw NumericError("fit_slope: samples must be finite with positive x, nonzero y");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(std::abs(y[i])));
    }
    return fit_line(lx, ly);
}

}  // namespace mfl

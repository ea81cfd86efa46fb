#pragma once

// Small least-squares helpers for the scaling-law fits.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hw {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // rms of the fit residuals
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::runtime_error("fit needs >= 2 points");
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit out;
    const double den = n * sxx - sx * sx;
    out.slope = (n * sxy - sx * sy) / den;
    out.intercept = (sy - out.slope * sx) / n;
    double r2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = y[i] - out.slope * x[i] - out.intercept;
        r2 += r * r;
    }
    out.residual = std::sqrt(r2 / n);
    return out;
}

// slope of log(y) against log(x)
inline LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log(std::abs(x[i]));
        ly[i] = std::log(std::abs(y[i]));
    }
    return fit_line(lx, ly);
}

struct SpanStats {
    double min = 0.0, max = 0.0, mean = 0.0;
    double variation() const { return mean != 0.0 ? (max - min) / std::abs(mean) : 0.0; }
};

inline SpanStats span_stats(const std::vector<double>& v) {
    SpanStats s;
    if (v.empty()) return s;
    s.min = s.max = v[0];
    double acc = 0.0;
    for (double a : v) {
        s.min = std::min(s.min, a);
        s.max = std::max(s.max, a);
        acc += a;
    }
    s.mean = acc / v.size();
    return s;
}

} // namespace hw

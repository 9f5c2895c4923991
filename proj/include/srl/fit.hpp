#ifndef SRL_FIT_HPP
#define SRL_FIT_HPP

#include "srl/core.hpp"

#include <cmath>
#include <vector>

namespace srl::fit {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    long points = 0;
};

/// Ordinary least squares y = a + b x. R^2 is 1 for a constant y.
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidArgument("line fit needs at least two matching points");
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw InvalidArgument("line fit needs distinct abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        sse += e * e;
    }
    // relative to the spread of y so that an exact fit of near-constant data counts as exact
    f.r2 = syy <= 1e-28 * std::max(1.0, my * my) ? 1.0 : std::max(0.0, 1.0 - sse / syy);
    f.points = long(x.size());
    return f;
}

/// Slope of log(value) against log(hbar). Nonpositive values make the fit fail.
inline LineFit loglog(const std::vector<double>& hbar, const std::vector<double>& value)
{
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < hbar.size(); ++i) {
        if (!(hbar[i] > 0.0) || !(value[i] > 0.0))
            throw InvalidArgument("log-log fit needs positive values");
        lx.push_back(std::log(hbar[i]));
        ly.push_back(std::log(value[i]));
    }
    return least_squares(lx, ly);
}

} // namespace srl::fit

#endif // SRL_FIT_HPP

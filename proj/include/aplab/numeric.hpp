#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace aplab {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit linear_fit(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidArgument("linear_fit needs two or more paired samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0)
        throw InvalidArgument("linear_fit needs distinct abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - f.intercept - f.slope * x[i];
        sse += e * e;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return f;
}

/// Decay fit |y| ~ C x^{-tau}. `exact` marks data that vanish to the floor.
struct PowerFit {
    double C = 0.0;
    double tau = 0.0;
    double r2 = 0.0;
    bool exact = false;
    std::size_t points = 0;

    bool accepted(double min_r2 = 0.95) const { return exact || r2 >= min_r2; }
    bool decays(double min_tau = 0.0, double min_r2 = 0.95) const {
        return exact || (r2 >= min_r2 && tau > min_tau);
    }
};

inline PowerFit fit_power(const std::vector<double> &x, const std::vector<double> &y,
                          double floor = 1e-13) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidArgument("fit_power needs two or more paired samples");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = std::abs(y[i]);
        if (!(x[i] > 0.0))
            throw InvalidArgument("fit_power needs positive abscissae");
        if (a > floor) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(a));
        }
    }
    PowerFit pf;
    pf.points = lx.size();
    // Nothing resolvable, or a sequence that drops below the floor before three samples.
    if (lx.empty() || (lx.size() < 3 && std::abs(y.back()) <= floor)) {
        pf.exact = true;
        pf.tau = std::numeric_limits<double>::infinity();
        pf.r2 = 1.0;
        return pf;
    }
    if (lx.size() < 3)
        return pf;
    LinearFit lf = linear_fit(lx, ly);
    pf.tau = -lf.slope;
    pf.C = std::exp(lf.intercept);
    pf.r2 = lf.r2;
    return pf;
}

/// Geometric ladder from a to b (inclusive) with the given number of points per decade.
inline std::vector<double> geometric_ladder(double a, double b, double per_decade) {
    if (!(a > 0.0) || !(b > a) || !(per_decade > 0.0))
        throw InvalidArgument("geometric_ladder needs 0 < a < b and positive density");
    const double span = std::log10(b / a);
    const auto steps = static_cast<std::size_t>(std::ceil(span * per_decade - 1e-9));
    std::vector<double> out(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
        out[i] = a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(steps));
    out.back() = b;
    return out;
}

/// Ladder with fixed ratio q, starting at a, while <= b * (1 + 1e-12).
inline std::vector<double> ratio_ladder(double a, double b, double q) {
    if (!(a > 0.0) || !(b >= a) || !(q > 1.0))
        throw InvalidArgument("ratio_ladder needs 0 < a <= b and q > 1");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        double r = a * std::pow(q, i);
        if (r > b * (1.0 + 1e-12))
            break;
        out.push_back(r);
    }
    return out;
}

inline std::vector<double> dyadic_ladder(int lo, int hi) {
    std::vector<double> out;
    for (int i = lo; i <= hi; ++i)
        out.push_back(std::ldexp(1.0, i));
    return out;
}

/// Cubic Hermite interpolant on [x0, x1]; returns value and derivative at x.
inline std::pair<double, double> hermite(double x0, double x1, double y0, double y1, double d0,
                                         double d1, double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    const double g00 = 6 * t2 - 6 * t, g10 = 3 * t2 - 4 * t + 1;
    const double g01 = -6 * t2 + 6 * t, g11 = 3 * t2 - 2 * t;
    const double d = (g00 * y0 + g01 * y1) / h + g10 * d0 + g11 * d1;
    return {v, d};
}

/// Index i with grid[i] <= x <= grid[i+1], or throws if x is outside the grid.
inline std::size_t bracket(const std::vector<double> &grid, double x) {
    if (grid.size() < 2)
        throw InvalidArgument("grid needs two or more nodes");
    const double tol = 1e-12 * std::max(1.0, std::abs(grid.back()));
    if (x < grid.front() - tol || x > grid.back() + tol)
        throw OutOfRange("radius outside grid range");
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    return std::min(i, grid.size() - 2);
}

inline double trapezoid(const std::vector<double> &x, const std::vector<double> &y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

/// Per-trial generator; independent of worker scheduling.
inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

inline std::vector<double> gaussian_vector(std::mt19937_64 &rng, std::size_t n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> v(n);
    for (auto &x : v)
        x = nd(rng);
    return v;
}

} // namespace aplab

#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "errors.hpp"
#include "geometry.hpp"
#include "numeric.hpp"

namespace aplab {

/// Nonnegative root of alpha(alpha + n - 2) = lambda (reference-metric eigenvalue).
inline double indicial_root(int n, double lambda_ref) {
    if (n < 3)
        throw InvalidArgument("indicial_root needs n >= 3");
    if (lambda_ref < 0.0)
        throw InvalidArgument("indicial_root needs lambda >= 0");
    const double b = n - 2.0;
    if (lambda_ref == 0.0)
        return 0.0;
    // Rationalized form avoids cancellation for small lambda.
    return 2.0 * lambda_ref / (b + std::sqrt(b * b + 4.0 * lambda_ref));
}

/// Samples of R and R' for one g_X eigenvalue. Stored values are mantissas; the true
/// value at node j is R[j] * 2^exponent[j].
struct RadialSolution {
    double lambda = 0.0;
    double lambda_ref = 0.0;
    int n = 3;
    std::vector<double> grid;
    std::vector<double> R;
    std::vector<double> Rprime;
    std::vector<int> exponent;
    double alpha = 0.0;
    double growth_exponent = 0.0;
    double growth_r2 = 1.0;
    double normalization = 1.0;
    double U_end = 0.0;
    bool flagged = false;

    std::size_t size() const { return grid.size(); }
    double value(std::size_t j) const { return std::ldexp(R[j], exponent[j]); }
    double derivative(std::size_t j) const { return std::ldexp(Rprime[j], exponent[j]); }
    double log_value(std::size_t j) const { return std::log(R[j]) + exponent[j] * std::log(2.0); }
    double U(std::size_t j) const { return R[j] == 0.0 ? 0.0 : grid[j] * Rprime[j] / R[j]; }

    /// (R, R') at an arbitrary radius by cubic Hermite interpolation (exact at nodes).
    std::pair<double, double> at(double r) const {
        std::size_t i = bracket(grid, r);
        const int e = exponent[i];
        const double s = std::ldexp(1.0, exponent[i + 1] - e);
        if (std::abs(r - grid[i]) <= 1e-13 * grid[i])
            return {value(i), derivative(i)};
        if (std::abs(r - grid[i + 1]) <= 1e-13 * grid[i + 1])
            return {value(i + 1), derivative(i + 1)};
        auto [v, d] = hermite(grid[i], grid[i + 1], R[i], R[i + 1] * s, Rprime[i], Rprime[i + 1] * s, r);
        return {std::ldexp(v, e), std::ldexp(d, e)};
    }

    std::string csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "# lambda=" << lambda << " n=" << n << " alpha=" << alpha << " growth_exponent=" << growth_exponent
           << '\n';
        os << "r,R,Rprime,U\n";
        for (std::size_t j = 0; j < size(); ++j)
            os << grid[j] << ',' << value(j) << ',' << derivative(j) << ',' << U(j) << '\n';
        return os.str();
    }
};

struct RadialOptions {
    double points_per_decade = 64.0;
    double rtol = 1e-10;
    // Multipliers on the vertex data, for perturbation studies.
    double vertex_scale_R = 1.0;
    double vertex_scale_Rp = 1.0;
};

/// Outward shooting from the cone with exact Euler data; lambda is a g_X eigenvalue.
inline RadialSolution solve_radial(const APProfile &p, double lambda, double r_max, const RadialOptions &opt = {}) {
    namespace ode = boost::numeric::odeint;
    if (lambda < 0.0)
        throw InvalidArgument("solve_radial needs lambda >= 0");
    if (r_max < 100.0 * p.r_asym * (1 - 1e-12))
        throw InvalidArgument("solve_radial needs r_max >= 100 r_asym");
    RadialSolution sol;
    sol.lambda = lambda;
    sol.lambda_ref = p.scale * lambda;
    sol.n = p.n;
    sol.grid = geometric_ladder(p.r_cone, r_max, opt.points_per_decade);
    const std::size_t N = sol.grid.size();
    sol.R.assign(N, 1.0);
    sol.Rprime.assign(N, 0.0);
    sol.exponent.assign(N, 0);
    if (lambda == 0.0)
        return sol;

    const double lam = sol.lambda_ref;
    const double a = indicial_root(p.n, lam);
    sol.alpha = a;
    using State = std::array<double, 2>;
    State x{std::pow(p.r_cone, a) * opt.vertex_scale_R, a * std::pow(p.r_cone, a - 1) * opt.vertex_scale_Rp};
    auto rhs = [&p, lam](const State &s, State &ds, double r) {
        Jet ph = p.phi(r);
        double A1 = (p.n - 1) * ph.d1 / ph.v - p.fprime(r).v;
        double A0 = -lam / (ph.v * ph.v);
        ds[0] = s[1];
        ds[1] = -A1 * s[1] - A0 * s[0];
    };
    auto stepper = ode::make_controlled(1e-30, opt.rtol, ode::runge_kutta_dopri5<State>());
    double r = p.r_cone;
    double dt = 1e-3 * p.r_cone;
    int e = 0;
    sol.R[0] = x[0];
    sol.Rprime[0] = x[1];
    const double big = std::ldexp(1.0, 512);
    for (std::size_t j = 1; j < N; ++j) {
        const double target = sol.grid[j];
        int fails = 0;
        while (r < target) {
            double step = std::min(dt, target - r);
            const bool clipped = step < dt;
            double trial = step;
            if (stepper.try_step(rhs, x, r, trial) == ode::success) {
                if (!clipped)
                    dt = trial;
                fails = 0;
            } else {
                dt = trial;
                if (++fails > 500)
                    throw SolverFailure("radial integration step size collapsed");
            }
        }
        r = target;
        if (std::abs(x[0]) > big) {
            x[0] = std::ldexp(x[0], -512);
            x[1] = std::ldexp(x[1], -512);
            e += 512;
        }
        sol.R[j] = x[0];
        sol.Rprime[j] = x[1];
        sol.exponent[j] = e;
    }

    std::vector<double> lx, ly;
    for (std::size_t j = 0; j < N; ++j)
        if (sol.grid[j] >= r_max / 10.0 * (1 - 1e-12)) {
            lx.push_back(std::log(sol.grid[j]));
            ly.push_back(sol.log_value(j));
        }
    LinearFit lf = linear_fit(lx, ly);
    sol.growth_exponent = lf.slope;
    sol.growth_r2 = lf.r2;
    sol.normalization = std::exp(sol.log_value(N - 1) - lf.slope * std::log(r_max));
    sol.U_end = sol.U(N - 1);
    sol.flagged = std::abs(sol.growth_exponent - sol.U_end) > 5e-3;
    return sol;
}

/// Residuals of the Liouville-Green exponents against lambda/r and the decaying branch.
inline std::pair<double, double> lg_exponent_check(const APProfile &p, double lambda, double r) {
    if (lambda < 0.0)
        throw InvalidArgument("lg_exponent_check needs lambda >= 0");
    if (r < p.r_asym * (1 - 1e-12))
        throw InvalidArgument("lg_exponent_check needs r >= r_asym");
    auto c = drift_coefficients(p, p.scale * lambda);
    const double q = c.q(r);
    if (q < 0.0)
        throw DomainError("Liouville-Green potential is negative");
    const double sq = std::sqrt(q);
    const double A1 = c.a1(r);
    const double first = sq - 0.5 * A1 - lambda / r;
    const double second = -sq - 0.5 * A1 + 1.0 + (p.n - 1 + 2 * lambda) / (2 * r);
    return {first, second};
}

inline bool monotonicity_check(const RadialSolution &sol) {
    if (!(sol.lambda > 0.0))
        throw InvalidArgument("monotonicity_check needs lambda > 0");
    for (std::size_t j = 0; j < sol.size(); ++j)
        if (!(sol.R[j] > 0.0) || !(sol.Rprime[j] > 0.0))
            return false;
    return true;
}

} // namespace aplab

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cross_section.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "mode_field.hpp"
#include "numeric.hpp"

namespace aplab {

namespace detail {

/// rho^{(1-n)/2} phi^{n-1}: the Parseval weight of a level set.
inline double level_weight(const APProfile &p, double rho) {
    return std::pow(p.phi(rho).v / std::sqrt(rho), p.n - 1);
}

inline std::string radius_str(double r) {
    std::ostringstream os;
    os.precision(10);
    os << r;
    return os.str();
}

} // namespace detail

struct FrequencyTrace {
    APProfile profile;
    int n = 3;
    std::vector<double> rho, D, I, U, G, Q;

    std::size_t size() const { return rho.size(); }
    double cs_gap(std::size_t i) const { return G[i] - U[i] * U[i] / rho[i]; }
};

inline FrequencyTrace trace(const ModeField &u, const APProfile &p, const std::vector<double> &ladder) {
    FrequencyTrace t;
    t.profile = p;
    t.n = p.n;
    std::vector<double> lam(static_cast<std::size_t>(u.modes()));
    for (int k = 0; k < u.modes(); ++k)
        lam[static_cast<std::size_t>(k)] = u.spectrum->reference_eigenvalue(k);
    for (double rho : ladder) {
        auto [a, b] = u.sample(rho);
        const double S = a.squaredNorm();
        if (!(S > 0.0))
            throw DegenerateLevel("vanishing I at radius " + detail::radius_str(rho));
        const double P = a.dot(b), T = b.squaredNorm();
        double L = 0.0;
        for (int k = 0; k < u.modes(); ++k)
            L += lam[static_cast<std::size_t>(k)] * a[k] * a[k];
        const double ph = p.phi(rho).v;
        const double w = detail::level_weight(p, rho);
        t.rho.push_back(rho);
        t.I.push_back(w * S);
        t.D.push_back(rho * w * P);
        t.U.push_back(rho * P / S);
        t.G.push_back(rho * T / S);
        t.Q.push_back(rho * L / (ph * ph * S));
    }
    return t;
}

struct ResidualSeries {
    std::vector<double> rho;
    std::vector<double> value;

    double max_abs() const {
        double m = 0.0;
        for (double v : value)
            m = std::max(m, std::abs(v));
        return m;
    }
};

namespace detail {

inline void check_spacing(const std::vector<double> &rho) {
    if (rho.size() < 3)
        throw InvalidArgument("ladder needs at least three radii for centered differences");
    for (std::size_t i = 1; i < rho.size(); ++i)
        if (!(rho[i] > rho[i - 1]) || rho[i] / rho[i - 1] > 1.05 * (1 + 1e-9))
            throw InvalidArgument("ladder spacing exceeds 5% relative");
}

} // namespace detail

/// U' minus the frequency ODE right side. The geometric coefficient is the exact warped
/// one, 1/rho - H + f', which equals (3-n)/(2 rho) + f' on the paraboloid plateau.
inline ResidualSeries frequency_ode_residual(const FrequencyTrace &t) {
    detail::check_spacing(t.rho);
    ResidualSeries out;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        const double r = t.rho[i];
        const double dU = (t.U[i + 1] - t.U[i - 1]) / (t.rho[i + 1] - t.rho[i - 1]);
        const double coef = 1.0 / r - mean_curvature(t.profile, r) + t.profile.fprime(r).v;
        const double rhs = coef * t.U[i] - 2.0 * t.U[i] * t.U[i] / r + t.G[i] + t.Q[i];
        out.rho.push_back(r);
        out.value.push_back(dU - rhs);
    }
    return out;
}

/// I'/I - 2U/rho minus the closed-form level-weight term (zero on the plateau).
inline ResidualSeries i_log_derivative_check(const FrequencyTrace &t) {
    detail::check_spacing(t.rho);
    ResidualSeries out;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        const double r = t.rho[i];
        const double dI = (t.I[i + 1] - t.I[i - 1]) / (t.rho[i + 1] - t.rho[i - 1]);
        const double geo = mean_curvature(t.profile, r) - (t.n - 1) / (2.0 * r);
        out.rho.push_back(r);
        out.value.push_back(dI / t.I[i] - 2.0 * t.U[i] / r - geo);
    }
    return out;
}

inline double level_inner(const ModeField &u, const ModeField &v, const APProfile &p, double rho) {
    if (u.modes() != v.modes())
        throw InvalidArgument("level_inner needs fields with the same modes");
    auto a = u.sample(rho).first;
    auto b = v.sample(rho).first;
    return detail::level_weight(p, rho) * a.dot(b);
}

inline double orthogonality_angle(const ModeField &u, const ModeField &v, const APProfile &p, double rho) {
    const double uv = level_inner(u, v, p, rho);
    const double uu = level_inner(u, u, p, rho), vv = level_inner(v, v, p, rho);
    if (!(uu > 0.0) || !(vv > 0.0))
        throw DegenerateLevel("zero norm at radius " + detail::radius_str(rho));
    return std::min(1.0, std::abs(uv) / std::sqrt(uu * vv));
}

namespace detail {
/// Lagrange form of T S - P^2; I (G - U^2/rho) = weight * rho * this / S without cancellation.
inline double cs_numerator(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = i + 1; j < a.size(); ++j) {
            double w = a[i] * b[j] - a[j] * b[i];
            s += w * w;
        }
    return s;
}
} // namespace detail

/// delta^2 on [rho1, rho2]: integral of (G/U - U/rho) D over the window, divided by I(rho2).
inline double separation_defect(const ModeField &u, const APProfile &p, double rho1, double rho2) {
    if (!(rho1 > 0.0) || !(rho2 > rho1))
        throw InvalidArgument("separation_defect needs 0 < rho1 < rho2");
    std::vector<double> xs{rho1};
    for (double r : u.grid)
        if (r > rho1 * (1 + 1e-12) && r < rho2 * (1 - 1e-12))
            xs.push_back(r);
    xs.push_back(rho2);
    std::vector<double> ys;
    double I2 = 0.0;
    for (double r : xs) {
        auto [a, b] = u.sample(r);
        const double S = a.squaredNorm();
        if (!(S > 0.0) || !(a.dot(b) > 0.0))
            throw DomainError("separation defect undefined: U <= 0 at radius " + detail::radius_str(r));
        const double w = detail::level_weight(p, r);
        ys.push_back(w * r * detail::cs_numerator(a, b) / S);
        if (r == rho2)
            I2 = w * S;
    }
    return trapezoid(xs, ys) / I2;
}

struct PinchRow {
    std::string quantity;
    PowerFit fit;
    double required_rate = 0.0;
    bool pass = false;
};

struct PinchReport {
    double lambda = 0.0;
    std::vector<double> rho;
    std::vector<double> U, Q, projection_ratio, defect;
    std::vector<PinchRow> rows;

    bool passed() const {
        for (const auto &r : rows)
            if (!r.pass)
                return false;
        return true;
    }
    std::string csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "quantity,C,tau,r2,exact,required_rate,pass\n";
        for (const auto &r : rows)
            os << r.quantity << ',' << r.fit.C << ',' << r.fit.tau << ',' << r.fit.r2 << ','
               << (r.fit.exact ? 1 : 0) << ',' << r.required_rate << ',' << (r.pass ? "pass" : "fail") << '\n';
        return os.str();
    }
};

/// Fits of the four pinching conditions along the ladder (defect windows are [rho, 2 rho]).
inline PinchReport pinching_report(const ModeField &u, const APProfile &p, double lambda_target,
                                   const std::vector<double> &ladder, double min_r2 = 0.95) {
    const int level = u.spectrum->level_of(lambda_target);
    if (level < 0)
        throw InvalidArgument("target eigenvalue is not in the spectrum");
    PinchReport rep;
    rep.lambda = lambda_target;
    FrequencyTrace t = trace(u, p, ladder);
    const int lo = u.spectrum->level_offset(level);
    const int hi = lo + u.spectrum->multiplicities[static_cast<std::size_t>(level)];
    std::vector<double> dU, dQ, dUQ, dP;
    bool all_constant = true;
    for (std::size_t i = 0; i < t.size(); ++i) {
        auto a = u.sample(t.rho[i]).first;
        double in = 0.0;
        for (int k = lo; k < std::min(hi, u.modes()); ++k)
            in += a[k] * a[k];
        const double ratio = std::sqrt(in / a.squaredNorm());
        rep.rho.push_back(t.rho[i]);
        rep.U.push_back(t.U[i]);
        rep.Q.push_back(t.Q[i]);
        rep.projection_ratio.push_back(ratio);
        dU.push_back(t.U[i] - lambda_target);
        dQ.push_back(t.Q[i] - lambda_target);
        dUQ.push_back(t.U[i] - t.Q[i]);
        dP.push_back(1.0 - ratio);
        if (std::abs(t.U[i]) > 1e-14)
            all_constant = false;
    }
    auto row = [&](const std::string &name, const std::vector<double> &x, const std::vector<double> &y,
                   double rate) {
        PinchRow r;
        r.quantity = name;
        r.fit = fit_power(x, y);
        r.required_rate = rate;
        r.pass = r.fit.exact || (r.fit.r2 >= min_r2 && (rate > 0.0 ? r.fit.tau >= rate : r.fit.tau > 0.0));
        rep.rows.push_back(r);
    };
    row("|U-lambda|", rep.rho, dU, 0.0);
    row("|Q-lambda|", rep.rho, dQ, 0.0);
    row("|U-Q|", rep.rho, dUQ, 1.0 / 3.0);
    row("1-projection_ratio", rep.rho, dP, 0.0);
    std::vector<double> xs;
    for (double r : rep.rho)
        if (2 * r <= u.r_max() * (1 + 1e-12)) {
            xs.push_back(r);
            rep.defect.push_back(all_constant ? 0.0 : separation_defect(u, p, r, 2 * r));
        }
    if (xs.size() >= 2)
        row("separation_defect", xs, rep.defect, 0.0);
    return rep;
}

/// sup_{r <= (1-tau) rho} u^2 over the pointwise sample set, divided by
/// rho^{-(n+1)/2} int_{rho/32}^{rho} s^{(n-1)/2} I(s) ds.
inline double mean_value_ratio(const ModeField &u, const APProfile &p, double rho, double tau,
                               int samples_per_dim = 12, std::size_t max_nodes = 600) {
    if (!(tau > 0.0) || !(tau < 0.5))
        throw InvalidArgument("mean_value_ratio needs tau in (0, 1/2)");
    if (rho > u.r_max() * (1 + 1e-12))
        throw OutOfRange("mean_value_ratio radius beyond the field");
    if (rho / 32 < u.r_min() * (1 - 1e-12))
        throw InvalidArgument("mean_value_ratio needs rho/32 >= r_cone");
    const Spectrum &s = *u.spectrum;
    auto pts = cross_samples(s, samples_per_dim);
    Eigen::MatrixXd E(static_cast<Eigen::Index>(pts.size()), u.modes());
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int k = 0; k < u.modes(); ++k)
            E(static_cast<Eigen::Index>(i), k) = eigenfunction(s, k, pts[i]);
    std::vector<std::size_t> nodes;
    for (std::size_t j = 0; j < u.size(); ++j)
        if (u.grid[j] <= (1 - tau) * rho * (1 + 1e-12))
            nodes.push_back(j);
    if (nodes.empty())
        throw InvalidArgument("no grid nodes inside (1 - tau) rho");
    const std::size_t stride = std::max<std::size_t>(1, nodes.size() / max_nodes);
    double sup = 0.0;
    for (std::size_t q = 0; q < nodes.size(); q += stride) {
        Eigen::VectorXd vals = E * u.u.col(static_cast<Eigen::Index>(nodes[q]));
        sup = std::max(sup, vals.cwiseAbs().maxCoeff());
    }
    {
        Eigen::VectorXd vals = E * u.u.col(static_cast<Eigen::Index>(nodes.back()));
        sup = std::max(sup, vals.cwiseAbs().maxCoeff());
    }
    std::vector<double> xs{rho / 32};
    for (double r : u.grid)
        if (r > rho / 32 * (1 + 1e-12) && r < rho * (1 - 1e-12))
            xs.push_back(r);
    xs.push_back(rho);
    std::vector<double> ys;
    for (double r : xs) {
        auto a = u.sample(r).first;
        ys.push_back(std::pow(r, 0.5 * (p.n - 1)) * detail::level_weight(p, r) * a.squaredNorm());
    }
    const double denom = std::pow(rho, -0.5 * (p.n + 1)) * trapezoid(xs, ys);
    if (!(denom > 0.0))
        throw DegenerateLevel("mean value denominator vanishes at radius " + detail::radius_str(rho));
    return sup * sup / denom;
}

/// rho^{(1-n)/2} phi^{n-1} sum_k (u_k v_k' - v_k u_k').
inline double wronskian_flux(const ModeField &u, const ModeField &v, const APProfile &p, double rho) {
    auto [a, da] = u.sample(rho);
    auto [b, db] = v.sample(rho);
    return detail::level_weight(p, rho) * (a.dot(db) - b.dot(da));
}

/// Lower bound for I(rho2)/I(rho1) given U >= d - K rho^{-gamma} on the window (plateau form).
inline double i_ratio_lower_bound(double K, double gamma, double d, double rho1, double rho2) {
    if (!(gamma > 0.0) || !(rho2 > rho1) || !(rho1 > 0.0))
        throw InvalidArgument("i_ratio_lower_bound needs gamma > 0 and 0 < rho1 < rho2");
    const double eps_log = 2.0 * K / gamma * (std::pow(rho1, -gamma) - std::pow(rho2, -gamma));
    return std::exp(-std::max(0.0, eps_log)) * std::pow(rho2 / rho1, 2 * d);
}

/// Total decrease of log U along the trace: integral of min((log U)', 0).
inline double monotonicity_deficit(const FrequencyTrace &t, double rho0 = 0.0) {
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t.rho[i - 1] < rho0)
            continue;
        if (!(t.U[i] > 0.0) || !(t.U[i - 1] > 0.0))
            throw DomainError("monotonicity_deficit needs U > 0");
        s += std::min(0.0, std::log(t.U[i]) - std::log(t.U[i - 1]));
    }
    return s;
}

inline std::string trace_csv(const FrequencyTrace &t) {
    std::vector<double> ode(t.size(), std::nan("")), ilog(t.size(), std::nan(""));
    bool fine = true;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t.rho[i] / t.rho[i - 1] > 1.05 * (1 + 1e-9))
            fine = false;
    if (fine && t.size() >= 3) {
        auto a = frequency_ode_residual(t);
        auto b = i_log_derivative_check(t);
        for (std::size_t i = 0; i < a.value.size(); ++i) {
            ode[i + 1] = a.value[i];
            ilog[i + 1] = b.value[i];
        }
    }
    std::ostringstream os;
    os.precision(17);
    os << "rho,D,I,U,G,Q,cs_gap,ode_residual,ilog_residual\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        os << t.rho[i] << ',' << t.D[i] << ',' << t.I[i] << ',' << t.U[i] << ',' << t.G[i] << ',' << t.Q[i] << ','
           << t.cs_gap(i) << ',' << ode[i] << ',' << ilog[i] << '\n';
    return os.str();
}

} // namespace aplab

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "errors.hpp"
#include "numeric.hpp"

namespace aplab {

/// Value with first and second derivative.
struct Jet {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Warped profile dr^2 + phi(r)^2 g_ref with radial potential f.
class APProfile {
  public:
    using JetFn = std::function<Jet(double)>;

    int n = 3;
    double scale = 2.0;
    double mu = 0.5;
    double r_cone = 0.5;
    double r_asym = 2.0;
    std::string name = "model";

    APProfile() = default;
    APProfile(int n_, double scale_, double mu_, double r_cone_, double r_asym_, JetFn phi, JetFn fprime)
        : n(n_), scale(scale_), mu(mu_), r_cone(r_cone_), r_asym(r_asym_), phi_(std::move(phi)),
          fprime_(std::move(fprime)) {}

    /// phi, phi', phi''.
    Jet phi(double r) const {
        check(r);
        return phi_(r);
    }
    /// f', f'', f'''.
    Jet fprime(double r) const {
        check(r);
        return fprime_(r);
    }
    /// f normalized to 0 on the cone.
    double f(double r) const {
        check(r);
        if (r <= r_cone)
            return 0.0;
        auto g = [this](double s) { return fprime_(s).v; };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, r_cone, r, 12, 1e-13);
    }

  private:
    static void check(double r) {
        if (!(r > 0.0))
            throw DomainError("profile evaluated at r <= 0");
    }
    JetFn phi_;
    JetFn fprime_;
};

namespace detail {

/// Quintic in t with coefficients c[0..5]; returns value and first two t-derivatives.
inline Jet quintic(const std::array<double, 6> &c, double t) {
    Jet j;
    j.v = ((((c[5] * t + c[4]) * t + c[3]) * t + c[2]) * t + c[1]) * t + c[0];
    j.d1 = (((5 * c[5] * t + 4 * c[4]) * t + 3 * c[3]) * t + 2 * c[2]) * t + c[1];
    j.d2 = ((20 * c[5] * t + 12 * c[4]) * t + 6 * c[3]) * t + 2 * c[2];
    return j;
}

/// Quintic Hermite interpolant on [0,1] from value/slope/curvature at both ends.
inline std::array<double, 6> quintic_hermite(double p0, double d0, double s0, double p1, double d1,
                                             double s1) {
    const std::array<double, 6> h0{1, 0, 0, -10, 15, -6}, h1{0, 1, 0, -6, 8, -3},
        h2{0, 0, 0.5, -1.5, 1.5, -0.5}, h3{0, 0, 0, 10, -15, 6}, h4{0, 0, 0, -4, 7, -3},
        h5{0, 0, 0, 0.5, -1, 0.5};
    std::array<double, 6> c{};
    for (int i = 0; i < 6; ++i)
        c[i] = p0 * h0[i] + d0 * h1[i] + s0 * h2[i] + p1 * h3[i] + d1 * h4[i] + s1 * h5[i];
    return c;
}

/// C2 step from 0 on (0, a] to 1 on [b, inf), in r, with r-derivatives.
inline Jet blend_step(double r, double a, double b) {
    if (r <= a)
        return {0.0, 0.0, 0.0};
    if (r >= b)
        return {1.0, 0.0, 0.0};
    const double D = b - a;
    Jet s = quintic({0, 0, 0, 10, -15, 6}, (r - a) / D);
    return {s.v, s.d1 / D, s.d2 / (D * D)};
}

} // namespace detail

inline APProfile model_profile(int n, double scale, double r_cone, double r_asym, double mu = 0.5) {
    if (n < 3)
        throw InvalidArgument("profile dimension n must be >= 3");
    if (!(scale > 0.0))
        throw InvalidArgument("profile scale must be positive");
    if (!(r_cone > 0.0) || !(r_asym > r_cone))
        throw InvalidArgument("profile needs 0 < r_cone < r_asym");
    if (!(mu > 0.0))
        throw InvalidArgument("decay rate mu must be positive");
    const double a = r_cone, b = r_asym, D = b - a;
    const double sb = std::sqrt(scale * b);
    const auto c = detail::quintic_hermite(a, D, 0.0, sb, D * sb / (2 * b), -D * D * sb / (4 * b * b));
    auto phi = [a, b, D, c, scale](double r) -> Jet {
        if (r <= a)
            return {r, 1.0, 0.0};
        if (r >= b) {
            double p = std::sqrt(scale * r);
            return {p, p / (2 * r), -p / (4 * r * r)};
        }
        Jet q = detail::quintic(c, (r - a) / D);
        return {q.v, q.d1 / D, q.d2 / (D * D)};
    };
    for (int i = 0; i <= 4000; ++i) {
        double r = a + D * i / 4000.0;
        if (!(phi(r).v > 0.0)) {
            std::ostringstream os;
            os << "blend produces nonpositive phi at r = " << r << " (scale " << scale << ")";
            throw ConstructionFailure(os.str());
        }
    }
    auto fp = [a, D, b](double r) -> Jet {
        if (r <= a)
            return {0.0, 0.0, 0.0};
        if (r >= b)
            return {-1.0, 0.0, 0.0};
        Jet s = detail::quintic({0, 0, 0, 10, -15, 6}, (r - a) / D);
        return {-s.v, -s.d1 / D, -s.d2 / (D * D)};
    };
    APProfile p(n, scale, mu, r_cone, r_asym, phi, fp);
    p.name = "model";
    return p;
}

/// Adds tail(r) * step(r) to f', where step switches on across the blend region.
/// The tail jet must supply h, h', h''.
inline APProfile with_fprime_tail(const APProfile &base, std::function<Jet(double)> tail, std::string name) {
    const double a = base.r_cone, b = base.r_asym;
    auto fp = [base, tail, a, b](double r) -> Jet {
        Jet f = base.fprime(r);
        if (r <= a)
            return f;
        Jet s = detail::blend_step(r, a, b);
        Jet h = tail(r);
        f.v += s.v * h.v;
        f.d1 += s.d1 * h.v + s.v * h.d1;
        f.d2 += s.d2 * h.v + 2 * s.d1 * h.d1 + s.v * h.d2;
        return f;
    };
    auto phi = [base](double r) { return base.phi(r); };
    APProfile p(base.n, base.scale, base.mu, base.r_cone, base.r_asym, phi, fp);
    p.name = std::move(name);
    return p;
}

/// Adds offset * step(r) to phi (an O(1) correction to sqrt(scale r)).
inline APProfile with_phi_offset(const APProfile &base, double offset) {
    const double a = base.r_cone, b = base.r_asym;
    auto phi = [base, offset, a, b](double r) -> Jet {
        Jet p = base.phi(r);
        Jet s = detail::blend_step(r, a, b);
        return {p.v + offset * s.v, p.d1 + offset * s.d1, p.d2 + offset * s.d2};
    };
    auto fp = [base](double r) { return base.fprime(r); };
    APProfile p(base.n, base.scale, base.mu, base.r_cone, base.r_asym, phi, fp);
    p.name = base.name;
    return p;
}

/// Bryant-like asymptotics: phi = sqrt(2(n-2) r) + offset, f' = -1 - c/r.
inline APProfile bryant_like_profile(int n, double c, double offset, double r_cone = 0.5, double r_asym = 2.0) {
    APProfile base = model_profile(n, 2.0 * (n - 2), r_cone, r_asym, 0.5);
    auto tail = [c](double r) -> Jet { return {-c / r, c / (r * r), -2 * c / (r * r * r)}; };
    APProfile p = with_fprime_tail(base, tail, "bryant-like");
    return with_phi_offset(p, offset);
}

/// f' = -1 + eps sin(r^{3/4})/r: |f'+1| still decays like 1/r but f'' only like r^{-5/4}.
inline APProfile chirp_tail_profile(const APProfile &base, double eps) {
    auto tail = [eps](double r) -> Jet {
        const double x = std::pow(r, 0.75), xp = 0.75 * x / r, xpp = -0.25 * xp / r;
        const double sn = std::sin(x), cs = std::cos(x);
        const double g = sn / r;
        const double gp = cs * xp / r - sn / (r * r);
        const double gpp = (-sn * xp * xp + cs * xpp) / r - 2.0 * cs * xp / (r * r) + 2.0 * sn / (r * r * r);
        return {eps * g, eps * gp, eps * gpp};
    };
    return with_fprime_tail(base, tail, "chirp-tail");
}

/// f' = -1 + eps sin(r)/r: |f'+1| decays like 1/r and so do f'' and f'''.
inline APProfile sine_tail_profile(const APProfile &base, double eps) {
    auto tail = [eps](double r) -> Jet {
        const double sn = std::sin(r), cs = std::cos(r);
        const double r2 = r * r, r3 = r2 * r;
        return {eps * sn / r, eps * (cs / r - sn / r2), eps * (-sn / r - 2.0 * cs / r2 + 2.0 * sn / r3)};
    };
    return with_fprime_tail(base, tail, "sine-tail");
}

/// Coefficients of R'' + A1 R' + A0 R = 0 for one reference-metric eigenvalue.
class RadialODECoefficients {
  public:
    RadialODECoefficients(APProfile p, double lambda_ref) : p_(std::move(p)), lambda_(lambda_ref) {}

    double lambda() const { return lambda_; }
    const APProfile &profile() const { return p_; }

    double a1(double r) const {
        Jet ph = p_.phi(r);
        return (p_.n - 1) * ph.d1 / ph.v - p_.fprime(r).v;
    }
    double a1_prime(double r) const {
        Jet ph = p_.phi(r);
        double g = ph.d1 / ph.v;
        return (p_.n - 1) * (ph.d2 / ph.v - g * g) - p_.fprime(r).d1;
    }
    double a0(double r) const {
        double ph = p_.phi(r).v;
        return -lambda_ / (ph * ph);
    }
    double q(double r) const {
        double A1 = a1(r);
        return 0.25 * A1 * A1 + 0.5 * a1_prime(r) - a0(r);
    }

  private:
    APProfile p_;
    double lambda_;
};

inline RadialODECoefficients drift_coefficients(const APProfile &p, double lambda_ref) {
    if (lambda_ref < 0.0)
        throw InvalidArgument("eigenvalue must be nonnegative");
    return RadialODECoefficients(p, lambda_ref);
}

inline double mean_curvature(const APProfile &p, double rho) {
    Jet ph = p.phi(rho);
    return (p.n - 1) * ph.d1 / ph.v;
}

inline double eta_coefficient(const APProfile &p, double r) {
    Jet ph = p.phi(r);
    return 2.0 * r * ph.d1 / ph.v - 1.0;
}

struct CertificateLine {
    std::string tag;
    std::string quantity;
    double fitted = 0.0;
    double required = 0.0;
    double r2 = 0.0;
    bool exact = false;
    bool pass = false;
};

struct CertificateReport {
    std::string profile;
    std::vector<CertificateLine> lines;

    bool passed() const {
        for (const auto &l : lines)
            if (!l.pass)
                return false;
        return true;
    }
    const CertificateLine *first_failure() const {
        for (const auto &l : lines)
            if (!l.pass)
                return &l;
        return nullptr;
    }
    std::string csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "tag,quantity,fitted_exponent,required_exponent,r2,pass\n";
        for (const auto &l : lines) {
            os << l.tag << ',' << l.quantity << ',';
            if (l.exact)
                os << "exact";
            else
                os << l.fitted;
            os << ',' << l.required << ',' << l.r2 << ',' << (l.pass ? "pass" : "fail") << '\n';
        }
        return os.str();
    }
    std::string text() const {
        std::ostringstream os;
        os.precision(6);
        os << "certificate for profile '" << profile << "'\n";
        for (const auto &l : lines) {
            os << "  [" << (l.pass ? "pass" : "FAIL") << "] " << l.tag << ": " << l.quantity << " exponent ";
            if (l.exact)
                os << "exact";
            else
                os << l.fitted;
            os << " (required >= " << l.required << ")\n";
        }
        return os.str();
    }
};

/// Decay exponents fitted over the top decade of the ladder, with slack 0.05.
inline CertificateReport ap_certificate(const APProfile &p, const std::vector<double> &ladder,
                                        double slack = 0.05, double dense_per_decade = 20000) {
    std::vector<double> top;
    const double rmax = ladder.empty() ? 0.0 : ladder.back();
    for (double r : ladder)
        if (r >= rmax / 10.0 * (1 - 1e-12))
            top.push_back(r);
    if (top.size() < 4)
        throw InvalidArgument("certificate ladder has fewer than 4 points in its top decade");
    struct Spec {
        std::string tag, quantity;
        double required;
        std::function<double(double)> fn;
    };
    const std::vector<Spec> specs = {
        {"ap-eta", "|2r phi'/phi - 1|", p.mu, [&](double r) { return eta_coefficient(p, r); }},
        {"ap-cross-section", "|phi^2/(scale r) - 1|", p.mu,
         [&](double r) {
             double ph = p.phi(r).v;
             return ph * ph / (p.scale * r) - 1.0;
         }},
        {"potential line 1", "|f'+1|", 1.0, [&](double r) { return p.fprime(r).v + 1.0; }},
        {"potential line 2", "|f''|", 1.5, [&](double r) { return p.fprime(r).d1; }},
        {"potential line 3", "|f'''|", 1.5, [&](double r) { return p.fprime(r).d2; }},
    };
    CertificateReport rep;
    rep.profile = p.name;
    // Each sample is the sup over [r, 2r] on a dense subgrid, so oscillating tails are bounded, not sampled.
    const std::vector<double> dense = geometric_ladder(top.front(), 2.0 * rmax, dense_per_decade);
    for (const auto &s : specs) {
        std::vector<double> q(dense.size()), y;
        for (std::size_t k = 0; k < dense.size(); ++k)
            q[k] = std::abs(s.fn(dense[k]));
        for (double r : top) {
            double m = std::abs(s.fn(r));
            for (std::size_t k = 0; k < dense.size(); ++k)
                if (dense[k] >= r && dense[k] <= 2.0 * r)
                    m = std::max(m, q[k]);
            y.push_back(m);
        }
        PowerFit pf = fit_power(top, y, 1e-13);
        CertificateLine l;
        l.tag = s.tag;
        l.quantity = s.quantity;
        l.required = s.required;
        l.exact = pf.exact;
        l.fitted = pf.tau;
        l.r2 = pf.r2;
        l.pass = pf.exact || (pf.points >= 3 && pf.tau >= s.required - slack);
        rep.lines.push_back(l);
    }
    return rep;
}

inline CertificateReport ap_certificate(const APProfile &p) {
    return ap_certificate(p, geometric_ladder(10.0, 1e5, 16));
}

namespace detail {

inline double flow_integrate(const APProfile &p, double r, double t, double rtol) {
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 1>;
    if (t == 0.0)
        return r;
    State x{r};
    auto rhs = [&p](const State &s, State &ds, double) {
        ds[0] = s[0] > p.r_cone ? p.fprime(s[0]).v : 0.0;
    };
    auto stepper = ode::make_controlled(rtol * 1e-2 * r, rtol, ode::runge_kutta_dopri5<State>());
    ode::integrate_adaptive(stepper, rhs, x, 0.0, t, std::min(t, 0.01 * r));
    if (!(x[0] > p.r_cone / 2))
        throw OutOfWindow("flow trajectory left the window r > r_cone/2");
    return x[0];
}

} // namespace detail

/// phi_t(r) for the flow d/dt phi = f'(phi), phi_0 = r.
inline double flow_map(const APProfile &p, double r, double t, double rtol = 1e-10) {
    if (!(r > 0.0))
        throw DomainError("flow_map needs r > 0");
    if (t < 0.0 || t > 0.9 * r * (1 + 1e-12))
        throw InvalidArgument("flow_map needs 0 <= t <= 0.9 r");
    return detail::flow_integrate(p, r, t, rtol);
}

/// |d phi_t/dr - f'(phi_t(r))/f'(r)|, the derivative from Richardson-extrapolated central differences.
inline double flow_derivative_check(const APProfile &p, double r, double t) {
    if (!(r > 0.0))
        throw DomainError("flow_derivative_check needs r > 0");
    if (t < 0.0 || t > 0.9 * r * (1 + 1e-12))
        throw InvalidArgument("flow_derivative_check needs 0 <= t <= 0.9 r");
    const double fr = p.fprime(r).v;
    if (fr == 0.0)
        throw DomainError("undefined ratio: f'(r) = 0");
    const double h = 1e-4 * r;
    const double rtol = 1e-13;
    auto central = [&](double k) {
        return (detail::flow_integrate(p, r + k, t, rtol) - detail::flow_integrate(p, r - k, t, rtol)) / (2 * k);
    };
    const double fd = (4.0 * central(h / 2) - central(h)) / 3.0;
    const double ratio = p.fprime(detail::flow_integrate(p, r, t, rtol)).v / fr;
    return std::abs(fd - ratio);
}

} // namespace aplab

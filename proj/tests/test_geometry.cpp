#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "aplab/geometry.hpp"
#include "aplab/numeric.hpp"

using namespace aplab;

namespace {

APProfile model() { return model_profile(3, 2.0, 0.5, 2.0); }

// Fourth-order central difference.
template <class F> double fd(F f, double r, double h) {
    return (-f(r + 2 * h) + 8 * f(r + h) - 8 * f(r - h) + f(r - 2 * h)) / (12 * h);
}

const CertificateLine &line(const CertificateReport &rep, const std::string &tag) {
    for (const auto &l : rep.lines)
        if (l.tag == tag)
            return l;
    throw std::runtime_error("missing line " + tag);
}

} // namespace

TEST(ModelProfile, PlateauValues) {
    APProfile p = model();
    EXPECT_DOUBLE_EQ(p.phi(0.25).v, 0.25);
    EXPECT_DOUBLE_EQ(p.phi(0.25).d1, 1.0);
    EXPECT_DOUBLE_EQ(p.fprime(0.25).v, 0.0);
    EXPECT_DOUBLE_EQ(p.phi(8.0).v, 4.0);
    EXPECT_DOUBLE_EQ(p.fprime(8.0).v, -1.0);
    EXPECT_DOUBLE_EQ(p.fprime(8.0).d1, 0.0);
    EXPECT_DOUBLE_EQ(p.f(0.3), 0.0);
    APProfile q = model_profile(4, 4.0, 0.5, 2.0);
    EXPECT_NEAR(q.phi(100.0).v, 20.0, 1e-12);
}

TEST(ModelProfile, JetsMatchFiniteDifferences) {
    for (const APProfile &p : {model(), bryant_like_profile(3, 0.7, 0.3), sine_tail_profile(model(), 0.5)}) {
        for (double r : {0.7, 1.0, 1.3, 1.8, 3.0, 11.0}) {
            const double h = 1e-3;
            EXPECT_NEAR(p.phi(r).d1, fd([&](double s) { return p.phi(s).v; }, r, h), 1e-8) << p.name << r;
            EXPECT_NEAR(p.phi(r).d2, fd([&](double s) { return p.phi(s).d1; }, r, h), 1e-7) << p.name << r;
            EXPECT_NEAR(p.fprime(r).d1, fd([&](double s) { return p.fprime(s).v; }, r, h), 1e-8) << p.name << r;
            EXPECT_NEAR(p.fprime(r).d2, fd([&](double s) { return p.fprime(s).d1; }, r, h), 1e-7) << p.name << r;
        }
    }
}

TEST(ModelProfile, PotentialIntegratesDerivative) {
    APProfile p = model();
    for (double r : {1.0, 2.0, 5.0}) {
        EXPECT_NEAR(fd([&](double s) { return p.f(s); }, r, 1e-3), p.fprime(r).v, 1e-8);
    }
    // On the plateau f decreases at unit rate.
    EXPECT_NEAR(p.f(9.0) - p.f(5.0), -4.0, 1e-12);
    EXPECT_THROW(p.phi(0.0), DomainError);
    EXPECT_THROW(p.fprime(-1.0), DomainError);
}

TEST(DriftCoefficients, PlateauAndCone) {
    APProfile p = model();
    auto c = drift_coefficients(p, 1.0);
    for (double r : {2.0, 5.0, 40.0}) {
        EXPECT_NEAR(c.a1(r), 1.0 / r + 1.0, 1e-14);
        EXPECT_NEAR(c.a0(r), -1.0 / (2.0 * r), 1e-14);
        EXPECT_NEAR(c.a1_prime(r), -1.0 / (r * r), 1e-14);
    }
    auto c0 = drift_coefficients(p, 0.0);
    EXPECT_NEAR(c0.a1(0.3), 2.0 / 0.3, 1e-12);
    EXPECT_DOUBLE_EQ(c0.a0(0.3), 0.0);
    EXPECT_THROW(drift_coefficients(p, -1.0), InvalidArgument);
}

TEST(DriftCoefficients, LiouvilleNormalFormPotential) {
    // q = A1^2/4 + A1'/2 - A0 against differences of the stored coefficients.
    APProfile p = bryant_like_profile(3, 0.7, 0.3);
    auto c = drift_coefficients(p, 3.0);
    for (double r : {1.1, 4.0}) {
        const double a1p = fd([&](double s) { return c.a1(s); }, r, 1e-3);
        EXPECT_NEAR(c.a1_prime(r), a1p, 1e-7);
        EXPECT_NEAR(c.q(r), 0.25 * c.a1(r) * c.a1(r) + 0.5 * a1p - c.a0(r), 1e-7);
    }
}

TEST(MeanCurvature, ConeAndPlateau) {
    APProfile p = model();
    // (n - 1)/(2 rho) on the plateau, here n = 3.
    EXPECT_NEAR(mean_curvature(p, 2.0), 2.0 / 4.0, 1e-15);
    EXPECT_NEAR(mean_curvature(p, 50.0), 2.0 / 100.0, 1e-15);
    EXPECT_NEAR(mean_curvature(p, 0.4), 2.0 / 0.4, 1e-14);
    APProfile q = model_profile(5, 6.0, 0.5, 2.0);
    EXPECT_NEAR(mean_curvature(q, 0.25), 4.0 / 0.25, 1e-13);
}

TEST(EtaCoefficient, ConeAndPlateau) {
    APProfile p = model();
    EXPECT_NEAR(eta_coefficient(p, 3.0), 0.0, 1e-15);
    EXPECT_NEAR(eta_coefficient(p, 1e4), 0.0, 1e-15);
    EXPECT_NEAR(eta_coefficient(p, 0.3), 1.0, 1e-15);
}

TEST(Certificate, ModelIsExact) {
    CertificateReport rep = ap_certificate(model());
    EXPECT_TRUE(rep.passed());
    for (const auto &l : rep.lines)
        EXPECT_TRUE(l.exact) << l.tag;
    EXPECT_NE(rep.csv().find("exact"), std::string::npos);
}

TEST(Certificate, BryantLikeTail) {
    const double c = 0.7;
    APProfile p = bryant_like_profile(3, c, 0.3);
    CertificateReport rep = ap_certificate(p);
    EXPECT_TRUE(rep.passed()) << rep.text();
    // Oracle: regression of the closed-form tail c/r on the same top decade.
    std::vector<double> x = geometric_ladder(1e4, 1e5, 16), y;
    for (double r : x)
        y.push_back(c / r);
    LinearFit lf = linear_fit([&] {
        std::vector<double> lx;
        for (double r : x)
            lx.push_back(std::log(r));
        return lx;
    }(), [&] {
        std::vector<double> ly;
        for (double v : y)
            ly.push_back(std::log(v));
        return ly;
    }());
    EXPECT_NEAR(-lf.slope, 1.0, 1e-12);
    EXPECT_NEAR(line(rep, "potential line 1").fitted, -lf.slope, 0.05);
}

TEST(Certificate, SineTailFailsSecondLine) {
    CertificateReport rep = ap_certificate(sine_tail_profile(model(), 0.5));
    EXPECT_FALSE(rep.passed());
    ASSERT_NE(rep.first_failure(), nullptr);
    EXPECT_EQ(rep.first_failure()->tag, "potential line 2");
    EXPECT_TRUE(line(rep, "potential line 1").pass);
    EXPECT_NEAR(line(rep, "potential line 2").fitted, 1.0, 0.05);
}

TEST(Certificate, ChirpTailFailsOnlySecondLine) {
    CertificateReport rep = ap_certificate(chirp_tail_profile(model(), 0.5));
    int fails = 0;
    for (const auto &l : rep.lines)
        fails += !l.pass;
    EXPECT_EQ(fails, 1);
    EXPECT_EQ(rep.first_failure()->tag, "potential line 2");
    EXPECT_NEAR(line(rep, "potential line 2").fitted, 1.25, 0.05);
}

TEST(Certificate, ShortLadderRejected) {
    EXPECT_THROW(ap_certificate(model(), {10, 20, 40}), InvalidArgument);
}

TEST(Certificate, TighterTailDoesNotFlipOtherLines) {
    CertificateReport a = ap_certificate(bryant_like_profile(3, 0.7, 0.3));
    CertificateReport b = ap_certificate(bryant_like_profile(3, 0.07, 0.3));
    for (std::size_t i = 0; i < a.lines.size(); ++i)
        if (a.lines[i].pass)
            EXPECT_TRUE(b.lines[i].pass) << a.lines[i].tag;
}

TEST(Flow, InitialConditionAndPlateau) {
    APProfile p = model();
    EXPECT_DOUBLE_EQ(flow_map(p, 3.7, 0.0), 3.7);
    EXPECT_NEAR(flow_map(p, 10.0, 5.0), 5.0, 1e-9);
    EXPECT_NEAR(flow_map(p, 100.0, 60.0), 40.0, 1e-8);
    EXPECT_THROW(flow_map(p, 10.0, 9.5), InvalidArgument);
    EXPECT_THROW(flow_map(p, -1.0, 0.1), DomainError);
}

TEST(Flow, TravelTimeInvariant) {
    // t = integral from phi_t(r) to r of ds / (-f'(s)), evaluated independently.
    APProfile p = bryant_like_profile(3, 0.7, 0.3);
    for (auto [r, t] : std::vector<std::pair<double, double>>{{4.0, 1.5}, {6.0, 3.0}, {2.5, 0.8}}) {
        const double end = flow_map(p, r, t);
        auto g = [&](double s) { return -1.0 / p.fprime(s).v; };
        const double T = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, end, r, 15, 1e-13);
        EXPECT_NEAR(T, t, 1e-8);
    }
}

TEST(Flow, DerivativeRatio) {
    APProfile p = model();
    EXPECT_LT(flow_derivative_check(p, 20.0, 5.0), 1e-8);
    EXPECT_LT(flow_derivative_check(p, 3.0, 0.0), 1e-8);
    EXPECT_LT(flow_derivative_check(p, 1.5, 0.5), 1e-6);
    EXPECT_LT(flow_derivative_check(bryant_like_profile(3, 0.7, 0.3), 4.0, 2.5), 1e-6);
    EXPECT_THROW(flow_derivative_check(p, 0.3, 0.1), DomainError);
}

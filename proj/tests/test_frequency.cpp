#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "aplab/frequency.hpp"
#include "aplab/radial.hpp"

using namespace aplab;

namespace {

class FrequencyTest : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        p_ = new APProfile(model_profile(3, 2.0, 0.5, 2.0));
        spec_ = std::make_shared<const Spectrum>(sphere_spectrum(2, 2.0, 4));
        sols_ = new std::vector<RadialSolution>();
        for (double lam : spec_->eigenvalues)
            sols_->push_back(solve_radial(*p_, lam, 1e4, {128.0, 1e-12}));
    }
    static void TearDownTestSuite() {
        delete p_;
        delete sols_;
        spec_.reset();
    }

    static ModeField mode(int k) {
        return separable_field((*sols_)[static_cast<std::size_t>(spec_->mode(k).level)], spec_, k);
    }
    static std::vector<double> nodes(double lo, double hi, std::size_t stride = 1) {
        std::vector<double> out;
        const auto &g = (*sols_)[0].grid;
        for (std::size_t j = 0; j < g.size(); j += stride)
            if (g[j] >= lo && g[j] <= hi)
                out.push_back(g[j]);
        return out;
    }
    // Field value at a cross-section point, reconstructed from mode coefficients.
    static double point_value(const ModeField &u, double r, const std::vector<double> &pt) {
        auto a = u.sample(r).first;
        double s = 0.0;
        for (int k = 0; k < u.modes(); ++k)
            s += a[k] * eigenfunction(*u.spectrum, k, pt);
        return s;
    }

    static APProfile *p_;
    static std::shared_ptr<const Spectrum> spec_;
    static std::vector<RadialSolution> *sols_;
};

APProfile *FrequencyTest::p_ = nullptr;
std::shared_ptr<const Spectrum> FrequencyTest::spec_;
std::vector<RadialSolution> *FrequencyTest::sols_ = nullptr;

} // namespace

TEST_F(FrequencyTest, ConstantFieldHasZeroTrace) {
    FrequencyTrace t = trace(mode(0), *p_, nodes(1.0, 1e3, 8));
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(t.U[i], 0.0);
        EXPECT_EQ(t.G[i], 0.0);
        EXPECT_EQ(t.Q[i], 0.0);
        EXPECT_EQ(t.D[i], 0.0);
        EXPECT_GT(t.I[i], 0.0);
    }
}

TEST_F(FrequencyTest, SingleModeQClosedForm) {
    for (double rho : nodes(0.6, 1e3, 16)) {
        FrequencyTrace t = trace(mode(2), *p_, {rho});
        const double ph = p_->phi(rho).v;
        EXPECT_NEAR(t.Q[0], rho * spec_->reference_eigenvalue(2) / (ph * ph), 1e-14);
        if (rho >= 2.0)
            EXPECT_NEAR(t.Q[0], 1.0, 1e-14);
    }
}

TEST_F(FrequencyTest, SingleModeCauchySchwarzEquality) {
    for (int k : {1, 5, 12}) {
        FrequencyTrace t = trace(mode(k), *p_, nodes(1.0, 1e4, 8));
        for (std::size_t i = 0; i < t.size(); ++i)
            EXPECT_LT(std::abs(t.cs_gap(i)), 1e-12 * std::max(1.0, t.G[i]));
    }
}

TEST_F(FrequencyTest, ResidualsConvergeAtSecondOrder) {
    ModeField u = add({mode(1), mode(6)}, {1.0, 0.3});
    auto max_on_common = [](const ResidualSeries &a, const ResidualSeries &b) {
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < a.rho.size(); ++i)
            for (std::size_t j = 0; j < b.rho.size(); ++j)
                if (a.rho[i] == b.rho[j]) {
                    ma = std::max(ma, std::abs(a.value[i]));
                    mb = std::max(mb, std::abs(b.value[j]));
                }
        return ma / mb;
    };
    FrequencyTrace c = trace(u, *p_, nodes(4.0, 400.0, 2));
    FrequencyTrace f = trace(u, *p_, nodes(4.0, 400.0, 1));
    const double r1 = max_on_common(frequency_ode_residual(c), frequency_ode_residual(f));
    const double r2 = max_on_common(i_log_derivative_check(c), i_log_derivative_check(f));
    EXPECT_GT(r1, 3.5);
    EXPECT_LT(r1, 4.5);
    EXPECT_GT(r2, 3.5);
    EXPECT_LT(r2, 4.5);
}

TEST_F(FrequencyTest, ResidualSmallAgainstFrequencySlope) {
    auto relative = [&](double ppd) {
        RadialSolution s = solve_radial(*p_, 1.0, 1e3, {ppd, 1e-12});
        std::vector<double> ladder;
        for (double r : s.grid)
            if (r >= 2.0)
                ladder.push_back(r);
        FrequencyTrace t = trace(separable_field(s, spec_, 1), *p_, ladder);
        double slope = 0.0;
        for (std::size_t i = 1; i + 1 < t.size(); ++i)
            slope = std::max(slope, std::abs((t.U[i + 1] - t.U[i - 1]) / (t.rho[i + 1] - t.rho[i - 1])));
        return frequency_ode_residual(t).max_abs() / slope;
    };
    EXPECT_LT(relative(64.0), 2e-3);
    EXPECT_LT(relative(256.0), 1e-4);
    EXPECT_EQ(frequency_ode_residual(trace(mode(0), *p_, nodes(2.0, 1e3, 2))).max_abs(), 0.0);
    EXPECT_THROW(frequency_ode_residual(trace(mode(1), *p_, {2.0, 4.0, 8.0})), InvalidArgument);
}

TEST_F(FrequencyTest, ILogCheckIsScaleInvariant) {
    auto ladder = nodes(1.0, 100.0, 2);
    ModeField u = add({mode(1), mode(4)}, {1.0, -0.7});
    ResidualSeries a = i_log_derivative_check(trace(u, *p_, ladder));
    ResidualSeries b = i_log_derivative_check(trace(add({u}, {2.0}), *p_, ladder));
    for (std::size_t i = 0; i < a.value.size(); ++i)
        EXPECT_NEAR(a.value[i], b.value[i], 1e-12);
}

TEST_F(FrequencyTest, LevelInnerMatchesQuadratureOfReconstruction) {
    ModeField u = add({mode(1), mode(3), mode(6)}, {0.8, -1.1, 0.4});
    ModeField v = add({mode(1), mode(6), mode(10)}, {0.5, 0.9, -0.2});
    CrossQuadrature q = cross_quadrature(*spec_, 8);
    for (double rho : {1.0, 7.0, 300.0}) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.points.size(); ++i)
            s += q.weights[i] * point_value(u, rho, q.points[i]) * point_value(v, rho, q.points[i]);
        const double w = std::pow(p_->phi(rho).v / std::sqrt(rho), 2);
        const double want = w * s;
        EXPECT_NEAR(level_inner(u, v, *p_, rho), want, 1e-8 * std::max(1.0, std::abs(want)));
    }
    EXPECT_EQ(level_inner(mode(1), mode(2), *p_, 5.0), 0.0);
    const double I = trace(u, *p_, {5.0}).I[0];
    EXPECT_NEAR(level_inner(u, u, *p_, 5.0), I, 1e-14 * I);
}

TEST_F(FrequencyTest, AddMatchesPointwiseReconstruction) {
    ModeField a = add({mode(1), mode(7)}, {1.0, 0.25});
    ModeField b = add({mode(2), mode(9), mode(0)}, {-0.5, 1.5, 2.0});
    ModeField s = add({a, b}, {0.3, -1.7});
    const double pi = std::numbers::pi;
    for (double r : {0.8, 3.0, 55.0})
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                std::vector<double> pt{pi * (i + 0.5) / 5, 2 * pi * j / 5};
                const double want = 0.3 * point_value(a, r, pt) - 1.7 * point_value(b, r, pt);
                EXPECT_NEAR(point_value(s, r, pt), want, 1e-12 * std::max(1.0, std::abs(want)));
            }
    ModeField z = add({a, a}, {1.0, -1.0});
    EXPECT_EQ(z.u.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(add({a}, {1.0, 2.0}), InvalidArgument);
}

TEST_F(FrequencyTest, OrthogonalityAngle) {
    ModeField e1 = mode(1);
    ModeField mix = add({mode(1), mode(2)}, {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)});
    EXPECT_NEAR(orthogonality_angle(e1, e1, *p_, 10.0), 1.0, 1e-15);
    EXPECT_EQ(orthogonality_angle(mode(1), mode(4), *p_, 10.0), 0.0);
    for (double rho : {1.0, 10.0, 1000.0})
        EXPECT_NEAR(orthogonality_angle(e1, mix, *p_, rho), 1.0 / std::sqrt(2.0), 1e-14);
}

TEST_F(FrequencyTest, SeparationDefect) {
    EXPECT_LT(std::abs(separation_defect(mode(2), *p_, 10.0, 20.0)), 1e-14);
    ModeField u = add({mode(1), mode(5)}, {1.0, 1.0});
    const double r1 = 8.0, r2 = 16.0;
    const double d = separation_defect(u, *p_, r1, r2);
    EXPECT_GT(d, 0.0);
    // Oracle: integrand rho w (T - P^2/S) from the raw coefficients, same nodes.
    std::vector<double> xs{r1}, ys;
    for (double r : u.grid)
        if (r > r1 * (1 + 1e-12) && r < r2 * (1 - 1e-12))
            xs.push_back(r);
    xs.push_back(r2);
    for (double r : xs) {
        auto [a, b] = u.sample(r);
        const double w = std::pow(p_->phi(r).v / std::sqrt(r), 2);
        ys.push_back(r * w * (b.squaredNorm() - std::pow(a.dot(b), 2) / a.squaredNorm()));
    }
    auto [a2, b2] = u.sample(r2);
    const double want = trapezoid(xs, ys) / (2.0 * a2.squaredNorm());
    EXPECT_NEAR(d, want, 1e-9 * want);
    // Decays with the window position.
    EXPECT_LT(separation_defect(u, *p_, 256.0, 512.0), d);
    EXPECT_THROW(separation_defect(mode(0), *p_, 4.0, 8.0), DomainError);
}

TEST_F(FrequencyTest, PinchingSingleModeAndConstant) {
    const auto ladder = dyadic_ladder(3, 12);
    PinchReport rep = pinching_report(mode(1), *p_, 1.0, nodes(8.0, 5e3, 16));
    EXPECT_TRUE(rep.passed()) << rep.csv();
    for (double q : rep.Q)
        EXPECT_NEAR(q, 1.0, 1e-14);
    for (double r : rep.projection_ratio)
        EXPECT_EQ(r, 1.0);
    // U approaches 1 at rate 1.
    EXPECT_NEAR(rep.rows[0].fit.tau, 1.0, 0.1);
    PinchReport c = pinching_report(mode(0), *p_, 0.0, nodes(8.0, 5e3, 16));
    EXPECT_TRUE(c.passed());
    for (const auto &row : c.rows)
        EXPECT_TRUE(row.fit.exact) << row.quantity;
    EXPECT_THROW(pinching_report(mode(1), *p_, 2.0, ladder), InvalidArgument);
}

TEST_F(FrequencyTest, MeanValueConstantClosedForm) {
    const double want = 1.0 / (4.0 * std::numbers::pi * (1.0 - 1.0 / 1024.0));
    for (double rho : {64.0, 256.0, 1024.0})
        EXPECT_NEAR(mean_value_ratio(mode(0), *p_, rho, 0.25), want, 1e-12);
}

TEST_F(FrequencyTest, MeanValueFlatAndScaleInvariant) {
    ModeField u = mode(1);
    std::vector<double> vals;
    for (int e = 6; e <= 10; ++e)
        vals.push_back(mean_value_ratio(u, *p_, std::ldexp(1.0, e), 0.25));
    for (double v : vals)
        EXPECT_NEAR(v / vals.back(), 1.0, 0.1);
    EXPECT_NEAR(mean_value_ratio(add({u}, {3.0}), *p_, 512.0, 0.25), vals[3], 1e-12 * vals[3]);
    EXPECT_THROW(mean_value_ratio(u, *p_, 512.0, 0.6), InvalidArgument);
    EXPECT_THROW(mean_value_ratio(u, *p_, 8.0, 0.25), InvalidArgument);
}

TEST_F(FrequencyTest, WronskianAndBounds) {
    EXPECT_EQ(wronskian_flux(mode(1), mode(4), *p_, 9.0), 0.0);
    EXPECT_NEAR(wronskian_flux(mode(1), mode(1), *p_, 9.0), 0.0, 1e-14);
    EXPECT_NEAR(i_ratio_lower_bound(0.0, 1.0, 2.0, 10.0, 20.0), 16.0, 1e-12);
    EXPECT_LT(i_ratio_lower_bound(1.0, 1.0, 2.0, 10.0, 20.0), 16.0);
    FrequencyTrace t = trace(mode(1), *p_, nodes(2.0, 1e3, 4));
    EXPECT_EQ(monotonicity_deficit(t), 0.0);
}

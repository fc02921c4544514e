#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "aplab/cross_section.hpp"

using namespace aplab;

namespace {

constexpr double pi = std::numbers::pi;

// Second-order finite-volume Laplace-Beltrami on a latitude-longitude grid of the
// unit sphere. Uniform longitudes diagonalize the azimuthal stencil, leaving one
// symmetric tridiagonal problem per azimuthal index.
std::vector<double> fd_sphere_eigenvalues(int n_theta, int n_phi, int m_max, double cutoff) {
    const double h = pi / n_theta;
    const double hp = 2.0 * pi / n_phi;
    std::vector<double> out;
    for (int m = 0; m <= m_max; ++m) {
        const double sym = std::pow(2.0 * std::sin(0.5 * m * hp) / hp, 2);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_theta, n_theta);
        std::vector<double> s(n_theta);
        for (int i = 0; i < n_theta; ++i)
            s[i] = std::sin((i + 0.5) * h);
        for (int i = 0; i < n_theta; ++i) {
            const double up = std::sin((i + 1) * h) / (h * h);
            const double dn = std::sin(i * h) / (h * h);
            A(i, i) = up + dn + sym / s[i];
            if (i + 1 < n_theta) {
                A(i, i + 1) = -up;
                A(i + 1, i) = -up;
            }
        }
        // Symmetrize against the mass diag(sin theta).
        for (int i = 0; i < n_theta; ++i)
            for (int j = 0; j < n_theta; ++j)
                A(i, j) /= std::sqrt(s[i] * s[j]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        for (int k = 0; k < n_theta; ++k) {
            double v = es.eigenvalues()(k);
            if (v > cutoff)
                break;
            out.push_back(v);
            if (m > 0)
                out.push_back(v);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Groups values equal to three significant digits.
std::vector<std::pair<double, int>> cluster(const std::vector<double> &v) {
    std::vector<std::pair<double, int>> c;
    for (double x : v) {
        if (!c.empty() && std::abs(x - c.back().first) <= 5e-3 * std::max(1.0, x))
            ++c.back().second;
        else
            c.push_back({x, 1});
    }
    return c;
}

// |k|^2 values of the integer lattice with multiplicities, scaled for side lengths L.
std::map<long, int> lattice_counts(int dim, int bound) {
    std::map<long, int> m;
    std::vector<int> k(dim, -bound);
    for (;;) {
        long s = 0;
        for (int x : k)
            s += static_cast<long>(x) * x;
        ++m[s];
        int i = 0;
        while (i < dim && ++k[i] > bound)
            k[i++] = -bound;
        if (i == dim)
            break;
    }
    return m;
}

} // namespace

TEST(SphereSpectrum, UnitSphereMatchesFiniteDifferenceOracle) {
    Spectrum s = sphere_spectrum(2, 1.0, 3);
    auto fd = cluster(fd_sphere_eigenvalues(240, 256, 3, 7.0));
    ASSERT_GE(fd.size(), 3u);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(s.eigenvalues[k], fd[k].first, 5e-3 * std::max(1.0, fd[k].first));
        EXPECT_EQ(s.multiplicities[k], fd[k].second);
    }
    EXPECT_EQ(s.eigenvalues, (std::vector<double>{0, 2, 6}));
    EXPECT_EQ(s.multiplicities, (std::vector<int>{1, 3, 5}));
}

TEST(SphereSpectrum, ScaleTwoHalvesEigenvalues) {
    Spectrum one = sphere_spectrum(2, 1.0, 4);
    Spectrum two = sphere_spectrum(2, 2.0, 4);
    for (int k = 0; k < 4; ++k)
        EXPECT_DOUBLE_EQ(two.eigenvalues[k], 0.5 * one.eigenvalues[k]);
    EXPECT_EQ(two.eigenvalues, (std::vector<double>{0, 1, 3, 6}));
    EXPECT_EQ(two.multiplicities, (std::vector<int>{1, 3, 5, 7}));
}

TEST(SphereSpectrum, SingleLevelIsConstants) {
    for (int d : {1, 2, 5}) {
        Spectrum s = sphere_spectrum(d, 3.5, 1);
        EXPECT_EQ(s.eigenvalues, (std::vector<double>{0}));
        EXPECT_EQ(s.multiplicities, (std::vector<int>{1}));
    }
}

TEST(SphereSpectrum, Errors) {
    EXPECT_THROW(sphere_spectrum(2, 0.0, 3), InvalidArgument);
    EXPECT_THROW(sphere_spectrum(2, -1.0, 3), InvalidArgument);
    EXPECT_THROW(sphere_spectrum(0, 1.0, 3), InvalidArgument);
}

TEST(TorusSpectrum, SquareTorusMatchesLatticeEnumeration) {
    Spectrum t = torus_spectrum({2 * pi, 2 * pi}, 3);
    auto counts = lattice_counts(2, 4);
    std::vector<double> lam;
    std::vector<int> mult;
    for (auto [k2, c] : counts) {
        if (lam.size() == 3)
            break;
        lam.push_back(static_cast<double>(k2));
        mult.push_back(c);
    }
    ASSERT_EQ(t.levels(), 3);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(t.eigenvalues[k], lam[k], 1e-12);
        EXPECT_EQ(t.multiplicities[k], mult[k]);
    }
    EXPECT_EQ(t.multiplicities, (std::vector<int>{1, 4, 4}));
}

TEST(TorusSpectrum, CircleAndTrivialCases) {
    Spectrum c = torus_spectrum({2 * pi}, 2);
    EXPECT_NEAR(c.eigenvalues[1], 1.0, 1e-12);
    EXPECT_EQ(c.multiplicities, (std::vector<int>{1, 2}));
    Spectrum one = torus_spectrum({1.0, 3.0}, 1);
    EXPECT_EQ(one.eigenvalues, (std::vector<double>{0}));
    EXPECT_EQ(one.multiplicities, (std::vector<int>{1}));
    EXPECT_THROW(torus_spectrum({}, 2), InvalidArgument);
}

TEST(TorusSpectrum, RectangularTorusAgainstEnumeration) {
    const double L1 = 2 * pi, L2 = pi;
    Spectrum t = torus_spectrum({L1, L2}, 6);
    std::map<long, int> counts; // eigenvalue k1^2 + 4 k2^2
    for (int a = -8; a <= 8; ++a)
        for (int b = -8; b <= 8; ++b)
            ++counts[static_cast<long>(a) * a + 4L * b * b];
    auto it = counts.begin();
    for (int k = 0; k < 6; ++k, ++it) {
        EXPECT_NEAR(t.eigenvalues[k], static_cast<double>(it->first), 1e-10);
        EXPECT_EQ(t.multiplicities[k], it->second);
    }
}

TEST(DimensionCount, SummedMultiplicities) {
    Spectrum s = sphere_spectrum(2, 2.0, 4);
    EXPECT_EQ(dimension_count(s, 1.0), 4);
    EXPECT_EQ(dimension_count(s, 0.5), 1);
    EXPECT_EQ(dimension_count(s, 3.0), 9);
    EXPECT_EQ(dimension_count(s, 6.0), 16);
    EXPECT_THROW(dimension_count(s, 6.5), OutOfRange);
}

TEST(ModeIndexing, FlatRoundTrip) {
    Spectrum s = sphere_spectrum(2, 2.0, 4);
    EXPECT_EQ(s.mode_count(), 16);
    for (int f = 0; f < s.mode_count(); ++f) {
        ModeId id = s.mode(f);
        EXPECT_EQ(s.flat(id.level, id.j), f);
        EXPECT_DOUBLE_EQ(s.reference_eigenvalue(f), 2.0 * s.eigenvalues[id.level]);
    }
    EXPECT_THROW(s.mode(16), OutOfRange);
    EXPECT_EQ(s.level_of(3.0), 2);
    EXPECT_EQ(s.level_of(2.0), -1);
}

class Orthonormality : public ::testing::TestWithParam<int> {};

TEST_P(Orthonormality, QuadratureGram) {
    Spectrum s = GetParam() == 0   ? sphere_spectrum(2, 2.0, 4)
                 : GetParam() == 1 ? sphere_spectrum(1, 1.0, 5)
                                   : torus_spectrum({2 * pi, 3.0}, 5);
    const int M = s.mode_count();
    int deg = 0;
    for (int f = 0; f < M; ++f)
        deg = std::max(deg, mode_degree(s, f));
    CrossQuadrature q = cross_quadrature(s, 2 * deg);
    auto tab = eigenfunction_table(s, M, q.points);
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) {
            double g = 0.0;
            for (std::size_t p = 0; p < q.points.size(); ++p)
                g += q.weights[p] * tab[p][a] * tab[p][b];
            EXPECT_NEAR(g, a == b ? 1.0 : 0.0, 1e-12) << a << ' ' << b;
        }
}

INSTANTIATE_TEST_SUITE_P(Spectra, Orthonormality, ::testing::Values(0, 1, 2));

TEST(Eigenfunctions, SphereModesSatisfyLaplaceEquation) {
    // Difference quotient of the Laplace-Beltrami operator on S^2 at interior points.
    Spectrum s = sphere_spectrum(2, 1.0, 3);
    const double h = 1e-3;
    for (int f = 0; f < s.mode_count(); ++f) {
        const double lam = s.mode_eigenvalue(f);
        for (auto pt : std::vector<std::vector<double>>{{0.7, 0.3}, {1.9, 2.5}, {1.2, 5.0}}) {
            const double th = pt[0], ph = pt[1];
            auto u = [&](double a, double b) { return eigenfunction(s, f, {a, b}); };
            const double d2t = (u(th + h, ph) - 2 * u(th, ph) + u(th - h, ph)) / (h * h);
            const double d1t = (u(th + h, ph) - u(th - h, ph)) / (2 * h);
            const double d2p = (u(th, ph + h) - 2 * u(th, ph) + u(th, ph - h)) / (h * h);
            const double lap = d2t + std::cos(th) / std::sin(th) * d1t + d2p / std::pow(std::sin(th), 2);
            EXPECT_NEAR(-lap, lam * u(th, ph), 1e-5) << f;
        }
    }
}

TEST(Eigenfunctions, HigherSphereDimensionsAreUnsupported) {
    Spectrum s = sphere_spectrum(3, 1.0, 3);
    EXPECT_FALSE(has_pointwise_basis(s));
    EXPECT_THROW(eigenfunction(s, 0, {0.0, 0.0, 0.0}), Unsupported);
}

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "errors.hpp"

namespace aplab {

/// Position of a flat mode: distinct-eigenvalue level (0-based) and slot inside it.
struct ModeId {
    int level = 0;
    int j = 0;
};

/// Distinct eigenvalues of -Delta on (Sigma, g_X) with g_X = scale * g_ref.
/// Levels are 0-based here, so level 0 holds the constants.
class Spectrum {
  public:
    enum class Kind { Sphere, Torus };

    Kind kind = Kind::Sphere;
    int sigma_dim = 0;
    double scale = 1.0;
    std::vector<double> eigenvalues;
    std::vector<int> multiplicities;
    std::vector<double> lengths;
    // Torus only: canonical lattice vectors of each level (first nonzero entry positive).
    std::vector<std::vector<std::vector<int>>> lattice;

    int levels() const { return static_cast<int>(eigenvalues.size()); }

    int mode_count() const {
        int s = 0;
        for (int m : multiplicities)
            s += m;
        return s;
    }

    int level_offset(int level) const {
        check_level(level);
        int s = 0;
        for (int k = 0; k < level; ++k)
            s += multiplicities[k];
        return s;
    }

    ModeId mode(int flat) const {
        if (flat < 0)
            throw OutOfRange("negative mode id");
        int rest = flat;
        for (int k = 0; k < levels(); ++k) {
            if (rest < multiplicities[k])
                return {k, rest};
            rest -= multiplicities[k];
        }
        throw OutOfRange("mode id beyond retained spectrum");
    }

    int flat(int level, int j) const {
        check_level(level);
        if (j < 0 || j >= multiplicities[level])
            throw OutOfRange("slot outside eigenspace");
        return level_offset(level) + j;
    }

    /// Eigenvalue of g_X carried by a flat mode.
    double mode_eigenvalue(int flat_id) const { return eigenvalues[mode(flat_id).level]; }

    /// Same eigenvalue for the unscaled reference metric.
    double reference_eigenvalue(int flat_id) const { return scale * mode_eigenvalue(flat_id); }

    /// Level index of an eigenvalue, or -1 when it is not in the retained list.
    int level_of(double lambda, double tol = 1e-9) const {
        for (int k = 0; k < levels(); ++k)
            if (std::abs(eigenvalues[k] - lambda) <= tol * std::max(1.0, std::abs(lambda)))
                return k;
        return -1;
    }

    std::string table() const {
        std::ostringstream os;
        os.precision(17);
        os << "k,lambda,multiplicity\n";
        for (int k = 0; k < levels(); ++k)
            os << k + 1 << ',' << eigenvalues[k] << ',' << multiplicities[k] << '\n';
        return os.str();
    }

  private:
    void check_level(int level) const {
        if (level < 0 || level >= levels())
            throw OutOfRange("level outside retained spectrum");
    }
};

namespace detail {

inline double binomial(int n, int k) {
    if (k < 0 || n < k)
        return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

} // namespace detail

inline Spectrum sphere_spectrum(int sphere_dim, double scale, int count) {
    if (sphere_dim < 1)
        throw InvalidArgument("sphere dimension must be >= 1");
    if (!(scale > 0.0))
        throw InvalidArgument("sphere scale must be positive");
    if (count < 1)
        throw InvalidArgument("count must be >= 1");
    Spectrum s;
    s.kind = Spectrum::Kind::Sphere;
    s.sigma_dim = sphere_dim;
    s.scale = scale;
    const int d = sphere_dim;
    for (int l = 0; l < count; ++l) {
        s.eigenvalues.push_back(static_cast<double>(l) * (l + d - 1) / scale);
        double m = detail::binomial(l + d, d) - detail::binomial(l + d - 2, d);
        s.multiplicities.push_back(static_cast<int>(std::lround(m)));
    }
    return s;
}

inline Spectrum torus_spectrum(const std::vector<double> &lengths, int count, double scale = 1.0) {
    if (lengths.empty())
        throw InvalidArgument("torus needs at least one length");
    for (double L : lengths)
        if (!(L > 0.0))
            throw InvalidArgument("torus lengths must be positive");
    if (count < 1)
        throw InvalidArgument("count must be >= 1");
    if (!(scale > 0.0))
        throw InvalidArgument("torus scale must be positive");
    const int D = static_cast<int>(lengths.size());
    const double two_pi = 2.0 * std::numbers::pi;
    double min_freq = 1e300;
    for (double L : lengths)
        min_freq = std::min(min_freq, two_pi / L);

    for (int B = 1;; ++B) {
        const double complete_below = std::pow(min_freq * (B + 1), 2);
        struct Entry {
            double value;
            std::vector<int> k;
        };
        std::vector<Entry> entries;
        std::vector<int> k(D, -B);
        for (;;) {
            double v = 0.0;
            for (int i = 0; i < D; ++i)
                v += std::pow(two_pi * k[i] / lengths[i], 2);
            if (v < complete_below)
                entries.push_back({v, k});
            int i = 0;
            while (i < D && ++k[i] > B)
                k[i++] = -B;
            if (i == D)
                break;
        }
        std::sort(entries.begin(), entries.end(), [](const Entry &a, const Entry &b) {
            return a.value != b.value ? a.value < b.value : a.k < b.k;
        });
        std::vector<double> values;
        std::vector<std::vector<std::vector<int>>> groups;
        std::vector<int> mult;
        for (const auto &e : entries) {
            if (values.empty() || e.value > values.back() * (1.0 + 1e-12) + 1e-300) {
                values.push_back(e.value);
                groups.emplace_back();
                mult.push_back(0);
            }
            ++mult.back();
            auto first = std::find_if(e.k.begin(), e.k.end(), [](int x) { return x != 0; });
            if (first == e.k.end() || *first > 0)
                groups.back().push_back(e.k);
        }
        if (static_cast<int>(values.size()) < count)
            continue;
        Spectrum s;
        s.kind = Spectrum::Kind::Torus;
        s.sigma_dim = D;
        s.scale = scale;
        s.lengths = lengths;
        for (int i = 0; i < count; ++i) {
            s.eigenvalues.push_back(values[i] / scale);
            s.multiplicities.push_back(mult[i]);
            s.lattice.push_back(groups[i]);
        }
        return s;
    }
}

inline int dimension_count(const Spectrum &spec, double d) {
    if (d < 0.0)
        return 0;
    if (d > spec.eigenvalues.back() * (1.0 + 1e-12) + 1e-12)
        throw OutOfRange("growth degree exceeds the largest retained eigenvalue");
    int n = 0;
    for (int k = 0; k < spec.levels(); ++k)
        if (spec.eigenvalues[k] <= d + 1e-12 * std::max(1.0, d))
            n += spec.multiplicities[k];
    return n;
}

// ---------------------------------------------------------------------------
// Pointwise eigenfunctions, orthonormal in L2(g_ref). Used for coupling
// matrices, pointwise sups and reconstruction oracles.

inline bool has_pointwise_basis(const Spectrum &s) {
    return s.kind == Spectrum::Kind::Torus || s.sigma_dim <= 2;
}

inline void require_pointwise(const Spectrum &s) {
    if (!has_pointwise_basis(s))
        throw Unsupported("pointwise eigenfunctions exist for S^1, S^2 and flat tori only");
}

inline double reference_volume(const Spectrum &s) {
    require_pointwise(s);
    if (s.kind == Spectrum::Kind::Torus) {
        double v = 1.0;
        for (double L : s.lengths)
            v *= L;
        return v;
    }
    return s.sigma_dim == 1 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

/// Trigonometric / polynomial degree of a mode (used to size quadratures).
inline int mode_degree(const Spectrum &s, int flat_id) {
    ModeId id = s.mode(flat_id);
    if (s.kind == Spectrum::Kind::Sphere)
        return id.level;
    if (id.level == 0)
        return 0;
    const auto &kv = s.lattice[id.level][id.j / 2];
    int m = 0;
    for (int x : kv)
        m = std::max(m, std::abs(x));
    return m;
}

/// Sphere points are (theta, phi) for S^2 and (phi) for S^1; torus points are coordinates.
inline double eigenfunction(const Spectrum &s, int flat_id, const std::vector<double> &pt) {
    require_pointwise(s);
    ModeId id = s.mode(flat_id);
    const double pi = std::numbers::pi;
    if (s.kind == Spectrum::Kind::Torus) {
        const double vol = reference_volume(s);
        if (id.level == 0)
            return 1.0 / std::sqrt(vol);
        const auto &kv = s.lattice[id.level][id.j / 2];
        double arg = 0.0;
        for (std::size_t i = 0; i < kv.size(); ++i)
            arg += 2.0 * pi * kv[i] * pt[i] / s.lengths[i];
        const double c = std::sqrt(2.0 / vol);
        return id.j % 2 == 0 ? c * std::cos(arg) : c * std::sin(arg);
    }
    const int l = id.level;
    if (s.sigma_dim == 1) {
        if (l == 0)
            return 1.0 / std::sqrt(2.0 * pi);
        return id.j == 0 ? std::cos(l * pt[0]) / std::sqrt(pi) : std::sin(l * pt[0]) / std::sqrt(pi);
    }
    const int m = id.j - l;
    const unsigned ul = static_cast<unsigned>(l), um = static_cast<unsigned>(std::abs(m));
    const double y = std::sph_legendre(ul, um, pt[0]);
    if (m == 0)
        return y;
    return m > 0 ? std::sqrt(2.0) * y * std::cos(m * pt[1]) : std::sqrt(2.0) * y * std::sin(-m * pt[1]);
}

struct CrossQuadrature {
    std::vector<std::vector<double>> points;
    std::vector<double> weights;
};

/// Tensor quadrature exact for products of eigenfunctions with total degree <= degree.
inline CrossQuadrature cross_quadrature(const Spectrum &s, int degree) {
    require_pointwise(s);
    CrossQuadrature q;
    const double pi = std::numbers::pi;
    if (s.kind == Spectrum::Kind::Torus) {
        const int N = 2 * degree + 2;
        const int D = s.sigma_dim;
        double w = 1.0;
        for (double L : s.lengths)
            w *= L / N;
        std::vector<int> idx(D, 0);
        for (;;) {
            std::vector<double> pt(D);
            for (int i = 0; i < D; ++i)
                pt[i] = s.lengths[i] * idx[i] / N;
            q.points.push_back(pt);
            q.weights.push_back(w);
            int i = 0;
            while (i < D && ++idx[i] == N)
                idx[i++] = 0;
            if (i == D)
                break;
        }
        return q;
    }
    const int M = 2 * degree + 2;
    if (s.sigma_dim == 1) {
        for (int i = 0; i < M; ++i) {
            q.points.push_back({2.0 * pi * i / M});
            q.weights.push_back(2.0 * pi / M);
        }
        return q;
    }
    using GL = boost::math::quadrature::gauss<double, 30>;
    if (degree > 50)
        throw Unsupported("sphere quadrature degree too high");
    std::vector<std::pair<double, double>> xw;
    const auto &a = GL::abscissa();
    const auto &wt = GL::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
        xw.emplace_back(a[i], wt[i]);
        if (a[i] != 0.0)
            xw.emplace_back(-a[i], wt[i]);
    }
    for (auto [x, wx] : xw)
        for (int i = 0; i < M; ++i) {
            q.points.push_back({std::acos(x), 2.0 * pi * i / M});
            q.weights.push_back(wx * 2.0 * pi / M);
        }
    return q;
}

/// Sample set for pointwise sups: a latitude-longitude (or uniform) grid.
inline std::vector<std::vector<double>> cross_samples(const Spectrum &s, int per_dim) {
    require_pointwise(s);
    const double pi = std::numbers::pi;
    std::vector<std::vector<double>> pts;
    if (s.kind == Spectrum::Kind::Torus) {
        const int D = s.sigma_dim;
        std::vector<int> idx(D, 0);
        for (;;) {
            std::vector<double> pt(D);
            for (int i = 0; i < D; ++i)
                pt[i] = s.lengths[i] * idx[i] / per_dim;
            pts.push_back(pt);
            int i = 0;
            while (i < D && ++idx[i] == per_dim)
                idx[i++] = 0;
            if (i == D)
                break;
        }
        return pts;
    }
    if (s.sigma_dim == 1) {
        for (int i = 0; i < per_dim; ++i)
            pts.push_back({2.0 * pi * i / per_dim});
        return pts;
    }
    pts.push_back({0.0, 0.0});
    pts.push_back({pi, 0.0});
    for (int a = 0; a < per_dim; ++a)
        for (int b = 0; b < 2 * per_dim; ++b)
            pts.push_back({pi * (a + 0.5) / per_dim, pi * b / per_dim});
    return pts;
}

/// Matrix of eigenfunction values, row per sample point, column per flat mode.
inline std::vector<std::vector<double>> eigenfunction_table(const Spectrum &s, int modes,
                                                            const std::vector<std::vector<double>> &pts) {
    std::vector<std::vector<double>> t(pts.size(), std::vector<double>(modes));
    for (std::size_t p = 0; p < pts.size(); ++p)
        for (int k = 0; k < modes; ++k)
            t[p][k] = eigenfunction(s, k, pts[p]);
    return t;
}

} // namespace aplab

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirichlet.hpp"
#include "errors.hpp"
#include "frequency.hpp"
#include "mode_field.hpp"
#include "numeric.hpp"

namespace aplab {

struct PairFit {
    std::size_t a = 0;
    std::size_t b = 0;
    PowerFit fit;
    std::vector<double> angles;
};

struct HarmonicBasis {
    std::vector<ModeField> fields;
    std::vector<int> levels;
    std::vector<double> target_levels;
    Eigen::MatrixXd gram_far;
    double far_radius = 0.0;
    std::vector<double> ladder;
    std::vector<PairFit> fits;
    std::vector<double> base_point_values;

    std::size_t size() const { return fields.size(); }

    double max_far_angle() const {
        double m = 0.0;
        for (Eigen::Index i = 0; i < gram_far.rows(); ++i)
            for (Eigen::Index j = 0; j < gram_far.cols(); ++j)
                if (i != j)
                    m = std::max(m, gram_far(i, j));
        return m;
    }

    std::string csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "a,b,level_a,level_b,far_angle,C,tau,r2,exact\n";
        for (const auto &f : fits)
            os << f.a << ',' << f.b << ',' << levels[f.a] << ',' << levels[f.b] << ','
               << gram_far(static_cast<Eigen::Index>(f.a), static_cast<Eigen::Index>(f.b)) << ',' << f.fit.C << ','
               << f.fit.tau << ',' << f.fit.r2 << ',' << (f.fit.exact ? 1 : 0) << '\n';
        return os.str();
    }

    std::string members_csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "index,level,lambda,base_point_value,r_max\n";
        for (std::size_t i = 0; i < fields.size(); ++i)
            os << i << ',' << levels[i] + 1 << ',' << target_levels[i] << ',' << base_point_values[i] << ','
               << fields[i].r_max() << '\n';
        return os.str();
    }
};

struct BasisOptions {
    int i_first = 9;
    int i_last = 12;
    double rho_bar = 16.0;
    double far_radius = 1024.0;
    double cauchy_tol = 1e-5;
    std::vector<double> ladder = dyadic_ladder(4, 10);
    std::uint64_t seed = 1;
};

namespace detail {

/// Restricts every field to the largest radius they all reach.
inline std::vector<ModeField> common_prefix(const std::vector<const ModeField *> &fs) {
    double r = std::numeric_limits<double>::infinity();
    for (auto *f : fs)
        r = std::min(r, f->r_max());
    std::vector<ModeField> out;
    out.reserve(fs.size());
    for (auto *f : fs)
        out.push_back(f->r_max() == r ? *f : f->restrict_to(r));
    return out;
}

/// Unit vector in the level block minimizing sum_v <b_v, x>^2 over prior boundary blocks.
inline Eigen::VectorXd select_boundary_block(const std::vector<Eigen::VectorXd> &blocks, int m, std::uint64_t seed) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    for (const auto &b : blocks)
        M += b * b.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    const double lo = es.eigenvalues()[0];
    int dim = 0;
    while (dim < m && es.eigenvalues()[dim] - lo <= 1e-10 * top)
        ++dim;
    Eigen::MatrixXd V = es.eigenvectors().leftCols(dim);
    Eigen::VectorXd x;
    for (int j = 0; j < m; ++j) {
        x = V * V.row(j).transpose();
        if (x.norm() > 1e-8)
            break;
    }
    x.normalize();
    if (seed % 2)
        x = -x;
    return x;
}

inline double cauchy_sup(const ModeField &a, const ModeField &b, double r_lo, double r_hi) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.grid.size() && j < b.grid.size(); ++j) {
        const double r = a.grid[j];
        if (r < r_lo * (1 - 1e-12) || r > r_hi * (1 + 1e-12))
            continue;
        m = std::max(m, (a.u.col(static_cast<Eigen::Index>(j)) - b.u.col(static_cast<Eigen::Index>(j))).norm());
    }
    return m;
}

} // namespace detail

/// Constant function 1 on the grid of the given solver.
inline ModeField constant_field(const OperatorSpec &op, const std::vector<double> &grid) {
    ModeField f = zero_field(op.spectrum, op.mode_cut, grid, "constant");
    f.u.row(0).setConstant(std::sqrt(reference_volume(*op.spectrum)));
    return f;
}

/// One member of level `level` (0-based) built from Dirichlet solves on B_{2^i}.
inline ModeField construct_harmonic(SolverCache &cache, int level, const HarmonicBasis &prior, const BasisOptions &opt) {
    const OperatorSpec &op = cache.op();
    const Spectrum &spec = *op.spectrum;
    if (level < 0 || level >= spec.levels())
        throw OutOfRange("level outside the retained spectrum");
    const int off = spec.level_offset(level);
    const int m = spec.multiplicities[static_cast<std::size_t>(level)];
    if (off + m > op.mode_cut)
        throw InvalidArgument("level block exceeds the mode cut");
    if (level == 0)
        return constant_field(op, cache.at(std::exp2(opt.i_last)).grid());
    int same = 0;
    for (int l : prior.levels)
        same += l == level;
    if (same >= m)
        throw InvalidArgument("level already complete in prior basis");

    std::ostringstream trace;
    trace << "i,cauchy_sup\n";
    ModeField last;
    bool have_last = false;
    const double window = 8.0 * opt.rho_bar;
    for (int i = opt.i_first; i <= opt.i_last; ++i) {
        const double rho = std::exp2(i);
        std::vector<Eigen::VectorXd> blocks;
        for (std::size_t q = 0; q < prior.fields.size(); ++q) {
            if (prior.levels[q] != level)
                continue;
            const ModeField &v = prior.fields[q];
            Eigen::VectorXd b = v.sample(std::min(rho, v.r_max())).first.segment(off, m);
            if (b.norm() > 0.0)
                blocks.push_back(b / b.norm());
        }
        Eigen::VectorXd theta = detail::select_boundary_block(blocks, m, opt.seed);
        const DirichletSolver &s = cache.at(rho);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(op.mode_cut);
        g.segment(off, m) = theta;
        ModeField w = s.solve(g);
        w.u.row(0).array() -= w.u(0, 0);

        std::vector<const ModeField *> all{&w};
        for (std::size_t q = 0; q < prior.fields.size(); ++q)
            if (prior.levels[q] > 0)
                all.push_back(&prior.fields[q]);
        if (all.size() > 1) {
            auto cp = detail::common_prefix(all);
            const auto np = static_cast<Eigen::Index>(all.size() - 1);
            Eigen::MatrixXd G(np, np);
            Eigen::VectorXd rhs(np);
            for (Eigen::Index a = 0; a < np; ++a) {
                rhs[a] = level_inner(cp[0], cp[static_cast<std::size_t>(a) + 1], op.profile, opt.rho_bar);
                for (Eigen::Index b = 0; b < np; ++b)
                    G(a, b) = level_inner(cp[static_cast<std::size_t>(a) + 1], cp[static_cast<std::size_t>(b) + 1],
                                          op.profile, opt.rho_bar);
            }
            Eigen::VectorXd coef = G.ldlt().solve(rhs);
            w = cp[0];
            for (Eigen::Index a = 0; a < np; ++a) {
                w.u -= coef[a] * cp[static_cast<std::size_t>(a) + 1].u;
                w.du -= coef[a] * cp[static_cast<std::size_t>(a) + 1].du;
            }
        }
        const double I = level_inner(w, w, op.profile, opt.rho_bar);
        if (!(I > 0.0))
            throw DegenerateLevel("iterate vanishes at rho_bar");
        w.u /= std::sqrt(I);
        w.du /= std::sqrt(I);
        w.description = "harmonic level " + std::to_string(level + 1);
        if (have_last) {
            const double c = detail::cauchy_sup(w, last, op.profile.r_cone, window);
            trace << i << ',' << c << '\n';
            if (c < opt.cauchy_tol)
                return w;
        }
        last = std::move(w);
        have_last = true;
    }
    throw ConstructionFailure("no Cauchy convergence for level " + std::to_string(level + 1) + " within i_range",
                              trace.str());
}

struct OrthogonalizeResult {
    ModeField field;
    double L = 0.0;
    bool exact = false;
    PowerFit cauchy;
};

/// w - L u with L the far-ladder limit of <w,u>_rho / |u|_rho^2.
inline OrthogonalizeResult asymptotic_orthogonalize(const ModeField &w, const ModeField &u, const APProfile &p,
                                                    const std::vector<double> &ladder) {
    auto cp = detail::common_prefix({&w, &u});
    std::vector<double> rs, q;
    for (double r : ladder) {
        if (r > cp[0].r_max() * (1 + 1e-12) || r < cp[0].r_min())
            continue;
        const double uu = level_inner(cp[1], cp[1], p, r);
        if (!(uu > 0.0))
            throw DegenerateLevel("zero norm at radius " + detail::radius_str(r));
        rs.push_back(r);
        q.push_back(level_inner(cp[0], cp[1], p, r) / uu);
    }
    if (q.size() < 3)
        throw InvalidArgument("asymptotic_orthogonalize needs three ladder radii inside the fields");
    std::vector<double> xs, d;
    for (std::size_t j = 0; j + 1 < q.size(); ++j) {
        xs.push_back(rs[j + 1]);
        d.push_back(q[j + 1] - q[j]);
    }
    OrthogonalizeResult res;
    res.L = q.back();
    res.cauchy = fit_power(xs, d);
    if (res.cauchy.exact || std::abs(d.back()) <= 1e-13) {
        res.exact = true;
    } else {
        if (!(res.cauchy.tau > 0.0))
            throw NoLimit("Cauchy differences of the inner-product ratio do not decay");
        const double step = std::pow(rs.back() / rs[rs.size() - 2], -res.cauchy.tau);
        res.L += d.back() * step / (1.0 - step);
    }
    res.field = cp[0];
    res.field.u -= res.L * cp[1].u;
    res.field.du -= res.L * cp[1].du;
    return res;
}

/// Angle fits and far Gram matrix for the current members.
inline void fill_diagnostics(HarmonicBasis &B, const APProfile &p) {
    const auto n = B.fields.size();
    B.gram_far = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    B.fits.clear();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            auto cp = detail::common_prefix({&B.fields[a], &B.fields[b]});
            const double ang = orthogonality_angle(cp[0], cp[1], p, std::min(B.far_radius, cp[0].r_max()));
            B.gram_far(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = ang;
            B.gram_far(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = ang;
            PairFit f;
            f.a = a;
            f.b = b;
            std::vector<double> xs;
            for (double r : B.ladder)
                if (r <= cp[0].r_max() * (1 + 1e-12)) {
                    xs.push_back(r);
                    f.angles.push_back(orthogonality_angle(cp[0], cp[1], p, r));
                }
            f.fit = fit_power(xs, f.angles);
            B.fits.push_back(std::move(f));
        }
}

/// Members for every level with lambda <= d, alternating construction and asymptotic orthogonalization.
inline HarmonicBasis build_basis(SolverCache &cache, double d, const BasisOptions &opt = {}) {
    const OperatorSpec &op = cache.op();
    const Spectrum &spec = *op.spectrum;
    if (!(d < spec.eigenvalues.back()))
        throw InvalidArgument("d must lie below the largest retained eigenvalue");
    HarmonicBasis B;
    B.far_radius = opt.far_radius;
    B.ladder = opt.ladder;
    for (int level = 0; level < spec.levels(); ++level) {
        const double lam = spec.eigenvalues[static_cast<std::size_t>(level)];
        if (lam > d * (1 + 1e-12) + 1e-12)
            break;
        const int m = spec.multiplicities[static_cast<std::size_t>(level)];
        for (int j = 0; j < m; ++j) {
            ModeField w = construct_harmonic(cache, level, B, opt);
            for (std::size_t q = 0; q < B.fields.size(); ++q)
                if (B.levels[q] == level)
                    w = asymptotic_orthogonalize(w, B.fields[q], op.profile, opt.ladder).field;
            B.base_point_values.push_back(w.u(0, 0));
            B.fields.push_back(std::move(w));
            B.levels.push_back(level);
            B.target_levels.push_back(lam);
        }
    }
    fill_diagnostics(B, op.profile);
    return B;
}

} // namespace aplab

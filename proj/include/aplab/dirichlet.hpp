#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "cross_section.hpp"
#include "errors.hpp"
#include "frequency.hpp"
#include "geometry.hpp"
#include "mode_field.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "radial.hpp"

namespace aplab {

/// Gradient drift h(r, theta) = e(r) w(theta) added to f on a compact radial window.
/// W is multiplication by w in the eigenbasis; T represents <grad w, grad .> there.
struct Coupling {
    double s1 = 4.0;
    double s2 = 8.0;
    double amplitude = 0.3;
    std::uint64_t seed = 0;
    Eigen::VectorXd w;
    Eigen::MatrixXd W;
    Eigen::MatrixXd T;

    /// Envelope amplitude * exp(4 - 1/(t(1-t))) with t = (r - s1)/(s2 - s1): e, e', e''.
    Jet envelope(double r) const {
        if (r <= s1 || r >= s2)
            return {0.0, 0.0, 0.0};
        const double L = s2 - s1, t = (r - s1) / L;
        const double g = t * (1 - t), gp = 1 - 2 * t;
        const double b = std::exp(4.0 - 1.0 / g);
        const double q = gp / (g * g);                                 // (log b)'
        const double qp = (-2.0 * g * g - 2.0 * g * gp * gp) / (g * g * g * g); // q'
        return {amplitude * b, amplitude * b * q / L, amplitude * b * (q * q + qp) / (L * L)};
    }
};

/// Coupling matrices for w = sum_m c_m Theta_m drawn from levels 1 and 2 (0-based), unit L2 norm.
inline Coupling make_coupling(const Spectrum &spec, int modes, double s1, double s2, double amplitude,
                              std::uint64_t seed) {
    require_pointwise(spec);
    if (!(s2 > s1))
        throw InvalidArgument("coupling support needs s1 < s2");
    Coupling c;
    c.s1 = s1;
    c.s2 = s2;
    c.amplitude = amplitude;
    c.seed = seed;
    c.w = Eigen::VectorXd::Zero(modes);
    auto rng = trial_rng(seed, 0x5eed);
    std::normal_distribution<double> nd(0.0, 1.0);
    int wdeg = 0;
    for (int k = 0; k < modes; ++k) {
        const int level = spec.mode(k).level;
        if (level == 1 || level == 2) {
            c.w[k] = nd(rng);
            wdeg = std::max(wdeg, mode_degree(spec, k));
        }
    }
    if (c.w.norm() == 0.0)
        throw InvalidArgument("coupling needs retained modes in levels 2 and 3");
    c.w /= c.w.norm();
    int kdeg = 0;
    for (int k = 0; k < modes; ++k)
        kdeg = std::max(kdeg, mode_degree(spec, k));
    auto quad = cross_quadrature(spec, 2 * kdeg + wdeg);
    const auto np = static_cast<Eigen::Index>(quad.points.size());
    Eigen::MatrixXd E(np, modes);
    for (Eigen::Index i = 0; i < np; ++i)
        for (int k = 0; k < modes; ++k)
            E(i, k) = eigenfunction(spec, k, quad.points[static_cast<std::size_t>(i)]);
    Eigen::VectorXd lam(modes);
    for (int k = 0; k < modes; ++k)
        lam[k] = spec.reference_eigenvalue(k);
    Eigen::VectorXd wv = E * c.w;
    Eigen::VectorXd wl = E * lam.cwiseProduct(c.w);
    Eigen::VectorXd qw = Eigen::Map<const Eigen::VectorXd>(quad.weights.data(), np);
    c.W = E.transpose() * (qw.cwiseProduct(wv)).asDiagonal() * E;
    Eigen::MatrixXd Wl = E.transpose() * (qw.cwiseProduct(wl)).asDiagonal() * E;
    c.W = 0.5 * (c.W + c.W.transpose());
    Wl = 0.5 * (Wl + Wl.transpose());
    c.T = 0.5 * (c.W * lam.asDiagonal().toDenseMatrix() - lam.asDiagonal().toDenseMatrix() * c.W + Wl);
    return c;
}

struct OperatorSpec {
    APProfile profile;
    std::shared_ptr<const Spectrum> spectrum;
    int mode_cut = 0;
    std::vector<Coupling> couplings;

    bool separable() const { return couplings.empty(); }

    std::string describe() const {
        std::ostringstream os;
        os << std::setprecision(17) << "profile " << profile.name << " n=" << profile.n << " scale=" << profile.scale
           << " r_cone=" << profile.r_cone << " r_asym=" << profile.r_asym << " mu=" << profile.mu << "; spectrum ";
        for (std::size_t k = 0; k < spectrum->eigenvalues.size(); ++k)
            os << spectrum->eigenvalues[k] << 'x' << spectrum->multiplicities[k] << ' ';
        os << "; modes " << mode_cut;
        for (const auto &c : couplings)
            os << "; coupling [" << c.s1 << ',' << c.s2 << "] amp " << c.amplitude << " seed " << c.seed;
        return os.str();
    }

    /// FNV-1a digest of describe().
    std::string hash() const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char ch : describe()) {
            h ^= ch;
            h *= 1099511628211ull;
        }
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << h;
        return os.str();
    }
};

inline OperatorSpec make_operator(const APProfile &p, std::shared_ptr<const Spectrum> spec, int mode_cut = -1,
                                  std::vector<Coupling> couplings = {}) {
    if (mode_cut < 0)
        mode_cut = spec->mode_count();
    if (mode_cut < 1 || mode_cut > spec->mode_count())
        throw InvalidArgument("mode cut outside retained spectrum");
    if (std::abs(p.scale - spec->scale) > 1e-12 * p.scale)
        throw InvalidArgument("profile scale and cross-section scale differ");
    if (spec->sigma_dim != p.n - 1)
        throw InvalidArgument("cross-section dimension must be n - 1");
    for (const auto &c : couplings) {
        if (!(c.s1 > p.r_cone))
            throw InvalidArgument("coupling support must lie beyond r_cone");
        if (c.W.rows() != mode_cut)
            throw InvalidArgument("coupling matrix size differs from mode cut");
    }
    OperatorSpec op;
    op.profile = p;
    op.spectrum = std::move(spec);
    op.mode_cut = mode_cut;
    op.couplings = std::move(couplings);
    return op;
}

struct BoundaryData {
    double rho = 0.0;
    Eigen::VectorXd coeffs;
    std::string provenance = "random";
};

/// Unit data spread over one eigenspace with the given in-block coefficients.
inline BoundaryData eigen_data(const OperatorSpec &op, double rho, int level, const Eigen::VectorXd &block) {
    const int off = op.spectrum->level_offset(level);
    const int m = op.spectrum->multiplicities[static_cast<std::size_t>(level)];
    if (block.size() != m || off + m > op.mode_cut)
        throw InvalidArgument("eigen data does not fit the retained modes");
    BoundaryData b;
    b.rho = rho;
    b.coeffs = Eigen::VectorXd::Zero(op.mode_cut);
    b.coeffs.segment(off, m) = block;
    b.provenance = "eigenspace " + std::to_string(level);
    return b;
}

/// Points per octave keeping the cell Peclet number below 0.9 on [r_cone, rho_max].
inline int auto_points_per_octave(const OperatorSpec &op, double rho_max, int min_per_octave = 16) {
    const APProfile &p = op.profile;
    double bmax = 1.0;
    for (double r : geometric_ladder(p.r_cone, std::max(rho_max, 2 * p.r_cone), 400)) {
        Jet ph = p.phi(r);
        double b = std::abs(r * ((p.n - 1) * ph.d1 / ph.v - p.fprime(r).v) - 1.0);
        for (const auto &c : op.couplings)
            b += r * std::abs(c.envelope(r).d1) * c.W.norm();
        bmax = std::max(bmax, b);
    }
    const double h = 1.8 / bmax;
    return std::max(min_per_octave, static_cast<int>(std::ceil(std::log(2.0) / h)));
}

namespace detail {

/// K x K block stored as a diagonal when possible.
struct Block {
    bool diag = true;
    Eigen::VectorXd d;
    Eigen::MatrixXd m;

    Eigen::MatrixXd dense() const { return diag ? Eigen::MatrixXd(d.asDiagonal()) : m; }
    Eigen::VectorXd apply(const Eigen::VectorXd &x) const { return diag ? Eigen::VectorXd(d.cwiseProduct(x)) : Eigen::VectorXd(m * x); }
    Eigen::MatrixXd apply(const Eigen::MatrixXd &x) const {
        return diag ? Eigen::MatrixXd(d.asDiagonal() * x) : Eigen::MatrixXd(m * x);
    }
};

inline Block mul(const Block &a, const Block &b) {
    Block c;
    if (a.diag && b.diag) {
        c.d = a.d.cwiseProduct(b.d);
        return c;
    }
    c.diag = false;
    if (a.diag)
        c.m = a.d.asDiagonal() * b.m;
    else if (b.diag)
        c.m = a.m * b.d.asDiagonal();
    else
        c.m = a.m * b.m;
    return c;
}

inline Block plus(const Block &a, const Block &b) {
    Block c;
    if (a.diag && b.diag) {
        c.d = a.d + b.d;
        return c;
    }
    c.diag = false;
    c.m = a.dense() + b.dense();
    return c;
}

/// -S^{-1} A.
inline Block neg_solve(const Block &S, const Eigen::PartialPivLU<Eigen::MatrixXd> *lu, const Block &A) {
    Block c;
    if (S.diag) {
        if (A.diag) {
            c.d = -A.d.cwiseQuotient(S.d);
        } else {
            c.diag = false;
            c.m = -(S.d.cwiseInverse().asDiagonal() * A.m);
        }
        return c;
    }
    c.diag = false;
    c.m = -lu->solve(A.dense());
    return c;
}

} // namespace detail

namespace detail {

/// One factorized sweep: central differences in s = ln r with a ghost-point Robin closure at
/// r_cone and a backward block Thomas elimination from the Dirichlet end.
class Sweep {
  public:
    Sweep(const OperatorSpec &op, double rho, int P) : op_(&op), P_(P) {
        const APProfile &p = op.profile;
        const double steps = std::log2(rho / p.r_cone) * P_;
        N_ = static_cast<int>(std::lround(steps));
        if (N_ < 3 || std::abs(steps - N_) > 1e-6)
            throw InvalidArgument("ball radius is not a node of the r_cone * 2^(i/P) grid");
        h_ = std::log(2.0) / P_;
        grid_.resize(static_cast<std::size_t>(N_) + 1);
        for (int i = 0; i <= N_; ++i)
            grid_[static_cast<std::size_t>(i)] = p.r_cone * std::exp2(static_cast<double>(i) / P_);
        grid_.back() = rho;
        factor();
    }

    int size() const { return N_; }
    double h() const { return h_; }
    const std::vector<double> &grid() const { return grid_; }
    const Eigen::VectorXd &alpha() const { return alpha_; }

    /// Calls visit(i, U_i) for i = 0..N with U_i of size K x cols.
    template <class V> void sweep(const Eigen::MatrixXd &g, V &&visit) const {
        Eigen::MatrixXd prev = Y_[0].apply(g);
        visit(0, prev);
        for (int i = 1; i < N_; ++i) {
            Eigen::MatrixXd cur = X_[static_cast<std::size_t>(i)].apply(prev) + Y_[static_cast<std::size_t>(i)].apply(g);
            visit(i, cur);
            prev.swap(cur);
        }
        visit(N_, g);
    }

    /// Values and r-derivatives at every node for one boundary vector.
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> field(const Eigen::VectorXd &g) const {
        const int K = op_->mode_cut;
        Eigen::MatrixXd u(K, N_ + 1), du(K, N_ + 1);
        sweep(g, [&](int i, const Eigen::MatrixXd &v) { u.col(i) = v.col(0); });
        du.col(0) = alpha_.cwiseProduct(u.col(0)) / grid_[0];
        for (int i = 1; i < N_; ++i)
            du.col(i) = (u.col(i + 1) - u.col(i - 1)) / (2 * h_ * grid_[static_cast<std::size_t>(i)]);
        du.col(N_) = (3 * u.col(N_) - 4 * u.col(N_ - 1) + u.col(N_ - 2)) / (2 * h_ * grid_.back());
        return {u, du};
    }

  private:
    void factor() {
        const OperatorSpec &op = *op_;
        const APProfile &p = op.profile;
        const int K = op.mode_cut;
        Eigen::VectorXd lam(K);
        alpha_.resize(K);
        for (int k = 0; k < K; ++k) {
            lam[k] = op.spectrum->reference_eigenvalue(k);
            alpha_[k] = indicial_root(p.n, lam[k]);
        }
        const double h = h_, ih2 = 1.0 / (h * h);
        X_.assign(static_cast<std::size_t>(N_), Block{});
        Y_.assign(static_cast<std::size_t>(N_), Block{});
        auto rows = [&](int i, Block &L, Block &D, Block &U) {
            const double r = grid_[static_cast<std::size_t>(i)];
            Jet ph = p.phi(r);
            const double b = r * ((p.n - 1) * ph.d1 / ph.v - p.fprime(r).v) - 1.0;
            const double r2phi = r * r / (ph.v * ph.v);
            bool active = false;
            Eigen::MatrixXd Bc = Eigen::MatrixXd::Zero(K, K), Cc = Eigen::MatrixXd::Zero(K, K);
            for (const auto &c : op.couplings) {
                Jet e = c.envelope(r);
                if (e.v == 0.0 && e.d1 == 0.0)
                    continue;
                active = true;
                Bc -= r * e.d1 * c.W;
                Cc += r2phi * e.v * c.T;
            }
            Eigen::VectorXd C = r2phi * lam;
            if (i == 0) {
                L = Block{true, Eigen::VectorXd::Zero(K), {}};
                U = Block{true, Eigen::VectorXd::Constant(K, 2 * ih2), {}};
                D = Block{true, (-2 * ih2 - C.array() + alpha_.array() * (b - 2.0 / h)).matrix(), {}};
                return;
            }
            if (!active) {
                L = Block{true, Eigen::VectorXd::Constant(K, ih2 - b / (2 * h)), {}};
                U = Block{true, Eigen::VectorXd::Constant(K, ih2 + b / (2 * h)), {}};
                D = Block{true, (-2 * ih2 - C.array()).matrix(), {}};
                return;
            }
            Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K, K);
            Eigen::MatrixXd B = b * I + Bc;
            L = Block{false, {}, ih2 * I - B / (2 * h)};
            U = Block{false, {}, ih2 * I + B / (2 * h)};
            D = Block{false, {}, Eigen::MatrixXd((-2 * ih2 - C.array()).matrix().asDiagonal()) - Cc};
        };
        Block L, D, U;
        for (int i = N_ - 1; i >= 0; --i) {
            rows(i, L, D, U);
            Block S = i == N_ - 1 ? D : plus(D, mul(U, X_[static_cast<std::size_t>(i + 1)]));
            Eigen::PartialPivLU<Eigen::MatrixXd> lu;
            if (S.diag) {
                if ((S.d.array() == 0.0).any())
                    throw SolverFailure("singular pivot in Dirichlet sweep");
            } else {
                lu.compute(S.m);
                if (!(std::abs(lu.determinant()) > 0.0))
                    throw SolverFailure("singular block in Dirichlet sweep");
            }
            X_[static_cast<std::size_t>(i)] = i == 0 ? Block{true, Eigen::VectorXd::Zero(K), {}} : neg_solve(S, &lu, L);
            Block UY = i == N_ - 1 ? U : mul(U, Y_[static_cast<std::size_t>(i + 1)]);
            Y_[static_cast<std::size_t>(i)] = neg_solve(S, &lu, UY);
            if (!Y_[static_cast<std::size_t>(i)].dense().allFinite())
                throw SolverFailure("non-finite factor in Dirichlet sweep");
        }
    }

    const OperatorSpec *op_;
    int P_;
    int N_ = 0;
    double h_ = 0.0;
    std::vector<double> grid_;
    Eigen::VectorXd alpha_;
    std::vector<Block> X_, Y_;
};

} // namespace detail

/// Factorized Dirichlet problem on the ball of radius rho. Second-order sweeps at P and 2P
/// points per octave are combined by Richardson extrapolation on the coarse nodes.
class DirichletSolver {
  public:
    DirichletSolver(const OperatorSpec &op, double rho, int points_per_octave, bool richardson = true)
        : op_(std::make_shared<const OperatorSpec>(op)), rho_(rho), P_(points_per_octave) {
        const APProfile &p = op.profile;
        if (P_ < 1)
            throw InvalidArgument("points per octave must be positive");
        if (P_ / std::log10(2.0) < 48.0 - 1e-9)
            throw InvalidArgument("grid density below 48 points per decade");
        for (const auto &c : op.couplings) {
            if (rho > c.s1 && rho < c.s2)
                throw InvalidArgument("boundary radius inside a coupling support");
            if (rho < c.s2 + (p.r_asym - p.r_cone))
                throw InvalidArgument("boundary radius must exceed coupling support plus one blend width");
        }
        coarse_ = std::make_unique<detail::Sweep>(*op_, rho, P_);
        if (richardson)
            fine_ = std::make_unique<detail::Sweep>(*op_, rho, 2 * P_);
    }

    const std::vector<double> &grid() const { return coarse_->grid(); }
    double rho() const { return rho_; }
    int points_per_octave() const { return P_; }
    const OperatorSpec &op() const { return *op_; }

    /// Node index of a radius on this grid, or throws.
    std::size_t node(double r) const {
        const double x = std::log2(r / op_->profile.r_cone) * P_;
        const long i = std::lround(x);
        if (i < 0 || i > coarse_->size() || std::abs(x - static_cast<double>(i)) > 1e-6)
            throw InvalidArgument("radius is not a grid node");
        return static_cast<std::size_t>(i);
    }

    /// Values at selected nodes, one column per boundary vector (a column of g).
    std::vector<Eigen::MatrixXd> values_at(const Eigen::MatrixXd &g, const std::vector<std::size_t> &nodes) const {
        if (g.rows() != op_->mode_cut)
            throw InvalidArgument("boundary data size differs from mode cut");
        std::vector<Eigen::MatrixXd> res(nodes.size());
        coarse_->sweep(g, [&](int i, const Eigen::MatrixXd &v) {
            for (std::size_t q = 0; q < nodes.size(); ++q)
                if (nodes[q] == static_cast<std::size_t>(i))
                    res[q] = v;
        });
        if (fine_) {
            fine_->sweep(g, [&](int i, const Eigen::MatrixXd &v) {
                if (i % 2)
                    return;
                for (std::size_t q = 0; q < nodes.size(); ++q)
                    if (2 * nodes[q] == static_cast<std::size_t>(i))
                        res[q] = (4.0 * v - res[q]) / 3.0;
            });
        }
        return res;
    }

    ModeField solve(const BoundaryData &b) const {
        if (std::abs(b.rho - rho_) > 1e-12 * rho_)
            throw InvalidArgument("boundary radius differs from the factorized ball");
        if (b.coeffs.size() != op_->mode_cut)
            throw InvalidArgument("boundary data size differs from mode cut");
        return solve(b.coeffs);
    }

    ModeField solve(const Eigen::VectorXd &g) const {
        ModeField f;
        f.spectrum = op_->spectrum;
        f.grid = coarse_->grid();
        std::tie(f.u, f.du) = coarse_->field(g);
        if (fine_) {
            auto [uf, duf] = fine_->field(g);
            for (Eigen::Index i = 0; i < f.u.cols(); ++i) {
                f.u.col(i) = (4.0 * uf.col(2 * i) - f.u.col(i)) / 3.0;
                f.du.col(i) = (4.0 * duf.col(2 * i) - f.du.col(i)) / 3.0;
            }
        }
        f.description = "dirichlet-solve";
        return f;
    }

  private:
    std::shared_ptr<const OperatorSpec> op_;
    double rho_;
    int P_;
    std::unique_ptr<detail::Sweep> coarse_, fine_;
};

/// Factorizations keyed by ball radius, shared by a run with a fixed grid density.
class SolverCache {
  public:
    SolverCache(OperatorSpec op, int points_per_octave) : op_(std::move(op)), P_(points_per_octave) {}

    const DirichletSolver &at(double rho) {
        std::lock_guard<std::mutex> lock(mu_);
        for (auto &e : entries_)
            if (std::abs(e->rho() - rho) <= 1e-12 * rho)
                return *e;
        entries_.push_back(std::make_unique<DirichletSolver>(op_, rho, P_));
        return *entries_.back();
    }
    const OperatorSpec &op() const { return op_; }
    int points_per_octave() const { return P_; }

  private:
    OperatorSpec op_;
    int P_;
    std::mutex mu_;
    std::vector<std::unique_ptr<DirichletSolver>> entries_;
};

inline ModeField solve(const OperatorSpec &op, const BoundaryData &b, int points_per_octave = 0) {
    if (b.coeffs.size() != op.mode_cut)
        throw InvalidArgument("boundary data size differs from mode cut");
    if (!b.coeffs.allFinite())
        throw InvalidArgument("boundary data must be finite");
    const int P = points_per_octave > 0 ? points_per_octave : auto_points_per_octave(op, b.rho);
    return DirichletSolver(op, b.rho, P).solve(b);
}

// ---------------------------------------------------------------------------
// Three circles.

struct ModelThreeCircles {
    bool first = false;
    bool second = false;
    double lhs_first = 0.0;
    double lhs_second = 0.0;
    double rhs = 0.0;
};

/// Both model inequalities for coefficients a over flat modes (a[0] is the constant mode).
inline ModelThreeCircles model_three_circles(const std::vector<double> &a, double d, const Spectrum &spec) {
    if (!(d > 0.0))
        throw InvalidArgument("model_three_circles needs d > 0");
    if (a.empty() || static_cast<int>(a.size()) > spec.mode_count())
        throw InvalidArgument("coefficient vector does not fit the spectrum");
    ModelThreeCircles m;
    for (std::size_t k = 1; k < a.size(); ++k) {
        const double lam = spec.mode_eigenvalue(static_cast<int>(k));
        const double f = 1.0 - std::exp2(2 * d - 2 * lam);
        m.lhs_first += a[k] * a[k] * f;
        m.lhs_second += std::exp2(-2 * lam) * a[k] * a[k] * f;
    }
    m.rhs = a[0] * a[0] * (std::exp2(2 * d) - 1.0);
    m.first = m.lhs_first <= m.rhs;
    m.second = m.lhs_second <= m.rhs;
    return m;
}

/// Equality cases of the second inequality: all zero, or a_1 = 0 with a supported on the level lambda = d.
inline bool three_circles_rigid(const std::vector<double> &a, double d, const Spectrum &spec, double tol = 1e-12) {
    if (a[0] != 0.0)
        return false;
    for (std::size_t k = 1; k < a.size(); ++k)
        if (a[k] != 0.0 && std::abs(spec.mode_eigenvalue(static_cast<int>(k)) - d) > tol)
            return false;
    return true;
}

struct ViolationRow {
    double rho = 0.0;
    int trials = 0;
    int hypothesis = 0;
    int violations = 0;
};

struct ViolationReport {
    double d = 0.0;
    std::vector<ViolationRow> rows;
    double smallest_clean_radius = std::numeric_limits<double>::infinity();

    int violations_from(double rho_min) const {
        int v = 0;
        for (const auto &r : rows)
            if (r.rho >= rho_min * (1 - 1e-12))
                v += r.violations;
        return v;
    }
    std::string csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "rho,trials,hypothesis_true,violations\n";
        for (const auto &r : rows)
            os << r.rho << ',' << r.trials << ',' << r.hypothesis << ',' << r.violations << '\n';
        return os.str();
    }
};

namespace detail {
inline double level_norm2(const APProfile &p, double r, const Eigen::VectorXd &u) {
    return detail::level_weight(p, r) * u.squaredNorm();
}
} // namespace detail

/// Per radius rho: solve on B_rho with each trial's fixed random data and test
/// I(rho) <= 4^d I(rho/2)  =>  I(rho/2) <= 4^d I(rho/4).
inline ViolationReport three_circles_battery(SolverCache &cache, double d, const std::vector<double> &ladder, int trials,
                                             std::uint64_t seed, int workers = 1, double min_radius = 0.0) {
    const OperatorSpec &op = cache.op();
    if (!(d > 0.0))
        throw InvalidArgument("three circles needs d > 0");
    if (op.spectrum->level_of(d, 1e-9) >= 0)
        throw InvalidArgument("three circles needs d outside the spectrum");
    const int K = op.mode_cut;
    Eigen::MatrixXd G(K, trials);
    for (int t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        auto v = gaussian_vector(rng, static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            G(k, t) = v[static_cast<std::size_t>(k)];
    }
    ViolationReport rep;
    rep.d = d;
    const double q = std::exp2(2 * d);
    for (double rho : ladder) {
        if (rho < min_radius)
            continue;
        const DirichletSolver &s = cache.at(rho);
        std::vector<std::size_t> nodes{s.node(rho), s.node(rho / 2), s.node(rho / 4)};
        std::vector<int> hyp(static_cast<std::size_t>(trials)), vio(static_cast<std::size_t>(trials));
        const int chunks = std::max(1, std::min(workers, trials));
        parallel_for(chunks, workers, [&](int c) {
            const int lo = trials * c / chunks, hi = trials * (c + 1) / chunks;
            if (lo == hi)
                return;
            auto vals = s.values_at(G.middleCols(lo, hi - lo), nodes);
            for (int t = lo; t < hi; ++t) {
                const double I0 = detail::level_norm2(op.profile, rho, vals[0].col(t - lo));
                const double I1 = detail::level_norm2(op.profile, rho / 2, vals[1].col(t - lo));
                const double I2 = detail::level_norm2(op.profile, rho / 4, vals[2].col(t - lo));
                const bool h = I0 <= q * I1;
                hyp[static_cast<std::size_t>(t)] = h;
                vio[static_cast<std::size_t>(t)] = h && !(I1 <= q * I2);
            }
        });
        ViolationRow row;
        row.rho = rho;
        row.trials = trials;
        for (int t = 0; t < trials; ++t) {
            row.hypothesis += hyp[static_cast<std::size_t>(t)];
            row.violations += vio[static_cast<std::size_t>(t)];
        }
        rep.rows.push_back(row);
    }
    for (auto it = rep.rows.rbegin(); it != rep.rows.rend(); ++it) {
        if (it->violations > 0)
            break;
        rep.smallest_clean_radius = it->rho;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Preservation of almost orthogonality.

struct PreservationResult {
    double drift = 0.0;
    double delta = 0.0;
    double d = 0.0;
    double shape = 0.0; // delta * (rho2/rho1)^{4d+1}
};

/// Drift of the normalized inner product from rho1 to rho2 after transporting by the I-ratio of v.
inline PreservationResult preservation_experiment(const ModeField &u, const ModeField &v, const APProfile &p,
                                                  double rho1, double rho2) {
    if (!(rho1 > 0.0) || !(rho2 > rho1))
        throw InvalidArgument("preservation needs 0 < rho1 < rho2");
    PreservationResult r;
    r.delta = std::sqrt(std::max(0.0, separation_defect(v, p, rho1, rho2)));
    std::vector<double> window{rho1};
    for (double x : v.grid)
        if (x > rho1 && x < rho2)
            window.push_back(x);
    window.push_back(rho2);
    FrequencyTrace tv = trace(v, p, window);
    r.d = *std::max_element(tv.U.begin(), tv.U.end());
    const double Iu1 = level_inner(u, u, p, rho1), Iu2 = level_inner(u, u, p, rho2);
    const double Iv1 = level_inner(v, v, p, rho1), Iv2 = level_inner(v, v, p, rho2);
    if (!(Iu1 > 0.0) || !(Iu2 > 0.0) || !(Iv1 > 0.0) || !(Iv2 > 0.0))
        throw DegenerateLevel("zero norm in preservation window");
    const double J1 = level_inner(u, v, p, rho1), J2 = level_inner(u, v, p, rho2);
    r.drift = std::abs(J2 - Iv2 / Iv1 * J1) / std::sqrt(Iu2 * Iv2);
    r.shape = r.delta * std::pow(rho2 / rho1, 4 * r.d + 1);
    return r;
}

// ---------------------------------------------------------------------------
// Liouville battery.

struct LiouvilleReport {
    double lambda2 = 0.0;
    std::vector<double> min_U; // per trial; NaN for vacuous trials
    int vacuous = 0;
    double overall_min = std::numeric_limits<double>::infinity();

    bool passed(double margin = 0.05) const { return overall_min >= lambda2 - margin; }
    std::string csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "trial,min_U\n";
        for (std::size_t t = 0; t < min_U.size(); ++t)
            os << t << ',' << min_U[t] << '\n';
        return os.str();
    }
};

/// Random data on the ball of radius `ball`; the constant projection at far_ladder.back() is
/// removed and U of the remainder is tracked along the far ladder.
inline LiouvilleReport liouville_battery(SolverCache &cache, int trials, std::uint64_t seed, double ball,
                                         const std::vector<double> &far_ladder, int workers = 1) {
    if (trials < 1)
        throw InvalidArgument("liouville battery needs trials >= 1");
    const OperatorSpec &op = cache.op();
    const int K = op.mode_cut;
    if (far_ladder.empty())
        throw InvalidArgument("liouville battery needs a far ladder");
    const DirichletSolver &s = cache.at(ball);
    std::vector<std::size_t> nodes;
    for (double r : far_ladder) {
        std::size_t i = s.node(r);
        nodes.push_back(i);
        if (i == 0 || i + 1 > s.grid().size() - 1)
            throw InvalidArgument("far ladder must sit strictly inside the ball");
    }
    LiouvilleReport rep;
    rep.lambda2 = op.spectrum->eigenvalues.at(1);
    rep.min_U.assign(static_cast<std::size_t>(trials), std::nan(""));
    parallel_for(trials, workers, [&](int t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        auto gv = gaussian_vector(rng, static_cast<std::size_t>(K));
        Eigen::VectorXd g = Eigen::Map<Eigen::VectorXd>(gv.data(), K);
        ModeField f = s.solve(g);
        const double c = f.u(0, static_cast<Eigen::Index>(nodes.back()));
        f.u.row(0).array() -= c;
        double mn = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            const auto j = static_cast<Eigen::Index>(nodes[q]);
            const double S = f.u.col(j).squaredNorm();
            if (!(S > 0.0))
                return;
            mn = std::min(mn, f.grid[nodes[q]] * f.u.col(j).dot(f.du.col(j)) / S);
        }
        rep.min_U[static_cast<std::size_t>(t)] = mn;
    });
    for (double m : rep.min_U) {
        if (std::isnan(m))
            ++rep.vacuous;
        else
            rep.overall_min = std::min(rep.overall_min, m);
    }
    return rep;
}

} // namespace aplab

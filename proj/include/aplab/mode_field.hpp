#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cross_section.hpp"
#include "errors.hpp"
#include "numeric.hpp"
#include "radial.hpp"

namespace aplab {

/// Function on the manifold stored as radial curves of its cross-section mode coefficients.
struct ModeField {
    std::shared_ptr<const Spectrum> spectrum;
    std::vector<double> grid;
    Eigen::MatrixXd u;  // modes x nodes
    Eigen::MatrixXd du; // radial derivatives
    std::string description;

    int modes() const { return static_cast<int>(u.rows()); }
    std::size_t size() const { return grid.size(); }
    double r_min() const { return grid.front(); }
    double r_max() const { return grid.back(); }

    /// Mode coefficients and their derivatives at radius r (exact at nodes, cubic Hermite between).
    std::pair<Eigen::VectorXd, Eigen::VectorXd> sample(double r) const {
        std::size_t i = bracket(grid, r);
        for (std::size_t k : {i, i + 1})
            if (std::abs(r - grid[k]) <= 1e-13 * grid[k])
                return {u.col(k), du.col(k)};
        Eigen::VectorXd a(modes()), b(modes());
        for (int m = 0; m < modes(); ++m) {
            auto [v, d] = hermite(grid[i], grid[i + 1], u(m, i), u(m, i + 1), du(m, i), du(m, i + 1), r);
            a[m] = v;
            b[m] = d;
        }
        return {a, b};
    }

    /// Prefix of the field on [r_min, r_end]; r_end must be a node.
    ModeField restrict_to(double r_end) const {
        std::size_t i = bracket(grid, r_end);
        std::size_t last = std::abs(grid[i + 1] - r_end) <= 1e-12 * r_end ? i + 1 : i;
        if (std::abs(grid[last] - r_end) > 1e-12 * r_end)
            throw InvalidArgument("restriction radius is not a grid node");
        ModeField f;
        f.spectrum = spectrum;
        f.grid.assign(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(last + 1));
        f.u = u.leftCols(static_cast<Eigen::Index>(last + 1));
        f.du = du.leftCols(static_cast<Eigen::Index>(last + 1));
        f.description = description;
        return f;
    }
};

inline ModeField zero_field(std::shared_ptr<const Spectrum> spec, int modes, std::vector<double> grid,
                            std::string description) {
    ModeField f;
    f.spectrum = std::move(spec);
    f.grid = std::move(grid);
    f.u = Eigen::MatrixXd::Zero(modes, static_cast<Eigen::Index>(f.grid.size()));
    f.du = f.u;
    f.description = std::move(description);
    return f;
}

/// Single-mode field R(r) Theta_mode; the mode eigenvalue must match the solution.
inline ModeField separable_field(const RadialSolution &sol, std::shared_ptr<const Spectrum> spec, int mode,
                                 int modes = -1) {
    if (modes < 0)
        modes = spec->mode_count();
    if (mode < 0 || mode >= modes)
        throw OutOfRange("mode id outside retained modes");
    const double lam = spec->mode_eigenvalue(mode);
    if (std::abs(lam - sol.lambda) > 1e-9 * std::max(1.0, lam))
        throw InvalidArgument("mode eigenvalue does not match the radial solution");
    ModeField f = zero_field(std::move(spec), modes, sol.grid, "separable");
    for (std::size_t j = 0; j < sol.size(); ++j) {
        f.u(mode, static_cast<Eigen::Index>(j)) = sol.value(j);
        f.du(mode, static_cast<Eigen::Index>(j)) = sol.derivative(j);
    }
    return f;
}

inline bool same_layout(const ModeField &a, const ModeField &b) {
    if (a.modes() != b.modes() || a.grid != b.grid)
        return false;
    if (a.spectrum == b.spectrum)
        return true;
    return a.spectrum && b.spectrum && a.spectrum->eigenvalues == b.spectrum->eigenvalues &&
           a.spectrum->multiplicities == b.spectrum->multiplicities && a.spectrum->scale == b.spectrum->scale;
}

inline ModeField add(const std::vector<ModeField> &fields, const std::vector<double> &weights) {
    if (fields.empty() || fields.size() != weights.size())
        throw InvalidArgument("add needs matching non-empty field and weight lists");
    ModeField out = fields.front();
    out.u *= weights[0];
    out.du *= weights[0];
    for (std::size_t i = 1; i < fields.size(); ++i) {
        if (!same_layout(out, fields[i]))
            throw InvalidArgument("add needs fields on the same grid and spectrum");
        out.u += weights[i] * fields[i].u;
        out.du += weights[i] * fields[i].du;
    }
    out.description = fields.size() == 1 ? fields[0].description : "sum";
    return out;
}

} // namespace aplab

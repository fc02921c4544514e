#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "construction.hpp"
#include "cross_section.hpp"
#include "dirichlet.hpp"
#include "frequency.hpp"
#include "geometry.hpp"
#include "mode_field.hpp"
#include "numeric.hpp"
#include "radial.hpp"

namespace aplab::acceptance {

// Pinned thresholds.
inline constexpr double kGrowthTol = 5e-3;
inline constexpr double kRadialSeconds = 1.0;
inline constexpr double kIndicialTol = 1e-12;
inline constexpr double kLgExponent = 1.9;
inline constexpr double kConvergenceLo = 3.5;
inline constexpr double kConvergenceHi = 4.5;
inline constexpr double kCsMixedFloor = -1e-10;
inline constexpr double kCsSingleTol = 1e-10;
inline constexpr int kCsFields = 1000;
inline constexpr int kModelSamples = 100000;
inline constexpr double kModelSeconds = 5.0;
inline constexpr int kBatteryTrials = 200;
inline constexpr double kBatterySeconds = 120.0;
inline constexpr double kFarAngle = 0.01;
inline constexpr double kAngleR2 = 0.95;
inline constexpr double kBasisSeconds = 300.0;
inline constexpr double kUQRate = 1.0 / 3.0;
inline constexpr int kLiouvilleTrials = 100;
inline constexpr double kLiouvilleMargin = 0.05;
inline constexpr double kFlowConstant = 5.0;
inline constexpr double kFlowDerivativeTol = 1e-6;
inline constexpr int kPreservationPairs = 50;
inline constexpr double kZeroDrift = 1e-8;
inline constexpr int kMeanValueTrials = 20;
inline constexpr double kMeanValueSlope = 0.05;

struct Result {
    int id = 0;
    std::string tag;
    bool pass = false;
    std::string measured;
    double seconds = 0.0;
    std::vector<std::pair<std::string, std::string>> artifacts;

    std::string line() const {
        std::ostringstream os;
        os << (pass ? "[PASS] " : "[FAIL] ") << id << ". " << tag << ": " << measured;
        os.precision(3);
        os << " (" << std::fixed << seconds << " s)";
        return os.str();
    }
};

namespace detail {

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline std::string num(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

inline int points_per_octave(const RunConfig &cfg, const OperatorSpec &op, double rho_max) {
    return cfg.dirichlet_points_per_octave > 0 ? cfg.dirichlet_points_per_octave : auto_points_per_octave(op, rho_max);
}

inline std::vector<double> dyadic(int lo, int hi) { return dyadic_ladder(lo, hi); }

inline Eigen::VectorXd gaussian(std::uint64_t seed, std::uint64_t stream, int K) {
    auto rng = trial_rng(seed, stream);
    auto v = gaussian_vector(rng, static_cast<std::size_t>(K));
    return Eigen::Map<Eigen::VectorXd>(v.data(), K);
}

} // namespace detail

/// Growth exponents of the radial solutions at lambda = 1, 3, 6.
inline Result radial_growth(const RunConfig &cfg) {
    detail::Stopwatch sw;
    Result r{1, "radial growth exponents"};
    APProfile p = make_profile(cfg);
    r.pass = true;
    std::ostringstream m, csv;
    csv << "lambda,growth_exponent,U_end\n";
    for (double lam : {1.0, 3.0, 6.0}) {
        detail::Stopwatch t;
        RadialSolution s = solve_radial(p, lam, 1e5, {cfg.radial_points_per_decade});
        const double sec = t.seconds();
        const bool ok = std::abs(s.growth_exponent - lam) < kGrowthTol && std::abs(s.growth_exponent - s.U_end) < kGrowthTol &&
                        sec < kRadialSeconds;
        r.pass = r.pass && ok;
        m << "lambda " << lam << " -> " << detail::num(s.growth_exponent, 6) << " (U " << detail::num(s.U_end, 6) << ") ";
        csv << lam << ',' << detail::num(s.growth_exponent, 17) << ',' << detail::num(s.U_end, 17) << '\n';
    }
    r.measured = m.str();
    r.artifacts.push_back({"criterion01_radial.csv", csv.str()});
    r.seconds = sw.seconds();
    return r;
}

/// Indicial residuals and Liouville-Green decay exponents.
inline Result indicial_and_lg(const RunConfig &cfg) {
    detail::Stopwatch sw;
    Result r{2, "indicial roots and Liouville-Green structure"};
    APProfile p = make_profile(cfg);
    auto spec = make_spectrum(cfg);
    double worst = 0.0;
    for (int l = 0; l < spec->levels(); ++l) {
        const double lr = spec->scale * spec->eigenvalues[static_cast<std::size_t>(l)];
        const double a = indicial_root(p.n, lr);
        worst = std::max(worst, std::abs(a * (a + p.n - 2) - lr));
    }
    double min_exp = std::numeric_limits<double>::infinity();
    const auto ladder = geometric_ladder(1e3, 1e5, 8);
    for (double lam : {1.0, 3.0, 6.0}) {
        std::vector<double> a, b;
        for (double x : ladder) {
            auto [u, v] = lg_exponent_check(p, lam, x);
            a.push_back(u);
            b.push_back(v);
        }
        for (const auto &y : {a, b}) {
            PowerFit f = fit_power(ladder, y);
            min_exp = std::min(min_exp, f.exact ? std::numeric_limits<double>::infinity() : f.tau);
        }
    }
    r.pass = worst < kIndicialTol && min_exp >= kLgExponent;
    r.measured = "max indicial residual " + detail::num(worst) + ", min LG exponent " + detail::num(min_exp);
    r.seconds = sw.seconds();
    return r;
}

/// Second-order convergence of the frequency identities and the Cauchy-Schwarz gap.
inline Result frequency_identities(const RunConfig &cfg) {
    detail::Stopwatch sw;
    Result r{3, "frequency identities"};
    APProfile p = make_profile(cfg);
    auto spec = make_spectrum(cfg);
    const int K = spec->mode_count();
    std::vector<RadialSolution> sols;
    for (int l = 0; l < spec->levels(); ++l)
        sols.push_back(solve_radial(p, spec->eigenvalues[static_cast<std::size_t>(l)], 1e5, {192.0}));
    auto mode_field = [&](int k) { return separable_field(sols[static_cast<std::size_t>(spec->mode(k).level)], spec, k, K); };

    // Convergence study on a two-level field, ladders taken from grid nodes.
    ModeField mixed = add({mode_field(1), mode_field(4)}, {1.0, 0.5});
    std::vector<double> coarse, fine;
    for (std::size_t j = 0; j < mixed.grid.size(); ++j) {
        const double x = mixed.grid[j];
        if (x < 4.0 || x > 40.0)
            continue;
        if (j % 2 == 0)
            fine.push_back(x);
        if (j % 4 == 0)
            coarse.push_back(x);
    }
    auto ratio = [&](auto fn) {
        ResidualSeries c = fn(trace(mixed, p, coarse)), f = fn(trace(mixed, p, fine));
        double mc = 0.0, mf = 0.0;
        for (std::size_t i = 0; i < c.rho.size(); ++i)
            for (std::size_t j = 0; j < f.rho.size(); ++j)
                if (std::abs(c.rho[i] - f.rho[j]) <= 1e-12 * c.rho[i]) {
                    mc = std::max(mc, std::abs(c.value[i]));
                    mf = std::max(mf, std::abs(f.value[j]));
                }
        return mc / mf;
    };
    const double ode_ratio = ratio(frequency_ode_residual);
    const double ilog_ratio = ratio(i_log_derivative_check);

    const auto ladder = geometric_ladder(1.0, 1e4, 8);
    double mixed_min = std::numeric_limits<double>::infinity(), single_max = 0.0;
    for (int t = 0; t < kCsFields; ++t) {
        Eigen::VectorXd c = detail::gaussian(cfg.seed, 3000 + static_cast<std::uint64_t>(t), K);
        std::vector<ModeField> fs;
        std::vector<double> ws;
        for (int k = 0; k < K; ++k) {
            fs.push_back(mode_field(k));
            ws.push_back(c[k]);
        }
        FrequencyTrace tr = trace(add(fs, ws), p, ladder);
        for (std::size_t i = 0; i < tr.size(); ++i)
            mixed_min = std::min(mixed_min, tr.cs_gap(i));
    }
    for (int k = 0; k < K; ++k) {
        if (spec->mode_eigenvalue(k) == 0.0)
            continue;
        FrequencyTrace tr = trace(mode_field(k), p, ladder);
        for (std::size_t i = 0; i < tr.size(); ++i)
            single_max = std::max(single_max, std::abs(tr.cs_gap(i)));
    }
    auto in = [](double x) { return x >= kConvergenceLo && x <= kConvergenceHi; };
    r.pass = in(ode_ratio) && in(ilog_ratio) && mixed_min >= kCsMixedFloor && single_max < kCsSingleTol;
    r.measured = "ODE residual ratio " + detail::num(ode_ratio) + ", I-log ratio " + detail::num(ilog_ratio) +
                 ", min mixed CS gap " + detail::num(mixed_min) + ", max single-mode |gap| " + detail::num(single_max);
    r.seconds = sw.seconds();
    return r;
}

/// Model three-circles implication on random samples and its equality cases.
inline Result model_three_circles_check(const RunConfig &cfg) {
    detail::Stopwatch sw;
    Result r{4, "model three circles"};
    auto spec = make_spectrum(cfg);
    const int K = spec->mode_count();
    auto rng = trial_rng(cfg.seed, 4000);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.01, spec->eigenvalues.back() + 1.0);
    int counter = 0, first_true = 0;
    for (int s = 0; s < kModelSamples; ++s) {
        std::vector<double> a(static_cast<std::size_t>(K));
        for (auto &x : a)
            x = nd(rng);
        double d = ud(rng);
        while (spec->level_of(d, 1e-9) >= 0)
            d = ud(rng);
        auto m = model_three_circles(a, d, *spec);
        first_true += m.first;
        counter += m.first && !m.second;
    }
    int rigid_ok = 0, rigid_cases = 0;
    for (int l = 1; l < spec->levels(); ++l) {
        const double d = spec->eigenvalues[static_cast<std::size_t>(l)];
        std::vector<double> a(static_cast<std::size_t>(K), 0.0);
        const int off = spec->level_offset(l);
        for (int j = 0; j < spec->multiplicities[static_cast<std::size_t>(l)]; ++j)
            a[static_cast<std::size_t>(off + j)] = nd(rng);
        auto m = model_three_circles(a, d, *spec);
        ++rigid_cases;
        rigid_ok += m.first && m.second && m.lhs_first == m.rhs && m.lhs_second == m.rhs && three_circles_rigid(a, d, *spec);
    }
    const double sec = sw.seconds();
    r.pass = counter == 0 && rigid_ok == rigid_cases && sec < kModelSeconds;
    r.measured = std::to_string(counter) + " counterexamples in " + std::to_string(kModelSamples) + " samples (" +
                 std::to_string(first_true) + " with the hypothesis true), rigidity " + std::to_string(rigid_ok) + "/" +
                 std::to_string(rigid_cases);
    r.seconds = sec;
    return r;
}

/// Three-circles battery on the separable and coupled operators.
inline Result three_circles(const RunConfig &cfg) {
    detail::Stopwatch sw;
    Result r{5, "three circles battery"};
    const auto ladder = detail::dyadic(cfg.dyadic_min, cfg.dyadic_max);
    const int workers = run_workers(cfg);
    r.pass = true;
    std::ostringstream m;
    for (bool coupled : {false, true}) {
        OperatorSpec op = make_run_operator(cfg, coupled);
        SolverCache cache(op, detail::points_per_octave(cfg, op, ladder.back()));
        const std::vector<double> ds = coupled ? std::vector<double>{2.0} : cfg.three_circles_d;
        const double clean = std::exp2(coupled ? cfg.clean_from_coupled : cfg.clean_from_separable);
        for (double d : ds) {
            ViolationReport rep = three_circles_battery(cache, d, ladder, kBatteryTrials, cfg.seed, workers);
            const int v = rep.violations_from(clean);
            r.pass = r.pass && v == 0;
            m << (coupled ? "coupled" : "separable") << " d=" << d << ": " << v << " violations >= " << clean
              << " (clean from " << rep.smallest_clean_radius << "); ";
            r.artifacts.push_back({std::string("criterion05_") + (coupled ? "coupled" : "separable") + "_d" +
                                       detail::num(d) + ".csv",
                                   rep.csv()});
        }
    }
    r.seconds = sw.seconds();
    r.pass = r.pass && r.seconds < kBatterySeconds;
    r.measured = m.str();
    return r;
}

struct BasisRuns {
    std::vector<std::pair<std::string, HarmonicBasis>> top; // d = cfg.basis_d per operator
    std::vector<std::string> lines;
    bool cardinality_ok = true;
    double seconds_top = 0.0;
};

inline BasisOptions basis_options(const RunConfig &cfg) {
    BasisOptions o;
    o.i_first = cfg.basis_i_first;
    o.i_last = cfg.basis_i_last;
    o.rho_bar = cfg.basis_rho_bar;
    o.far_radius = std::exp2(cfg.dyadic_max);
    o.cauchy_tol = cfg.tol_cauchy;
    o.ladder = detail::dyadic(cfg.dyadic_min, cfg.dyadic_max);
    o.seed = cfg.seed;
    return o;
}

inline BasisRuns run_bases(const RunConfig &cfg) {
    BasisRuns out;
    const BasisOptions opt = basis_options(cfg);
    for (bool coupled : {false, true}) {
        OperatorSpec op = make_run_operator(cfg, coupled);
        SolverCache cache(op, detail::points_per_octave(cfg, op, std::exp2(opt.i_last)));
        for (double d : {0.5, 1.0, cfg.basis_d}) {
            detail::Stopwatch t;
            HarmonicBasis B = build_basis(cache, d, opt);
            const int want = dimension_count(*op.spectrum, d);
            out.cardinality_ok = out.cardinality_ok && static_cast<int>(B.size()) == want;
            out.lines.push_back(std::string(coupled ? "coupled" : "separable") + " d=" + detail::num(d) + ": " +
                                std::to_string(B.size()) + "/" + std::to_string(want));
            if (d == cfg.basis_d) {
                out.seconds_top = std::max(out.seconds_top, t.seconds());
                out.top.push_back({coupled ? "coupled" : "separable", std::move(B)});
            }
        }
    }
    return out;
}

/// Basis cardinalities, far Gram angles and angle-decay fits.
inline Result basis(const RunConfig &cfg, const BasisRuns &runs) {
    Result r{6, "dimension count and asymptotically orthogonal basis"};
    double max_angle = 0.0;
    int bad_fits = 0, pairs = 0;
    for (const auto &[name, B] : runs.top) {
        max_angle = std::max(max_angle, B.max_far_angle());
        for (const auto &f : B.fits) {
            ++pairs;
            if (!f.fit.decays(0.0, kAngleR2))
                ++bad_fits;
        }
        r.artifacts.push_back({"criterion06_" + name + "_pairs.csv", B.csv()});
        r.artifacts.push_back({"criterion06_" + name + "_members.csv", B.members_csv()});
    }
    std::ostringstream m;
    for (const auto &l : runs.lines)
        m << l << "; ";
    m << "max far angle " << detail::num(max_angle) << ", pairs without decaying fit " << bad_fits << "/" << pairs;
    r.pass = runs.cardinality_ok && max_angle < kFarAngle && bad_fits == 0 && runs.seconds_top < kBasisSeconds;
    r.measured = m.str();
    return r;
}

/// Pinching fits for every non-constant basis member.
inline Result pinching(const RunConfig &cfg, const BasisRuns &runs) {
    Result r{7, "pinching of basis members"};
    const auto ladder = detail::dyadic(cfg.dyadic_min, cfg.dyadic_max);
    int fields = 0, failed = 0;
    double worst_uq = std::numeric_limits<double>::infinity();
    std::ostringstream csv;
    csv << "operator,member,quantity,C,tau,r2,exact,pass\n";
    for (const auto &[name, B] : runs.top) {
        for (std::size_t i = 0; i < B.size(); ++i) {
            if (B.levels[i] == 0)
                continue;
            ++fields;
            PinchReport rep = pinching_report(B.fields[i], make_profile(cfg), B.target_levels[i], ladder, kAngleR2);
            failed += !rep.passed();
            for (const auto &row : rep.rows) {
                if (row.quantity == "|U-Q|")
                    worst_uq = std::min(worst_uq, row.fit.exact ? std::numeric_limits<double>::infinity() : row.fit.tau);
                csv << name << ',' << i << ',' << row.quantity << ',' << row.fit.C << ',' << row.fit.tau << ','
                    << row.fit.r2 << ',' << row.fit.exact << ',' << row.pass << '\n';
            }
            // Projection ratio must tend to one.
            if (!(rep.projection_ratio.back() >= rep.projection_ratio.front() - 1e-12) ||
                !(1.0 - rep.projection_ratio.back() < 1e-3))
                ++failed;
        }
    }
    r.pass = fields > 0 && failed == 0;
    r.measured = std::to_string(fields - failed) + "/" + std::to_string(fields) + " members pinched, slowest |U-Q| rate " +
                 detail::num(worst_uq);
    r.artifacts.push_back({"criterion07_pinching.csv", csv.str()});
    return r;
}

/// Constant-deflated remainders of random solutions on the coupled operator.
inline Result liouville(const RunConfig &cfg) {
    detail::Stopwatch sw;
    Result r{8, "Liouville gap"};
    OperatorSpec op = make_run_operator(cfg, true);
    const double ball = std::exp2(cfg.dyadic_max + 1);
    SolverCache cache(op, detail::points_per_octave(cfg, op, ball));
    const auto far = detail::dyadic(cfg.liouville_far_min, cfg.dyadic_max);
    LiouvilleReport rep = liouville_battery(cache, kLiouvilleTrials, cfg.seed, ball, far, run_workers(cfg));
    r.pass = rep.passed(kLiouvilleMargin) && rep.vacuous < kLiouvilleTrials;
    r.measured = "min far-ladder U " + detail::num(rep.overall_min, 6) + " vs lambda_2 - 0.05 = " +
                 detail::num(rep.lambda2 - kLiouvilleMargin) + " (" + std::to_string(rep.vacuous) + " vacuous)";
    r.artifacts.push_back({"criterion08_liouville.csv", rep.csv()});
    r.seconds = sw.seconds();
    return r;
}

/// Flow-map distance to the translation and the derivative identity.
inline Result flow(const RunConfig &cfg) {
    detail::Stopwatch sw;
    Result r{9, "flow map comparison"};
    double C = 0.0, resid = 0.0;
    std::vector<APProfile> ps{make_profile(cfg)};
    if (cfg.n == 3 || cfg.scale == 2.0 * (cfg.n - 2))
        ps.push_back(bryant_like_profile(cfg.n, cfg.tail_c, cfg.phi_offset, cfg.r_cone, cfg.r_asym));
    for (const auto &p : ps)
        for (double x : geometric_ladder(10.0, 1e3, 8))
            for (int k = 0; k <= 10; ++k) {
                const double t = 0.09 * k * x;
                C = std::max(C, std::abs(flow_map(p, x, t) - (x - t)));
                if (k > 0)
                    resid = std::max(resid, std::abs(flow_derivative_check(p, x, t)));
            }
    r.pass = C <= kFlowConstant && resid < kFlowDerivativeTol;
    r.measured = "C = " + detail::num(C) + ", max derivative residual " + detail::num(resid);
    r.seconds = sw.seconds();
    return r;
}

/// Inner-product drift against the almost-orthogonality shape on the coupled operator.
inline Result preservation(const RunConfig &cfg) {
    detail::Stopwatch sw;
    Result r{10, "preservation of almost orthogonality"};
    OperatorSpec op = make_run_operator(cfg, true);
    const double ball = 256.0;
    SolverCache cache(op, detail::points_per_octave(cfg, op, ball));
    const DirichletSolver &s = cache.at(ball);
    const int K = op.mode_cut;
    const std::vector<std::pair<double, double>> straddle{{2, 16}, {3, 24}, {1.5, 12}};
    const std::vector<std::pair<double, double>> beyond{{32, 128}, {64, 256}};
    std::vector<double> Cs(kPreservationPairs, 0.0), zero(kPreservationPairs, 0.0);
    std::ostringstream csv;
    parallel_for(kPreservationPairs, run_workers(cfg), [&](int t) {
        ModeField u = s.solve(detail::gaussian(cfg.seed, 10000 + 2 * static_cast<std::uint64_t>(t), K));
        Eigen::VectorXd gv = detail::gaussian(cfg.seed, 10001 + 2 * static_cast<std::uint64_t>(t), K);
        gv[0] = 0.0;
        ModeField v = s.solve(gv);
        double c = 0.0;
        for (auto [a, b] : straddle) {
            PreservationResult pr = preservation_experiment(u, v, op.profile, a, b);
            c = std::max(c, pr.drift / pr.shape);
        }
        Cs[static_cast<std::size_t>(t)] = c;
        const int level = 1 + t % 2;
        Eigen::VectorXd blk = detail::gaussian(cfg.seed, 20000 + static_cast<std::uint64_t>(t),
                                               op.spectrum->multiplicities[static_cast<std::size_t>(level)]);
        ModeField vs = s.solve(eigen_data(op, ball, level, blk));
        double z = 0.0;
        for (auto [a, b] : beyond)
            z = std::max(z, preservation_experiment(u, vs, op.profile, a, b).drift);
        zero[static_cast<std::size_t>(t)] = z;
    });
    double C = 0.0, Z = 0.0;
    csv << "pair,C_pair,beyond_support_drift\n";
    for (int t = 0; t < kPreservationPairs; ++t) {
        C = std::max(C, Cs[static_cast<std::size_t>(t)]);
        Z = std::max(Z, zero[static_cast<std::size_t>(t)]);
        csv << t << ',' << detail::num(Cs[static_cast<std::size_t>(t)], 17) << ','
            << detail::num(zero[static_cast<std::size_t>(t)], 17) << '\n';
    }
    r.pass = std::isfinite(C) && Z < kZeroDrift;
    r.measured = "fitted C = " + detail::num(C) + " over " + std::to_string(kPreservationPairs) +
                 " pairs, max drift beyond support " + detail::num(Z);
    r.artifacts.push_back({"criterion10_preservation.csv", csv.str()});
    r.seconds = sw.seconds();
    return r;
}

/// Log-log slope of the mean-value ratio over rho = 2^6 .. 2^10.
inline Result mean_value(const RunConfig &cfg) {
    detail::Stopwatch sw;
    Result r{11, "mean-value ratio trend"};
    OperatorSpec op = make_run_operator(cfg, true);
    const auto radii = detail::dyadic(6, cfg.dyadic_max);
    SolverCache cache(op, detail::points_per_octave(cfg, op, radii.back()));
    for (double rho : radii)
        cache.at(rho);
    std::vector<double> slopes(kMeanValueTrials, 0.0);
    std::vector<std::vector<double>> ratios(kMeanValueTrials);
    parallel_for(kMeanValueTrials, run_workers(cfg), [&](int t) {
        Eigen::VectorXd g = detail::gaussian(cfg.seed, 30000 + static_cast<std::uint64_t>(t), op.mode_cut);
        std::vector<double> lx, ly;
        for (double rho : radii) {
            ModeField u = cache.at(rho).solve(g);
            const double q = mean_value_ratio(u, op.profile, rho, 0.25);
            ratios[static_cast<std::size_t>(t)].push_back(q);
            lx.push_back(std::log(rho));
            ly.push_back(std::log(q));
        }
        slopes[static_cast<std::size_t>(t)] = linear_fit(lx, ly).slope;
    });
    const double worst = *std::max_element(slopes.begin(), slopes.end());
    std::ostringstream csv;
    csv << "trial,slope";
    for (double rho : radii)
        csv << ",ratio_" << rho;
    csv << '\n';
    for (int t = 0; t < kMeanValueTrials; ++t) {
        csv << t << ',' << detail::num(slopes[static_cast<std::size_t>(t)], 17);
        for (double q : ratios[static_cast<std::size_t>(t)])
            csv << ',' << detail::num(q, 17);
        csv << '\n';
    }
    r.pass = worst <= kMeanValueSlope;
    r.measured = "max log-log slope " + detail::num(worst) + " over " + std::to_string(kMeanValueTrials) + " solutions";
    r.artifacts.push_back({"criterion11_mean_value.csv", csv.str()});
    r.seconds = sw.seconds();
    return r;
}

/// Every criterion in order; `on_result` sees each as soon as it is done.
inline std::vector<Result> run_all(const RunConfig &cfg, const std::function<void(const Result &)> &on_result = {}) {
    std::vector<Result> out;
    auto push = [&](Result r) {
        if (on_result)
            on_result(r);
        out.push_back(std::move(r));
    };
    push(radial_growth(cfg));
    push(indicial_and_lg(cfg));
    push(frequency_identities(cfg));
    push(model_three_circles_check(cfg));
    push(three_circles(cfg));
    {
        detail::Stopwatch sw;
        BasisRuns runs = run_bases(cfg);
        Result b = basis(cfg, runs);
        b.seconds = sw.seconds();
        push(b);
        detail::Stopwatch sw2;
        Result pin = pinching(cfg, runs);
        pin.seconds = sw2.seconds();
        push(pin);
    }
    push(liouville(cfg));
    push(flow(cfg));
    push(preservation(cfg));
    push(mean_value(cfg));
    return out;
}

inline std::string report_csv(const std::vector<Result> &rs) {
    std::ostringstream os;
    os << "criterion,tag,pass,measured\n";
    for (const auto &r : rs) {
        std::string m = r.measured;
        for (char &c : m)
            if (c == '"')
                c = '\'';
        os << r.id << ',' << r.tag << ',' << (r.pass ? "pass" : "fail") << ",\"" << m << "\"\n";
    }
    return os.str();
}

} // namespace aplab::acceptance

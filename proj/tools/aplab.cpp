// Experiment runner: certify, radial, freq, threecircles, liouville, basis, verify.
#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aplab/acceptance.hpp"
#include "aplab/config.hpp"
#include "aplab/construction.hpp"
#include "aplab/dirichlet.hpp"
#include "aplab/frequency.hpp"
#include "aplab/geometry.hpp"
#include "aplab/radial.hpp"
#include "aplab/report.hpp"

namespace {

using namespace aplab;

struct Options {
    std::string config;
    std::string out;
    long long seed = -1;
    int workers = -1;
    bool strict = false;
};

struct Outcome {
    std::vector<std::string> failures;
    std::vector<std::string> warnings;

    void check(bool ok, const std::string &what) {
        if (!ok)
            failures.push_back(what);
    }
};

std::string num(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

Outcome run_certify(const RunConfig &cfg, RunArtifacts &art) {
    Outcome o;
    APProfile p = make_profile(cfg);
    auto ladder = geometric_ladder(cfg.certificate_min, cfg.certificate_max, cfg.certificate_per_decade);
    CertificateReport rep = ap_certificate(p, ladder, cfg.tol_certificate_slack);
    art.add("certificate.csv", rep.csv());
    std::cout << rep.text();
    for (const auto &l : rep.lines) {
        o.check(l.pass, l.tag + " (" + l.quantity + " exponent " + num(l.fitted, 4) + ", required " + num(l.required, 3) + ")");
        if (!l.exact && l.r2 < cfg.tol_fit_r2)
            o.warnings.push_back(l.tag + " fit r2 " + num(l.r2, 4));
    }
    art.manifest("certify", cfg, "profile:" + p.name);
    return o;
}

Outcome run_radial(const RunConfig &cfg, RunArtifacts &art) {
    Outcome o;
    APProfile p = make_profile(cfg);
    std::ostringstream sum;
    sum.precision(17);
    sum << "lambda,growth_exponent,growth_r2,U_end,alpha,flagged\n";
    for (double lam : cfg.radial_lambdas) {
        RadialSolution s = solve_radial(p, lam, cfg.radial_r_max, {cfg.radial_points_per_decade});
        art.add("radial_lambda_" + num(lam) + ".csv", s.csv());
        sum << lam << ',' << s.growth_exponent << ',' << s.growth_r2 << ',' << s.U_end << ',' << s.alpha << ','
            << (s.flagged ? 1 : 0) << '\n';
        std::cout << "lambda " << lam << ": growth exponent " << num(s.growth_exponent) << ", U(r_max) " << num(s.U_end)
                  << (s.flagged ? " [flagged]" : "") << '\n';
        o.check(!s.flagged, "radial lambda " + num(lam) + " regression and U(r_max) disagree");
        o.check(std::abs(s.growth_exponent - lam) < cfg.tol_growth, "radial lambda " + num(lam) + " growth exponent " +
                                                                        num(s.growth_exponent));
    }
    art.add("radial_summary.csv", sum.str());
    art.manifest("radial", cfg, "profile:" + p.name);
    return o;
}

Outcome run_freq(const RunConfig &cfg, RunArtifacts &art) {
    Outcome o;
    APProfile p = make_profile(cfg);
    auto spec = make_spectrum(cfg);
    const int K = cfg.mode_cut > 0 ? cfg.mode_cut : spec->mode_count();
    std::vector<RadialSolution> sols;
    for (int l = 0; l < spec->levels(); ++l)
        sols.push_back(solve_radial(p, spec->eigenvalues[static_cast<std::size_t>(l)], cfg.radial_r_max, {192.0}));
    auto single = [&](int k) { return separable_field(sols[static_cast<std::size_t>(spec->mode(k).level)], spec, k, K); };
    std::vector<std::pair<std::string, ModeField>> fields;
    std::vector<ModeField> parts;
    std::vector<double> weights;
    auto rng = trial_rng(cfg.seed, 500);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int l = 1; l < spec->levels(); ++l) {
        const int k = spec->level_offset(l);
        if (k >= K)
            break;
        fields.push_back({"level" + std::to_string(l + 1), single(k)});
        parts.push_back(single(k));
        weights.push_back(nd(rng));
    }
    if (parts.size() >= 2)
        fields.push_back({"mixed", add(parts, weights)});
    std::vector<double> ladder;
    const auto &grid = sols.front().grid;
    for (std::size_t j = 0; j < grid.size(); j += 2)
        if (grid[j] >= 2.0 * cfg.r_cone && grid[j] <= 1e3)
            ladder.push_back(grid[j]);
    for (const auto &[name, f] : fields) {
        FrequencyTrace t = trace(f, p, ladder);
        art.add("trace_" + name + ".csv", trace_csv(t));
        double gap = INFINITY;
        for (std::size_t i = 0; i < t.size(); ++i)
            gap = std::min(gap, t.cs_gap(i));
        const double ode = frequency_ode_residual(t).max_abs();
        std::cout << name << ": min Cauchy-Schwarz gap " << num(gap, 3) << ", max ODE residual " << num(ode, 3) << '\n';
        o.check(gap >= -1e-10, "Cauchy-Schwarz gap of " + name + " is " + num(gap, 3));
    }
    art.manifest("freq", cfg, "profile:" + p.name);
    return o;
}

Outcome run_threecircles(const RunConfig &cfg, RunArtifacts &art) {
    Outcome o;
    const auto ladder = dyadic_ladder(cfg.dyadic_min, cfg.dyadic_max);
    std::string hash;
    for (bool coupled : {false, true}) {
        if (coupled && !cfg.coupling_enabled)
            continue;
        OperatorSpec op = make_run_operator(cfg, coupled);
        hash += (hash.empty() ? "" : ",") + op.hash();
        const int P = cfg.dirichlet_points_per_octave > 0 ? cfg.dirichlet_points_per_octave
                                                          : auto_points_per_octave(op, ladder.back());
        SolverCache cache(op, P);
        const double clean = std::exp2(coupled ? cfg.clean_from_coupled : cfg.clean_from_separable);
        for (double d : cfg.three_circles_d) {
            if (op.spectrum->level_of(d, 1e-9) >= 0) {
                o.warnings.push_back("d = " + num(d) + " is an eigenvalue; skipped");
                continue;
            }
            ViolationReport rep = three_circles_battery(cache, d, ladder, cfg.three_circles_trials, cfg.seed,
                                                        run_workers(cfg));
            const std::string name = std::string(coupled ? "coupled" : "separable") + "_d" + num(d);
            art.add("threecircles_" + name + ".csv", rep.csv());
            const int v = rep.violations_from(clean);
            std::cout << name << ": " << v << " violations at radii >= " << clean << ", smallest clean radius "
                      << rep.smallest_clean_radius << '\n';
            o.check(v == 0, "three circles " + name + ": " + std::to_string(v) + " violations at radii >= " + num(clean));
        }
    }
    art.manifest("threecircles", cfg, hash);
    return o;
}

Outcome run_liouville(const RunConfig &cfg, RunArtifacts &art) {
    Outcome o;
    OperatorSpec op = make_run_operator(cfg, cfg.coupling_enabled);
    const double ball = std::exp2(cfg.dyadic_max + 1);
    const int P = cfg.dirichlet_points_per_octave > 0 ? cfg.dirichlet_points_per_octave : auto_points_per_octave(op, ball);
    SolverCache cache(op, P);
    LiouvilleReport rep = liouville_battery(cache, cfg.liouville_trials, cfg.seed, ball,
                                            dyadic_ladder(cfg.liouville_far_min, cfg.dyadic_max), run_workers(cfg));
    art.add("liouville.csv", rep.csv());
    std::cout << "min far-ladder U " << num(rep.overall_min) << " (lambda_2 = " << rep.lambda2 << ", " << rep.vacuous
              << " vacuous trials)\n";
    o.check(rep.passed(cfg.tol_liouville_margin),
            "Liouville gap: min U " + num(rep.overall_min) + " below lambda_2 - " + num(cfg.tol_liouville_margin));
    art.manifest("liouville", cfg, op.hash());
    return o;
}

Outcome run_basis(const RunConfig &cfg, RunArtifacts &art) {
    Outcome o;
    OperatorSpec op = make_run_operator(cfg, cfg.coupling_enabled);
    BasisOptions opt = acceptance::basis_options(cfg);
    const int P = cfg.dirichlet_points_per_octave > 0 ? cfg.dirichlet_points_per_octave
                                                      : auto_points_per_octave(op, std::exp2(opt.i_last));
    SolverCache cache(op, P);
    HarmonicBasis B = build_basis(cache, cfg.basis_d, opt);
    art.add("basis_pairs.csv", B.csv());
    art.add("basis_members.csv", B.members_csv());
    const int want = dimension_count(*op.spectrum, cfg.basis_d);
    std::cout << B.size() << " members (dimension count " << want << "), max far angle " << num(B.max_far_angle(), 3)
              << '\n';
    o.check(static_cast<int>(B.size()) == want,
            "basis cardinality " + std::to_string(B.size()) + " != dimension count " + std::to_string(want));
    o.check(B.max_far_angle() < 0.01, "far Gram angle " + num(B.max_far_angle(), 3));
    for (const auto &f : B.fits) {
        o.check(f.fit.exact || f.fit.tau > 0.0,
                "orthogonality angle of pair " + std::to_string(f.a) + "," + std::to_string(f.b) + " does not decay");
        if (!f.fit.exact && f.fit.r2 < cfg.tol_fit_r2)
            o.warnings.push_back("pair " + std::to_string(f.a) + "," + std::to_string(f.b) + " fit r2 " + num(f.fit.r2, 4));
    }
    std::ostringstream pin;
    pin << "member,quantity,C,tau,r2,exact,pass\n";
    for (std::size_t i = 0; i < B.size(); ++i) {
        if (B.levels[i] == 0)
            continue;
        PinchReport rep = pinching_report(B.fields[i], op.profile, B.target_levels[i], opt.ladder, cfg.tol_fit_r2);
        for (const auto &row : rep.rows)
            pin << i << ',' << row.quantity << ',' << row.fit.C << ',' << row.fit.tau << ',' << row.fit.r2 << ','
                << row.fit.exact << ',' << row.pass << '\n';
        o.check(rep.passed(), "member " + std::to_string(i) + " is not pinched at lambda " + num(B.target_levels[i]));
    }
    art.add("basis_pinching.csv", pin.str());
    art.manifest("basis", cfg, op.hash());
    return o;
}

Outcome run_verify(const RunConfig &cfg, RunArtifacts &art) {
    Outcome o;
    auto results = acceptance::run_all(cfg, [](const acceptance::Result &r) { std::cout << r.line() << std::endl; });
    for (const auto &r : results) {
        for (const auto &[name, body] : r.artifacts)
            art.add(name, body);
        o.check(r.pass, "criterion " + std::to_string(r.id) + " (" + r.tag + ")");
    }
    art.add("report.csv", acceptance::report_csv(results));
    art.manifest("verify", cfg, make_run_operator(cfg, true).hash());
    return o;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Drift-harmonic functions on asymptotically paraboloidal ends: experiments and checks"};
    app.require_subcommand(1, 1);
    Options opt;
    app.add_option("--config", opt.config, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", opt.out, "output directory (overrides run.out)");
    app.add_option("--seed", opt.seed, "master seed (overrides run.seed)")->check(CLI::NonNegativeNumber);
    app.add_option("--workers", opt.workers, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
    app.add_flag("--strict", opt.strict, "treat fit-quality warnings as failures");
    app.fallthrough();

    using Runner = Outcome (*)(const RunConfig &, RunArtifacts &);
    const std::vector<std::tuple<std::string, std::string, Runner>> commands = {
        {"certify", "fit the decay exponents of the profile certificate", run_certify},
        {"radial", "radial solutions for each configured eigenvalue", run_radial},
        {"freq", "frequency traces and residuals of separable fields", run_freq},
        {"threecircles", "three-circles battery", run_threecircles},
        {"liouville", "Liouville battery on constant-deflated solutions", run_liouville},
        {"basis", "build the harmonic basis with Gram and pinching reports", run_basis},
        {"verify", "run every acceptance criterion", run_verify},
    };
    for (const auto &[name, help, fn] : commands)
        app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    RunConfig cfg;
    try {
        if (!opt.config.empty())
            cfg = load_config(opt.config);
        if (opt.seed >= 0)
            cfg.seed = static_cast<std::uint64_t>(opt.seed);
        if (opt.workers >= 0)
            cfg.workers = opt.workers;
        if (!opt.out.empty())
            cfg.out = opt.out;
        validate(cfg);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        for (const auto &[name, help, fn] : commands) {
            if (!app.got_subcommand(name))
                continue;
            RunArtifacts art(cfg.out);
            Outcome o = fn(cfg, art);
            for (const auto &w : o.warnings)
                std::cerr << "warning: " << w << '\n';
            if (opt.strict)
                for (const auto &w : o.warnings)
                    o.failures.push_back("fit quality: " + w);
            for (const auto &f : o.failures)
                std::cerr << "check failed: " << f << '\n';
            std::cout << (o.failures.empty() ? "PASS" : "FAIL") << " (" << name << ", artifacts in " << art.dir().string()
                      << ")\n";
            return o.failures.empty() ? 0 : 1;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

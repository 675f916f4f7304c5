// rrk: command-line front end for randomized Riemann sums and randomized
// Runge-Kutta experiments.
//
// Exit codes: 0 success, 2 flag or domain error, 3 numerical abort or I/O failure.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrk/rrk.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct ProblemFlags {
    std::string name = "jump";
    std::vector<double> gammas;
    double alpha = 0.25;
    double lambda = 1.0;
    double T = 1.0;
};

struct Flags {
    ProblemFlags problem;
    std::vector<std::string> methods{"rand-euler"};
    double p = 2.0;
    std::size_t samples = 1000;
    int n_min = 3;
    int n_max = 12;
    double h = 0.0625;
    std::uint64_t seed = 42;
    unsigned threads = 0;
    std::string out;
    std::string in;
    double cp = 10.0;
    std::optional<double> exponent;
    double epsilon = 0.0;
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& pf, bool with_adversarial = true) {
    std::vector<std::string> names{"singular", "jump", "singular-lip", "manufactured"};
    if (with_adversarial) names.push_back("adversarial");
    cmd->add_option("--problem", pf.name, "built-in problem")->check(CLI::IsMember(names));
    cmd->add_option("--gamma", pf.gammas, "singular: exponent > 1; manufactured: Hölder exponent in (0,1]")
        ->expected(1, -1);
    cmd->add_option("--alpha", pf.alpha, "singular-lip: exponent in (0, 1/2)");
    cmd->add_option("--lambda", pf.lambda, "manufactured: Lipschitz coefficient");
    cmd->add_option("--T", pf.T, "final time");
}

/// `adversarial_h` is the grid whose left nodes form the indicator set.
rrk::Problem build_problem(const ProblemFlags& pf, std::optional<double> gamma, double adversarial_h) {
    if (pf.name == "singular") return rrk::problem_singular_time(gamma.value_or(2.0), pf.T);
    if (pf.name == "jump") return rrk::problem_jump_linear(pf.T);
    if (pf.name == "singular-lip") return rrk::problem_singular_lipschitz(pf.alpha, pf.T);
    if (pf.name == "manufactured") return rrk::problem_manufactured_hoelder(gamma.value_or(1.0), pf.lambda, pf.T);
    if (pf.name == "adversarial") {
        if (pf.T != 1.0) throw std::domain_error("adversarial problem is posed on T = 1");
        return rrk::problem_adversarial_indicator(rrk::make_grid(1.0, adversarial_h));
    }
    throw std::domain_error("unknown problem '" + pf.name + "'");
}

std::vector<std::optional<double>> gamma_list(const ProblemFlags& pf) {
    if (pf.gammas.empty()) return {std::nullopt};
    if (pf.name != "singular" && pf.name != "manufactured" && pf.gammas.size() > 1)
        throw std::domain_error("--gamma takes one value for problem '" + pf.name + "'");
    std::vector<std::optional<double>> out;
    for (double g : pf.gammas) out.emplace_back(g);
    return out;
}

std::optional<double> single_gamma(const ProblemFlags& pf) {
    if (pf.gammas.size() > 1) throw std::domain_error("--gamma takes a single value here");
    return pf.gammas.empty() ? std::nullopt : std::optional<double>(pf.gammas.front());
}

void check_h(double h) {
    if (!(h > 0.0 && h < 1.0)) throw std::domain_error("--h must lie in (0,1)");
}

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

int cmd_quad(const Flags& f) {
    check_h(f.h);
    const rrk::Problem pb = build_problem(f.problem, single_gamma(f.problem), f.h);
    if (!pb.field.state_independent)
        throw std::domain_error("--problem " + f.problem.name + " is state dependent; quad needs singular, "
                                "adversarial or manufactured with --lambda 0");
    if (f.samples < 2) throw std::domain_error("--samples must be >= 2");
    const rrk::BiasReport rep = rrk::quadrature_statistics(pb, f.h, f.samples, f.seed, f.p, f.threads);
    const rrk::TimeGrid grid = rrk::make_grid(pb.T, f.h);
    std::cout << "problem " << pb.label << "  h=" << fmt(f.h) << "  N=" << grid.n_steps()
              << "  samples=" << f.samples << "  seed=" << f.seed << '\n'
              << "integral over [0," << fmt(grid.last_node()) << "] = " << fmt((pb.exact(grid.last_node()) - pb.u0)[0], 12)
              << '\n'
              << "mean deviation = " << fmt(rep.mean_deviation) << "  sample std = " << fmt(rep.sample_std)
              << "  z = " << fmt(rep.z_score(), 4) << (rep.within(4.0) ? "  (within 4 sigma)" : "  (OUTSIDE 4 sigma)")
              << '\n'
              << "L^" << fmt(f.p) << " max-prefix error = " << fmt(rep.lp_max_error) << '\n';
    if (rep.reseeds) std::cout << "re-seeded samples after singular collisions: " << rep.reseeds << '\n';
    if (!f.out.empty()) {
        rrk::ConvergenceTable t{pb.label, "rand-riemann", f.p, f.seed, {}};
        t.rows.push_back({f.h, rep.lp_max_error, 0.0, rep.samples, rep.reseeds});
        rrk::write_csv(t, f.out);
    }
    return 0;
}

int cmd_solve(const Flags& f) {
    check_h(f.h);
    if (f.methods.size() != 1) throw std::domain_error("solve takes exactly one --method");
    const rrk::Method method = rrk::parse_method(f.methods.front());
    const rrk::Problem pb = build_problem(f.problem, single_gamma(f.problem), f.h);
    const rrk::TimeGrid grid = rrk::make_grid(pb.T, f.h);
    std::optional<rrk::RandomStream> stream;
    if (rrk::is_randomized(method)) stream = rrk::derive_stream(f.seed, 0);
    const rrk::Trajectory traj = rrk::solve(pb.field, pb.u0, grid, method, stream);

    std::cout << "problem " << pb.label << "  method " << rrk::method_name(method) << "  h=" << fmt(f.h)
              << "  N=" << grid.n_steps() << '\n'
              << "U^N = " << fmt(traj.states.back()[0], 12) << " at t=" << fmt(grid.last_node()) << '\n';
    if (pb.has_exact())
        std::cout << "exact = " << fmt(pb.exact(grid.last_node())[0], 12)
                  << "  path error = " << fmt(rrk::path_error_max(traj, pb.exact)) << '\n';
    if (!f.out.empty()) {
        std::string text = "j,t,tau,state,exact\n";
        for (std::size_t j = 0; j < traj.states.size(); ++j) {
            text += std::to_string(j) + ',' + rrk::format_double(grid.node(j)) + ',' +
                    (j > 0 && !traj.draws.empty() ? rrk::format_double(traj.draws[j - 1]) : std::string()) + ',' +
                    rrk::format_double(traj.states[j][0]) + ',' +
                    (pb.has_exact() ? rrk::format_double(pb.exact(grid.node(j))[0]) : std::string()) + '\n';
        }
        rrk::write_text(f.out, text);
    }
    return 0;
}

int cmd_converge(const Flags& f) {
    std::vector<rrk::ConvergenceTable> tables;
    std::vector<rrk::Method> methods;
    for (const auto& m : f.methods) methods.push_back(rrk::parse_method(m));
    const double finest = std::ldexp(1.0, -f.n_max);
    for (const auto& gamma : gamma_list(f.problem)) {
        for (rrk::Method m : methods) {
            rrk::ExperimentConfig cfg{build_problem(f.problem, gamma, finest), m, f.p, f.samples,
                                      f.n_min, f.n_max, f.seed, f.threads};
            cfg.validate();
            tables.push_back(rrk::run_convergence(cfg));
        }
    }
    for (const auto& t : tables) {
        std::cout << t.problem << "  " << t.method << "  p=" << fmt(t.p) << '\n';
        std::cout << "      n          h        error       stderr\n";
        for (const auto& r : t.rows) {
            std::printf("  %5d %10.3e %12.5e %12.5e%s\n", static_cast<int>(std::lround(-std::log2(r.h))), r.h,
                        r.error, r.sample_std / std::sqrt(static_cast<double>(r.samples)),
                        r.reseeds ? "  (re-seeded)" : "");
        }
        std::cout << std::flush;
        bool positive = true;
        for (const auto& r : t.rows) positive = positive && r.error > 0.0;
        if (t.rows.size() >= 3 && positive) {
            const rrk::OrderFit fit = rrk::fit_order(t);
            std::cout << "  fitted slope = " << fmt(fit.slope, 4) << "  (R^2 = " << fmt(fit.r_squared, 4) << ")\n";
        } else {
            std::cout << "  fitted slope = n/a (zero errors)\n";
        }
    }
    if (!f.out.empty()) rrk::write_csv(tables, f.out);
    return 0;
}

int cmd_as_check(const Flags& f) {
    if (f.methods.size() != 1) throw std::domain_error("as-check takes exactly one --method");
    const rrk::Method method = rrk::parse_method(f.methods.front());
    rrk::ExperimentConfig cfg{build_problem(f.problem, single_gamma(f.problem), std::ldexp(1.0, -f.n_max)),
                              method, f.p, f.samples, f.n_min, f.n_max, f.seed, f.threads};
    cfg.validate();
    const double exponent = f.exponent.value_or(0.5 - 1.0 / f.p);
    const rrk::RateCheckReport rep = rrk::as_rate_check(cfg, exponent, f.epsilon);
    std::cout << "problem " << cfg.problem.label << "  method " << rrk::method_name(method) << "  paths=" << rep.paths
              << "  exponent=" << fmt(rep.exponent) << '\n';
    for (int m = rep.n_min; m <= rep.n_max; ++m)
        std::printf("  m=%3d  h^e=%10.4e  violation fraction %.4f\n", m, std::pow(std::ldexp(1.0, -m), rep.exponent),
                    rep.violation_fraction(m));
    std::cout << "first compliant level m0 (histogram):\n";
    for (const auto& [m0, count] : rep.m0_histogram()) std::cout << "  m0=" << m0 << ": " << count << '\n';
    if (rep.reseeds) std::cout << "re-seeded after singular collisions: " << rep.reseeds << '\n';
    if (!f.out.empty()) {
        std::string text = "sample,m,h,error,bound\n";
        for (std::size_t i = 0; i < rep.paths; ++i)
            for (std::size_t l = 0; l < rep.levels(); ++l) {
                const int m = rep.n_min + static_cast<int>(l);
                const double h = std::ldexp(1.0, -m);
                text += std::to_string(i) + ',' + std::to_string(m) + ',' + rrk::format_double(h) + ',' +
                        rrk::format_double(rep.errors[i * rep.levels() + l]) + ',' +
                        rrk::format_double(std::pow(h, rep.exponent)) + '\n';
            }
        rrk::write_text(f.out, text);
    }
    return 0;
}

int cmd_adversarial(const Flags& f) {
    check_h(f.h);
    if (f.samples < 1) throw std::domain_error("--samples must be >= 1");
    const rrk::AdversarialReport rep = rrk::adversarial_demo(f.h, f.samples, f.seed, f.threads);
    std::cout << "h=" << fmt(f.h) << "  f = indicator of the classical Euler nodes, exact u = 0\n"
              << "classical error " << fmt(rep.classical_error) << '\n'
              << "randomized error " << fmt(rep.max_randomized_error()) << "  (max over " << f.samples
              << " paths; " << rep.exact_paths() << " exact)\n";
    if (rep.reseeds) std::cout << "re-seeded after node collisions: " << rep.reseeds << '\n';
    return 0;
}

int cmd_constants(const Flags& f) {
    const rrk::Problem pb = build_problem(f.problem, single_gamma(f.problem), f.h);
    const rrk::ConstantReport rep = rrk::error_constants_for(pb, f.cp);
    const auto& in = rep.inputs;
    std::cout << "problem " << pb.label << '\n'
              << "inputs: C_p=" << fmt(in.cp) << " T=" << fmt(in.T) << " p=" << fmt(in.p)
              << " ||L||_p=" << fmt(in.lipschitz_norm) << " ||Kbar||_p=" << fmt(in.growth_norm)
              << " sup|u|<=" << fmt(in.sup_u) << '\n'
              << "C   = " << fmt(rep.c, 10) << '\n';
    if (rep.c_u) {
        std::cout << "      gamma=" << fmt(*in.gamma) << " L=" << fmt(*in.lipschitz_const) << " Kbar=" << fmt(*in.growth_const)
                  << '\n'
                  << "C_U = " << fmt(*rep.c_u, 10) << '\n'
                  << "C_V = " << fmt(*rep.c_v, 10) << '\n';
    } else {
        std::cout << "C_U, C_V: n/a (problem is not in the Hölder regime)\n";
    }
    return 0;
}

int cmd_plot(const Flags& f) {
    if (f.in.empty() || f.out.empty()) throw std::domain_error("plot needs --in CSV and --out SVG");
    rrk::emit_plot(f.in, f.out);
    std::cout << "wrote " << f.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized Riemann sums and randomized Runge-Kutta methods for time-irregular ODEs"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);
    Flags f;

    auto* quad = app.add_subcommand("quad", "randomized Riemann sum statistics for a state-independent problem");
    add_problem_flags(quad, f.problem);
    quad->add_option("--h", f.h, "step size in (0,1)");
    quad->add_option("--p", f.p, "L^p exponent (>= 2)");
    quad->add_option("--samples", f.samples, "Monte Carlo samples");
    quad->add_option("--seed", f.seed, "master seed");
    quad->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    quad->add_option("--out", f.out, "CSV output");

    auto* solve = app.add_subcommand("solve", "single trajectory");
    add_problem_flags(solve, f.problem);
    solve->add_option("--method", f.methods, "euler | rand-euler | rand-rk2")
        ->check(CLI::IsMember({"euler", "rand-euler", "rand-rk2"}));
    solve->add_option("--h", f.h, "step size in (0,1)");
    solve->add_option("--seed", f.seed, "master seed (stream 0 is used)");
    solve->add_option("--out", f.out, "trajectory CSV");

    auto* converge = app.add_subcommand("converge", "L^p error versus h = 2^-n and fitted order");
    add_problem_flags(converge, f.problem);
    converge->add_option("--method", f.methods, "one or more of euler, rand-euler, rand-rk2")
        ->check(CLI::IsMember({"euler", "rand-euler", "rand-rk2"}))
        ->expected(1, -1);
    converge->add_option("--p", f.p, "L^p exponent (>= 2)");
    converge->add_option("--samples", f.samples, "Monte Carlo samples per step size");
    converge->add_option("--n-min", f.n_min, "coarsest level");
    converge->add_option("--n-max", f.n_max, "finest level");
    converge->add_option("--seed", f.seed, "master seed");
    converge->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    converge->add_option("--out", f.out, "CSV output");

    auto* as_check = app.add_subcommand("as-check", "path-wise rate check over coupled step sizes");
    add_problem_flags(as_check, f.problem);
    as_check->add_option("--method", f.methods, "euler | rand-euler | rand-rk2")
        ->check(CLI::IsMember({"euler", "rand-euler", "rand-rk2"}));
    as_check->add_option("--p", f.p, "integrability exponent; default rate is 1/2 - 1/p");
    as_check->add_option("--samples", f.samples, "sample paths");
    as_check->add_option("--n-min", f.n_min, "coarsest level");
    as_check->add_option("--n-max", f.n_max, "finest level");
    as_check->add_option("--seed", f.seed, "master seed");
    as_check->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    as_check->add_option("--exponent", f.exponent, "rate exponent (default 1/2 - 1/p)");
    as_check->add_option("--epsilon", f.epsilon, "margin subtracted from the exponent")->check(CLI::NonNegativeNumber);
    as_check->add_option("--out", f.out, "per-path CSV");

    auto* adversarial = app.add_subcommand("adversarial", "classical vs randomized Euler on a grid indicator");
    adversarial->add_option("--h", f.h, "step size in (0,1)");
    adversarial->add_option("--samples", f.samples, "randomized sample paths");
    adversarial->add_option("--seed", f.seed, "master seed");
    adversarial->add_option("--threads", f.threads, "worker threads (0 = all cores)");

    auto* constants = app.add_subcommand("constants", "explicit L^p error constants for a built-in problem");
    add_problem_flags(constants, f.problem, false);
    constants->add_option("--cp", f.cp, "BDG constant C_p (diagnostic input)");

    auto* plot = app.add_subcommand("plot", "SVG log-log plot from a convergence CSV");
    plot->add_option("--in", f.in, "convergence CSV");
    plot->add_option("--out", f.out, "SVG output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*quad) return cmd_quad(f);
        if (*solve) return cmd_solve(f);
        if (*converge) return cmd_converge(f);
        if (*as_check) return cmd_as_check(f);
        if (*adversarial) return cmd_adversarial(f);
        if (*constants) return cmd_constants(f);
        if (*plot) return cmd_plot(f);
    } catch (const rrk::FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const rrk::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const rrk::SampleAbort& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const rrk::ExperimentError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const rrk::EvaluationError& e) {
        std::cerr << "numerical abort: " << e.what() << " (step " << e.step() << ")\n";
        return kExitNumerical;
    } catch (const rrk::OverflowError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

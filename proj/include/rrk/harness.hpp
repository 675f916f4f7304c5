#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rrk/core.hpp"
#include "rrk/problems.hpp"
#include "rrk/quadrature.hpp"
#include "rrk/random.hpp"
#include "rrk/solvers.hpp"

namespace rrk {

/// Raised when a sample keeps colliding with a singular point after every
/// allowed re-seed.
class SampleAbort : public std::runtime_error {
public:
    SampleAbort(const std::string& what, std::uint64_t sample, std::ptrdiff_t step)
        : std::runtime_error(what), sample_(sample), step_(step) {}

    std::uint64_t sample() const noexcept { return sample_; }
    std::ptrdiff_t step() const noexcept { return step_; }

private:
    std::uint64_t sample_;
    std::ptrdiff_t step_;
};

inline constexpr unsigned kMaxReseeds = 8;

// ---------------------------------------------------------------------------
// Deterministic parallel loop

/// Calls body(i) for i in [0, count) on up to `threads` workers (0 = all
/// cores). Each index is handled exactly once, so results written by index do
/// not depend on the thread count. The exception of the lowest failing index
/// is rethrown.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));

    std::vector<std::exception_ptr> errors(count);
    auto run = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        run(0, count);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (count + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            const std::size_t lo = std::min(count, w * chunk);
            const std::size_t hi = std::min(count, lo + chunk);
            pool.emplace_back(run, lo, hi);
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Path errors and single samples

/// max over grid nodes n = 0..N of |exact(t_n) - U^n|.
inline double path_error_max(const Trajectory& traj, const std::function<State(double)>& exact) {
    double worst = 0.0;
    for (std::size_t n = 0; n < traj.states.size(); ++n)
        worst = std::max(worst, distance(exact(traj.grid.node(n)), traj.states[n]));
    return worst;
}

struct SampleOutcome {
    double error = 0.0;
    unsigned reseeds = 0;
};

namespace detail {

inline bool draws_hit_exceptional(const Problem& pb, const TimeGrid& grid,
                                  std::span<const double> taus) {
    if (!pb.exceptional) return false;
    for (std::size_t j = 1; j <= taus.size(); ++j)
        if (pb.exceptional(grid.node(j - 1) + taus[j - 1] * grid.step())) return true;
    return false;
}

}  // namespace detail

/// One Monte Carlo sample of the path error. A randomized draw that lands on
/// the problem's exceptional set (probability zero, but possible in floating
/// point) triggers a re-seed of this sample; the count is reported.
inline SampleOutcome sample_path_error(const Problem& pb, Method method, const TimeGrid& grid,
                                       const RandomStream& stream) {
    if (!pb.has_exact()) throw std::invalid_argument("problem '" + pb.label + "' has no exact solution");
    if (!is_randomized(method))
        return {path_error_max(solve_with_draws(pb.field, pb.u0, grid, method, {}), pb.exact), 0};

    std::ptrdiff_t last_step = -1;
    for (unsigned attempt = 0; attempt <= kMaxReseeds; ++attempt) {
        RandomStream s = attempt == 0 ? stream : stream.reseeded(attempt);
        std::vector<double> taus(grid.n_steps());
        for (double& tau : taus) tau = s.next_tau();
        if (detail::draws_hit_exceptional(pb, grid, taus)) continue;
        try {
            const Trajectory traj = solve_with_draws(pb.field, pb.u0, grid, method, taus);
            return {path_error_max(traj, pb.exact), attempt};
        } catch (const EvaluationError& e) {
            last_step = e.step();
        }
    }
    throw SampleAbort("sample " + std::to_string(stream.stream_index()) +
                          " hit a singular point after " + std::to_string(kMaxReseeds) +
                          " re-seeds (step " + std::to_string(last_step) + ")",
                      stream.stream_index(), last_step);
}

// ---------------------------------------------------------------------------
// L^p error estimation

struct ExperimentConfig {
    Problem problem;
    Method method = Method::rand_euler;
    double p = 2.0;
    std::size_t samples = 1000;
    int n_min = 3;
    int n_max = 12;
    std::uint64_t master_seed = 42;
    unsigned threads = 0;  ///< 0 = all cores; never affects results

    void validate() const {
        if (!(p >= 2.0) || !std::isfinite(p)) throw std::domain_error("p must be >= 2");
        if (samples < 2) throw std::domain_error("samples must be >= 2");
        if (n_min < 1) throw std::domain_error("n-min must be >= 1 (h = 2^-n < 1)");
        if (n_min >= n_max) throw std::domain_error("n-min must be smaller than n-max");
        if (n_max > 40) throw std::domain_error("n-max must be <= 40");
    }
};

struct LpEstimate {
    double error = 0.0;       ///< ((1/M) sum e_m^p)^{1/p}
    double sample_std = 0.0;  ///< std of e^p, mapped through x -> x^{1/p} at the mean
    std::size_t samples = 0;
    unsigned reseeds = 0;

    double standard_error() const {
        return samples ? sample_std / std::sqrt(static_cast<double>(samples)) : 0.0;
    }
};

/// Plug-in L^p estimate from per-sample errors, with the sample standard
/// deviation of e^p propagated by the delta method.
inline LpEstimate lp_from_errors(std::span<const double> errors, double p) {
    if (errors.empty()) throw std::invalid_argument("no samples");
    const auto m = static_cast<double>(errors.size());
    double mean = 0.0;
    for (double e : errors) mean += std::pow(e, p);
    mean /= m;
    double var = 0.0;
    for (double e : errors) {
        const double d = std::pow(e, p) - mean;
        var += d * d;
    }
    var = errors.size() > 1 ? var / (m - 1.0) : 0.0;

    LpEstimate est;
    est.samples = errors.size();
    est.error = std::pow(mean, 1.0 / p);
    est.sample_std = mean > 0.0 ? std::pow(mean, 1.0 / p - 1.0) / p * std::sqrt(var) : 0.0;
    return est;
}

/// Seed for one step-size level of an L^p experiment: independent draws per h.
inline std::uint64_t level_seed(std::uint64_t master_seed, double h) noexcept {
    return combine_seed(master_seed, std::bit_cast<std::uint64_t>(h));
}

/// Per-sample errors for stream indices 0..M-1 at step size h.
inline std::vector<double> sample_errors(const ExperimentConfig& cfg, double h, unsigned* reseeds = nullptr) {
    const TimeGrid grid = make_grid(cfg.problem.T, h);
    std::vector<double> errors(cfg.samples);
    std::vector<unsigned> rs(cfg.samples, 0);
    if (!is_randomized(cfg.method)) {
        const double e = sample_path_error(cfg.problem, cfg.method, grid, derive_stream(0, 0)).error;
        std::fill(errors.begin(), errors.end(), e);
    } else {
        const std::uint64_t seed = level_seed(cfg.master_seed, h);
        parallel_for(cfg.samples, cfg.threads, [&](std::size_t i) {
            const SampleOutcome o = sample_path_error(cfg.problem, cfg.method, grid, derive_stream(seed, i));
            errors[i] = o.error;
            rs[i] = o.reseeds;
        });
    }
    if (reseeds) {
        *reseeds = 0;
        for (unsigned r : rs) *reseeds += r;
    }
    return errors;
}

inline LpEstimate mc_lp_error(const ExperimentConfig& cfg, double h) {
    cfg.validate();
    unsigned reseeds = 0;
    const std::vector<double> errors = sample_errors(cfg, h, &reseeds);
    LpEstimate est = lp_from_errors(errors, cfg.p);
    est.reseeds = reseeds;
    return est;
}

// ---------------------------------------------------------------------------
// Convergence tables and order fits

struct ConvergenceRow {
    double h = 0.0;
    double error = 0.0;
    double sample_std = 0.0;
    std::size_t samples = 0;
    unsigned reseeds = 0;
};

struct ConvergenceTable {
    std::string problem;
    std::string method;
    double p = 2.0;
    std::uint64_t seed = 0;
    std::vector<ConvergenceRow> rows;  ///< decreasing h
};

/// Step-size failure, carrying the offending h.
class ExperimentError : public std::runtime_error {
public:
    ExperimentError(const std::string& what, double h) : std::runtime_error(what), h_(h) {}
    double h() const noexcept { return h_; }

private:
    double h_;
};

inline ConvergenceTable run_convergence(const ExperimentConfig& cfg) {
    cfg.validate();
    ConvergenceTable table{cfg.problem.label, std::string(method_name(cfg.method)), cfg.p,
                           cfg.master_seed, {}};
    for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
        const double h = std::ldexp(1.0, -n);
        try {
            const LpEstimate est = mc_lp_error(cfg, h);
            table.rows.push_back({h, est.error, est.sample_std, est.samples, est.reseeds});
        } catch (const SampleAbort& e) {
            throw ExperimentError(std::string(e.what()) + " [h=2^-" + std::to_string(n) + "]", h);
        } catch (const OverflowError& e) {
            throw ExperimentError(std::string(e.what()) + " [h=2^-" + std::to_string(n) + "]", h);
        }
    }
    return table;
}

struct OrderFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least squares line through (log2 h, log2 error).
inline OrderFit fit_order(std::span<const double> hs, std::span<const double> errors) {
    if (hs.size() != errors.size()) throw std::invalid_argument("size mismatch");
    if (hs.size() < 3) throw std::invalid_argument("order fit needs at least 3 rows");
    const auto n = static_cast<double>(hs.size());
    std::vector<double> x(hs.size()), y(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (!(hs[i] > 0.0) || !(errors[i] > 0.0))
            throw std::domain_error("order fit needs positive step sizes and errors");
        x[i] = std::log2(hs[i]);
        y[i] = std::log2(errors[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::domain_error("degenerate order fit: all step sizes equal");
    OrderFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

inline OrderFit fit_order(const ConvergenceTable& table) {
    std::vector<double> hs, errs;
    for (const auto& r : table.rows) {
        hs.push_back(r.h);
        errs.push_back(r.error);
    }
    return fit_order(hs, errs);
}

// ---------------------------------------------------------------------------
// Almost sure rate check

struct RateCheckReport {
    double exponent = 0.0;  ///< effective exponent (requested minus margin)
    int n_min = 0;
    int n_max = 0;
    std::size_t paths = 0;
    /// Per path: largest level m with error > h_m^exponent, or n_min - 1.
    std::vector<int> last_violation;
    /// Per path and level (row-major, n_max - n_min + 1 per path).
    std::vector<double> errors;
    unsigned reseeds = 0;

    std::size_t levels() const { return static_cast<std::size_t>(n_max - n_min + 1); }

    double violation_fraction(int m) const {
        if (paths == 0 || m < n_min || m > n_max) return 0.0;
        const double bound = std::pow(std::ldexp(1.0, -m), exponent);
        std::size_t bad = 0;
        for (std::size_t i = 0; i < paths; ++i)
            if (errors[i * levels() + static_cast<std::size_t>(m - n_min)] > bound) ++bad;
        return static_cast<double>(bad) / static_cast<double>(paths);
    }

    /// Empirical distribution of m0 = last violation + 1 (first compliant level).
    std::map<int, std::size_t> m0_histogram() const {
        std::map<int, std::size_t> hist;
        for (int v : last_violation) ++hist[v + 1];
        return hist;
    }
};

/// Follows each sample path across h_m = 2^-m, m = n_min..n_max, reusing the
/// same stream for a given path at every level.
inline RateCheckReport as_rate_check(const ExperimentConfig& cfg, double exponent,
                                     double epsilon_margin = 0.0) {
    cfg.validate();
    if (!(epsilon_margin >= 0.0)) throw std::domain_error("epsilon margin must be >= 0");
    RateCheckReport rep;
    rep.exponent = exponent - epsilon_margin;
    rep.n_min = cfg.n_min;
    rep.n_max = cfg.n_max;
    rep.paths = cfg.samples;
    rep.errors.assign(cfg.samples * rep.levels(), 0.0);
    rep.last_violation.assign(cfg.samples, cfg.n_min - 1);

    std::vector<TimeGrid> grids;
    for (int m = cfg.n_min; m <= cfg.n_max; ++m) grids.push_back(make_grid(cfg.problem.T, std::ldexp(1.0, -m)));
    std::vector<unsigned> rs(cfg.samples, 0);

    parallel_for(cfg.samples, cfg.threads, [&](std::size_t i) {
        const RandomStream stream = derive_stream(cfg.master_seed, i);
        for (std::size_t l = 0; l < grids.size(); ++l) {
            const SampleOutcome o = sample_path_error(cfg.problem, cfg.method, grids[l], stream);
            rep.errors[i * grids.size() + l] = o.error;
            rs[i] += o.reseeds;
            const int m = cfg.n_min + static_cast<int>(l);
            if (o.error > std::pow(grids[l].step(), rep.exponent)) rep.last_violation[i] = m;
        }
    });
    for (unsigned r : rs) rep.reseeds += r;
    return rep;
}

// ---------------------------------------------------------------------------
// Error constants and a-priori bounds

/// Right-hand side of the a-priori bound at t = T:
/// (|u0| + int_0^T Kbar) exp(int_0^T Kbar).
inline double apriori_sup_bound(const Problem& pb) {
    const auto& I = pb.field.regularity.growth_integral;
    if (!I) throw std::domain_error("problem '" + pb.label + "' declares no growth integral");
    return (pb.u0.norm() + *I) * std::exp(*I);
}

struct ConstantInputs {
    double cp = 10.0;  ///< BDG constant; no numeric value is known, diagnostic input
    double T = 1.0;
    double p = 2.0;
    double lipschitz_norm = 0.0;  ///< ||L||_{L^p}
    double growth_norm = 0.0;     ///< ||Kbar||_{L^p}
    std::optional<double> gamma;
    std::optional<double> lipschitz_const;  ///< L (Hölder regime)
    std::optional<double> growth_const;     ///< Kbar (Hölder regime)
    double sup_u = 0.0;
};

struct ConstantReport {
    ConstantInputs inputs;
    double c = 0.0;                ///< L^p constant for randomized Euler, Carathéodory regime
    std::optional<double> c_u;     ///< randomized Euler, Hölder regime
    std::optional<double> c_v;     ///< randomized two-stage method, Hölder regime
};

inline ConstantReport error_constants(const ConstantInputs& in) {
    if (!(in.p >= 2.0)) throw std::domain_error("p must be >= 2");
    if (!(in.T > 0.0)) throw std::domain_error("T must be positive");
    if (!(in.cp > 0.0)) throw std::domain_error("C_p must be positive");
    if (in.lipschitz_norm < 0.0 || in.growth_norm < 0.0 || in.sup_u < 0.0)
        throw std::domain_error("norms and sup bound must be nonnegative");

    const double p = in.p, T = in.T, one_u = 1.0 + in.sup_u;
    ConstantReport rep{in, 0.0, std::nullopt, std::nullopt};
    rep.c = std::pow(2.0, 1.0 - 1.0 / p) * std::pow(T, 0.5 - 1.0 / p) * in.growth_norm *
            std::exp(std::pow(2.0 * T, p - 1.0) * std::pow(in.lipschitz_norm, p) / p) *
            (2.0 * in.cp + std::sqrt(T) * in.lipschitz_norm) * one_u;

    if (in.gamma) {
        if (!in.lipschitz_const || !in.growth_const)
            throw std::domain_error("Hölder constants need L and Kbar");
        const double g = *in.gamma, L = *in.lipschitz_const, K = *in.growth_const;
        if (!(g > 0.0 && g <= 1.0)) throw std::domain_error("gamma must lie in (0,1]");
        const double hoelder = 2.0 + L * std::pow(T, 1.0 - g);
        rep.c_u = std::exp(L * T) * K * std::sqrt(T) * (in.cp * hoelder + L * std::sqrt(T)) * one_u;
        rep.c_v = std::exp(L * (1.0 + L) * T) * K * (in.cp * std::sqrt(T) + L * T) * hoelder * one_u;
    }
    return rep;
}

/// Constants for a built-in problem, with sup|u| from the a-priori bound.
inline ConstantReport error_constants_for(const Problem& pb, double cp) {
    const RegularityMeta& m = pb.field.regularity;
    if (!m.lipschitz_norm || !m.growth_norm)
        throw std::domain_error("problem '" + pb.label + "' has no finite L^p norms for p >= 2");
    ConstantInputs in;
    in.cp = cp;
    in.T = pb.T;
    in.p = m.p;
    in.lipschitz_norm = *m.lipschitz_norm;
    in.growth_norm = *m.growth_norm;
    in.gamma = m.hoelder_gamma;
    in.lipschitz_const = m.lipschitz_const;
    in.growth_const = m.growth_const;
    in.sup_u = apriori_sup_bound(pb);
    return error_constants(in);
}

// ---------------------------------------------------------------------------
// Quadrature statistics, divergence demo, timing

struct BiasReport {
    double mean_deviation = 0.0;  ///< mean of Q^N - int_0^{t_N} g
    double sample_std = 0.0;
    double lp_max_error = 0.0;    ///< L^p norm of max_n |E^n|
    std::size_t samples = 0;
    unsigned reseeds = 0;

    double z_score() const {
        return sample_std > 0.0 ? mean_deviation / (sample_std / std::sqrt(static_cast<double>(samples))) : 0.0;
    }
    bool within(double sigmas) const {
        return std::abs(mean_deviation) <= sigmas * sample_std / std::sqrt(static_cast<double>(samples));
    }
};

/// Repeated randomized Riemann sums of a state-independent problem's
/// right-hand side; the problem's exact solution minus u0 is the integral.
inline BiasReport quadrature_statistics(const Problem& pb, double h, std::size_t samples,
                                        std::uint64_t seed, double p = 2.0, unsigned threads = 0) {
    if (!pb.field.state_independent) throw std::domain_error("quadrature needs a state-independent problem");
    if (!pb.has_exact()) throw std::domain_error("quadrature check needs a known integral");
    if (samples < 2) throw std::domain_error("samples must be >= 2");
    const TimeGrid grid = make_grid(pb.T, h);
    const Integrand g{[&pb](double t) { return pb.field(t, pb.u0); }, pb.label};
    auto integral = [&pb](double t) { return pb.exact(t) - pb.u0; };
    const State target = integral(grid.last_node());

    std::vector<double> dev(samples), maxerr(samples);
    std::vector<unsigned> rs(samples, 0);
    parallel_for(samples, threads, [&](std::size_t i) {
        const RandomStream base = derive_stream(seed, i);
        for (unsigned attempt = 0; attempt <= kMaxReseeds; ++attempt) {
            RandomStream s = attempt == 0 ? base : base.reseeded(attempt);
            std::vector<double> taus(grid.n_steps());
            for (double& tau : taus) tau = s.next_tau();
            if (detail::draws_hit_exceptional(pb, grid, taus)) continue;
            try {
                const QuadraturePrefix q = randomized_riemann(g, grid, taus);
                dev[i] = q.final_value()[0] - target[0];
                maxerr[i] = quad_error_max(q, integral);
                rs[i] = attempt;
                return;
            } catch (const EvaluationError&) {
            }
        }
        throw SampleAbort("quadrature sample " + std::to_string(i) + " exhausted its re-seeds", i, -1);
    });

    BiasReport rep;
    rep.samples = samples;
    double mean = 0.0;
    for (double d : dev) mean += d;
    mean /= static_cast<double>(samples);
    double var = 0.0;
    for (double d : dev) var += (d - mean) * (d - mean);
    rep.mean_deviation = mean;
    rep.sample_std = std::sqrt(var / static_cast<double>(samples - 1));
    rep.lp_max_error = lp_from_errors(maxerr, p).error;
    for (unsigned r : rs) rep.reseeds += r;
    return rep;
}

struct AdversarialReport {
    double h = 0.0;
    double classical_error = 0.0;
    std::vector<double> randomized_errors;
    unsigned reseeds = 0;

    std::size_t exact_paths() const {
        return static_cast<std::size_t>(std::count(randomized_errors.begin(), randomized_errors.end(), 0.0));
    }
    double max_randomized_error() const {
        return randomized_errors.empty() ? 0.0
                                         : *std::max_element(randomized_errors.begin(), randomized_errors.end());
    }
};

/// Classical vs randomized Euler on the indicator of the classical method's
/// own evaluation nodes (T = 1).
inline AdversarialReport adversarial_demo(double h, std::size_t samples, std::uint64_t seed,
                                          unsigned threads = 0) {
    const TimeGrid grid = make_grid(1.0, h);
    const Problem pb = problem_adversarial_indicator(grid);
    AdversarialReport rep;
    rep.h = h;
    rep.classical_error =
        sample_path_error(pb, Method::classical_euler, grid, derive_stream(seed, 0)).error;
    rep.randomized_errors.assign(samples, 0.0);
    std::vector<unsigned> rs(samples, 0);
    parallel_for(samples, threads, [&](std::size_t i) {
        const SampleOutcome o = sample_path_error(pb, Method::rand_euler, grid, derive_stream(seed, i));
        rep.randomized_errors[i] = o.error;
        rs[i] = o.reseeds;
    });
    for (unsigned r : rs) rep.reseeds += r;
    return rep;
}

/// Median wall-clock seconds of one solve (after one warm-up run).
inline double median_solve_seconds(const Problem& pb, Method method, double h, int repeats = 5,
                                   std::uint64_t seed = 1) {
    const TimeGrid grid = make_grid(pb.T, h);
    auto once = [&](std::uint64_t i) {
        std::optional<RandomStream> s;
        if (is_randomized(method)) s = derive_stream(seed, i);
        const auto t0 = std::chrono::steady_clock::now();
        const Trajectory traj = solve(pb.field, pb.u0, grid, method, s);
        const auto t1 = std::chrono::steady_clock::now();
        if (!traj.states.back().finite()) throw std::logic_error("non-finite state");
        return std::chrono::duration<double>(t1 - t0).count();
    };
    once(0);
    std::vector<double> times;
    for (int r = 0; r < repeats; ++r) times.push_back(once(static_cast<std::uint64_t>(r) + 1));
    std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
    return times[times.size() / 2];
}

}  // namespace rrk

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rrk/core.hpp"
#include "rrk/random.hpp"

namespace rrk {

enum class Method { classical_euler, rand_euler, rand_rk2 };

constexpr bool is_randomized(Method m) noexcept { return m != Method::classical_euler; }

/// CLI spelling: euler, rand-euler, rand-rk2.
inline std::string_view method_name(Method m) noexcept {
    switch (m) {
        case Method::classical_euler: return "euler";
        case Method::rand_euler: return "rand-euler";
        case Method::rand_rk2: return "rand-rk2";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    if (s == "euler" || s == "classical_euler") return Method::classical_euler;
    if (s == "rand-euler" || s == "rand_euler") return Method::rand_euler;
    if (s == "rand-rk2" || s == "rand_rk2") return Method::rand_rk2;
    throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

struct Trajectory {
    TimeGrid grid;
    std::vector<State> states;  ///< U^0..U^N
    std::vector<double> draws;  ///< tau_1..tau_N; empty for classical Euler
};

/// Explicit Runge-Kutta tableau with at most two stages.
struct ExplicitTableau {
    std::size_t stages = 1;
    double c[2] = {0.0, 0.0};
    double a[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    double b[2] = {0.0, 0.0};

    /// c = theta, b = 1.
    static ExplicitTableau euler_theta(double theta) noexcept {
        ExplicitTableau tab;
        tab.stages = 1;
        tab.c[0] = theta;
        tab.b[0] = 1.0;
        return tab;
    }

    /// c = (0, theta), a21 = theta, b = (0, 1).
    static ExplicitTableau two_stage_theta(double theta) noexcept {
        ExplicitTableau tab;
        tab.stages = 2;
        tab.c[1] = theta;
        tab.a[1][0] = theta;
        tab.b[1] = 1.0;
        return tab;
    }
};

/// One step of an explicit tableau. Zero coefficients are skipped so that the
/// result rounds exactly like the hand-written schemes below.
inline State step_tableau(const VectorField& f, const ExplicitTableau& tab, double t_prev,
                          const State& x, double h, std::ptrdiff_t step = -1) {
    State k[2];
    for (std::size_t i = 0; i < tab.stages; ++i) {
        State stage = x;
        for (std::size_t l = 0; l < i; ++l)
            if (tab.a[i][l] != 0.0) stage = axpy(stage, h, tab.a[i][l] * k[l]);
        k[i] = detail::checked_eval(f, t_prev + tab.c[i] * h, stage, step);
    }
    State out = x;
    for (std::size_t i = 0; i < tab.stages; ++i)
        if (tab.b[i] != 0.0) out = axpy(out, h, tab.b[i] * k[i]);
    return out;
}

/// x + h f(t + theta h, x).
inline State step_euler_theta(const VectorField& f, double t_prev, const State& x, double h,
                              double theta, std::ptrdiff_t step = -1) {
    return axpy(x, h, detail::checked_eval(f, t_prev + theta * h, x, step));
}

/// Predictor to t + theta h, then a full step evaluated there:
///   stage = x + h (theta f(t, x)),  x + h f(t + theta h, stage).
inline State step_rk2_theta(const VectorField& f, double t_prev, const State& x, double h,
                            double theta, std::ptrdiff_t step = -1) {
    const State k1 = detail::checked_eval(f, t_prev, x, step);
    const State stage = axpy(x, h, theta * k1);
    return axpy(x, h, detail::checked_eval(f, t_prev + theta * h, stage, step));
}

namespace detail {

inline State advance(const VectorField& f, Method method, double t_prev, const State& x,
                     double h, double tau, std::size_t j) {
    const auto step = static_cast<std::ptrdiff_t>(j);
    switch (method) {
        case Method::classical_euler: return step_euler_theta(f, t_prev, x, h, 0.0, step);
        case Method::rand_euler: return step_euler_theta(f, t_prev, x, h, tau, step);
        case Method::rand_rk2: return step_rk2_theta(f, t_prev, x, h, tau, step);
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

/// Runs a method with prescribed draws (one per step, ignored by classical Euler
/// and then expected to be empty).
inline Trajectory solve_with_draws(const VectorField& f, const State& u0, const TimeGrid& grid,
                                   Method method, std::span<const double> taus) {
    const std::size_t n = grid.n_steps();
    if (is_randomized(method) && taus.size() != n)
        throw std::invalid_argument("randomized methods need exactly one draw per step");
    if (!is_randomized(method) && !taus.empty())
        throw std::invalid_argument("classical Euler takes no draws");
    if (!u0.finite()) throw std::domain_error("initial condition is not finite");
    for (double tau : taus)
        if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("draws must lie in [0,1]");

    Trajectory traj{grid, {}, std::vector<double>(taus.begin(), taus.end())};
    traj.states.reserve(n + 1);
    traj.states.push_back(u0);
    const double h = grid.step();
    for (std::size_t j = 1; j <= n; ++j) {
        const double tau = is_randomized(method) ? taus[j - 1] : 0.0;
        State next = detail::advance(f, method, grid.node(j - 1), traj.states.back(), h, tau, j);
        if (!next.finite())
            throw OverflowError("state became non-finite at step " + std::to_string(j) +
                                    " (t=" + detail::format_time(grid.node(j)) +
                                    "); h*L too large or problem misposed",
                                static_cast<std::ptrdiff_t>(j));
        traj.states.push_back(std::move(next));
    }
    return traj;
}

/// Randomized methods consume exactly N draws from `stream`, in step order.
inline Trajectory solve(const VectorField& f, const State& u0, const TimeGrid& grid,
                        Method method, RandomStream* stream) {
    if (is_randomized(method) != (stream != nullptr))
        throw std::invalid_argument("a random stream is required iff the method is randomized");
    if (!is_randomized(method)) return solve_with_draws(f, u0, grid, method, {});
    std::vector<double> taus(grid.n_steps());
    for (double& tau : taus) tau = stream->next_tau();
    return solve_with_draws(f, u0, grid, method, taus);
}

inline Trajectory solve(const VectorField& f, const State& u0, const TimeGrid& grid,
                        Method method, std::optional<RandomStream> stream = std::nullopt) {
    return solve(f, u0, grid, method, stream ? &*stream : nullptr);
}

}  // namespace rrk

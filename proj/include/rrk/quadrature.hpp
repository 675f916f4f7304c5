#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrk/core.hpp"
#include "rrk/random.hpp"

namespace rrk {

struct Integrand {
    std::function<State(double)> eval;
    std::string label;
};

/// Prefix sums Q^0..Q^N of a Riemann-type rule on a grid (Q^0 = 0), together
/// with the draws that produced them (empty for deterministic rules).
struct QuadraturePrefix {
    TimeGrid grid;
    std::vector<State> partials;
    std::vector<double> draws;

    const State& final_value() const { return partials.back(); }
};

namespace detail {

inline State checked_integrand(const Integrand& g, double t, std::size_t j) {
    State v;
    try {
        v = g.eval(t);
    } catch (const EvaluationError& e) {
        throw EvaluationError(e.what(), t, static_cast<std::ptrdiff_t>(j));
    }
    if (!v.finite())
        throw EvaluationError(g.label + " is not finite at t=" + format_time(t), t,
                              static_cast<std::ptrdiff_t>(j));
    return v;
}

}  // namespace detail

/// Randomized Riemann sum with prescribed offsets tau_1..tau_N in [0,1]:
/// Q^n = h * sum_{j<=n} g(t_{j-1} + tau_j h).
inline QuadraturePrefix randomized_riemann(const Integrand& g, const TimeGrid& grid,
                                           std::span<const double> taus) {
    const std::size_t n = grid.n_steps();
    if (taus.size() != n) throw std::invalid_argument("need exactly one draw per subinterval");
    for (double tau : taus)
        if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("draws must lie in [0,1]");
    const double h = grid.step();

    QuadraturePrefix q{grid, {}, std::vector<double>(taus.begin(), taus.end())};
    q.partials.reserve(n + 1);
    for (std::size_t j = 1; j <= n; ++j) {
        const double t = grid.node(j - 1) + taus[j - 1] * h;
        const State v = detail::checked_integrand(g, t, j);
        if (j == 1) q.partials.emplace_back(v.dim(), 0.0);
        q.partials.push_back(axpy(q.partials.back(), h, v));
    }
    return q;
}

/// Consumes exactly N draws from the stream, one per subinterval in order.
inline QuadraturePrefix randomized_riemann(const Integrand& g, const TimeGrid& grid,
                                           RandomStream& stream) {
    std::vector<double> taus(grid.n_steps());
    for (double& tau : taus) tau = stream.next_tau();
    return randomized_riemann(g, grid, taus);
}

/// Left-endpoint Riemann sum.
inline QuadraturePrefix left_riemann(const Integrand& g, const TimeGrid& grid) {
    const std::size_t n = grid.n_steps();
    const double h = grid.step();
    QuadraturePrefix q{grid, {}, {}};
    q.partials.reserve(n + 1);
    for (std::size_t j = 1; j <= n; ++j) {
        const State v = detail::checked_integrand(g, grid.node(j - 1), j);
        if (j == 1) q.partials.emplace_back(v.dim(), 0.0);
        q.partials.push_back(axpy(q.partials.back(), h, v));
    }
    return q;
}

/// max_{n=1..N} |int_0^{t_n} g - Q^n|.
inline double quad_error_max(const QuadraturePrefix& q,
                             const std::function<State(double)>& true_integral) {
    double worst = 0.0;
    for (std::size_t n = 1; n < q.partials.size(); ++n)
        worst = std::max(worst, distance(true_integral(q.grid.node(n)), q.partials[n]));
    return worst;
}

}  // namespace rrk

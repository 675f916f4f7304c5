#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrk/core.hpp"

namespace rrk {

enum class Regime { caratheodory, hoelder, adversarial };

/// Initial value problem u' = f(t,u), u(0) = u0 on [0,T], with an exact
/// solution where one is known in closed form.
struct Problem {
    std::string name;   ///< short CLI name
    std::string label;  ///< name plus parameters, no commas
    VectorField field;
    State u0;
    double T = 1.0;
    std::function<State(double)> exact;  ///< empty if unknown
    Regime regime = Regime::caratheodory;
    /// Null set of times where f is singular or deliberately exceptional;
    /// a random evaluation landing here is a collision. Empty if none.
    std::function<bool(double)> exceptional;

    bool has_exact() const noexcept { return static_cast<bool>(exact); }
};

namespace detail {

inline std::string fmt_param(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

/// Three-valued sign with sgn(0) = 0.
constexpr double sgn(double x) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

/// u' = (T - t)^{-1/gamma}, u(0) = 0. Integrable singularity at t = T.
inline Problem problem_singular_time(double gamma, double T = 1.0) {
    if (!(gamma > 1.0)) throw std::domain_error("gamma must exceed 1");
    if (!(T > 0.0)) throw std::domain_error("T must be positive");
    const double r = 1.0 / gamma;
    const double e = 1.0 - r;

    Problem pb;
    pb.name = "singular";
    pb.label = "singular[gamma=" + detail::fmt_param(gamma) + "]";
    pb.T = T;
    pb.u0 = State{0.0};
    pb.regime = Regime::caratheodory;
    pb.exceptional = [T](double t) { return t == T; };
    pb.field.state_independent = true;
    pb.field.eval = [T, r](double t, const State&) {
        if (!(t < T)) throw EvaluationError("singular point t=T", t);
        return State{std::pow(T - t, -r)};
    };
    pb.exact = [T, e](double t) {
        return State{(std::pow(T, e) - std::pow(T - t, e)) / e};
    };

    // Kbar(t) = (T-t)^{-1/gamma} is in L^q for q < gamma only.
    RegularityMeta& m = pb.field.regularity;
    m.lipschitz_norm = 0.0;
    m.growth_integral = std::pow(T, e) / e;
    if (gamma > 2.0) {
        m.p = 0.5 * (2.0 + gamma);
        const double s = 1.0 - m.p / gamma;
        m.growth_norm = std::pow(std::pow(T, s) / s, 1.0 / m.p);
    } else {
        m.p = 2.0;  // growth_norm stays unknown: Kbar is not square integrable
    }
    return pb;
}

/// u' = g(t) u, u(0) = 1, with g piecewise constant and three jumps at T/4,
/// T/2, 3T/4. Slopes on the quarters: -1, -0.8, -0.4, +1.
inline Problem problem_jump_linear(double T = 1.0) {
    if (!(T > 0.0)) throw std::domain_error("T must be positive");
    auto g = [T](double t) {
        using detail::sgn;
        return -0.1 * sgn(0.25 * T - t) - 0.2 * sgn(0.5 * T - t) - 0.7 * sgn(0.75 * T - t);
    };

    Problem pb;
    pb.name = "jump";
    pb.label = "jump";
    pb.T = T;
    pb.u0 = State{1.0};
    pb.regime = Regime::caratheodory;
    pb.field.eval = [g](double t, const State& x) { return g(t) * x; };
    pb.exact = [T](double t) {
        static constexpr double slope[4] = {-1.0, -0.8, -0.4, 1.0};
        const double q = 0.25 * T;
        double acc = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double lo = i * q;
            const double hi = (i == 3) ? T : (i + 1) * q;
            if (t <= lo) break;
            acc += slope[i] * (std::min(t, hi) - lo);
        }
        return State{std::exp(acc)};
    };

    // L = Kbar = |g|; K = |f(t,0)| = 0.
    RegularityMeta& m = pb.field.regularity;
    m.p = 2.0;
    const double sq = 1.0 + 0.64 + 0.16 + 1.0;
    m.lipschitz_norm = std::sqrt(0.25 * T * sq);
    m.growth_norm = m.lipschitz_norm;
    m.growth_integral = 0.25 * T * (1.0 + 0.8 + 0.4 + 1.0);
    return pb;
}

/// u' = |t - T/2|^{-alpha} u, u(0) = 1: unbounded Lipschitz coefficient that is
/// still p-integrable for p < 1/alpha.
inline Problem problem_singular_lipschitz(double alpha, double T = 1.0) {
    if (!(alpha > 0.0 && alpha < 0.5)) throw std::domain_error("alpha must lie in (0, 1/2)");
    if (!(T > 0.0)) throw std::domain_error("T must be positive");
    const double mid = 0.5 * T;
    const double e = 1.0 - alpha;
    // Antiderivative of |s - T/2|^{-alpha} from 0.
    auto H = [mid, e](double t) {
        if (t <= mid) return (std::pow(mid, e) - std::pow(mid - t, e)) / e;
        return (std::pow(mid, e) + std::pow(t - mid, e)) / e;
    };

    Problem pb;
    pb.name = "singular-lip";
    pb.label = "singular-lip[alpha=" + detail::fmt_param(alpha) + "]";
    pb.T = T;
    pb.u0 = State{1.0};
    pb.regime = Regime::caratheodory;
    pb.exceptional = [mid](double t) { return t == mid; };
    pb.field.eval = [mid, alpha](double t, const State& x) {
        if (t == mid) throw EvaluationError("singular point t=T/2", t);
        return std::pow(std::abs(t - mid), -alpha) * x;
    };
    pb.exact = [H](double t) { return State{std::exp(H(t))}; };

    RegularityMeta& m = pb.field.regularity;
    m.p = 0.5 * (2.0 + 1.0 / alpha);
    const double s = 1.0 - m.p * alpha;
    m.lipschitz_norm = std::pow(2.0 * std::pow(mid, s) / s, 1.0 / m.p);
    m.growth_norm = m.lipschitz_norm;
    m.growth_integral = H(T);
    return pb;
}

/// Manufactured problem with exact solution v(t) = t^{1+gamma}/(1+gamma):
/// f(t,x) = t^gamma + lambda (x - v(t)), u(0) = 0. The right-hand side is
/// gamma-Hölder in time and |lambda|-Lipschitz in state.
inline Problem problem_manufactured_hoelder(double gamma, double lambda, double T = 1.0) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::domain_error("gamma must lie in (0, 1]");
    if (!std::isfinite(lambda)) throw std::domain_error("lambda must be finite");
    if (!(T > 0.0)) throw std::domain_error("T must be positive");
    auto v = [gamma](double t) { return std::pow(t, 1.0 + gamma) / (1.0 + gamma); };

    Problem pb;
    pb.name = "manufactured";
    pb.label = "manufactured[gamma=" + detail::fmt_param(gamma) +
               " lambda=" + detail::fmt_param(lambda) + "]";
    pb.T = T;
    pb.u0 = State{0.0};
    pb.regime = Regime::hoelder;
    pb.field.state_independent = (lambda == 0.0);
    pb.field.eval = [gamma, lambda, v](double t, const State& x) {
        return State{std::pow(t, gamma) + lambda * (x[0] - v(t))};
    };
    pb.exact = [v](double t) { return State{v(t)}; };

    // |t1^g - t2^g| <= |t1-t2|^g and |v(t1)-v(t2)| <= T^g |t1-t2| <= T |t1-t2|^g.
    const double L = std::abs(lambda);
    const double K = 1.0 + L * T;
    const double kbar = std::max(L, K * std::pow(T, gamma));  // |f(0,0)| = 0
    RegularityMeta& m = pb.field.regularity;
    m.p = 2.0;
    m.hoelder_gamma = gamma;
    m.lipschitz_const = L;
    m.hoelder_const = K;
    m.growth_const = kbar;
    m.lipschitz_norm = L * std::sqrt(T);
    m.growth_norm = kbar * std::sqrt(T);
    m.growth_integral = kbar * T;
    return pb;
}

/// Indicator of the left grid nodes of `grid`: invisible to any method that
/// samples f only there, while the exact solution is identically zero.
inline Problem problem_adversarial_indicator(const TimeGrid& grid) {
    Problem pb;
    pb.name = "adversarial";
    pb.label = "adversarial[h=" + detail::fmt_param(grid.step()) + "]";
    pb.T = grid.final_time();
    pb.u0 = State{0.0};
    pb.regime = Regime::adversarial;
    pb.field.state_independent = true;
    const double h = grid.step();
    const double n = static_cast<double>(grid.n_steps());
    auto in_b = [h, n](double t) {
        const double j = std::nearbyint(t / h);
        return j >= 0.0 && j < n && j * h == t;
    };
    pb.exceptional = in_b;
    pb.field.eval = [in_b](double t, const State&) { return State{in_b(t) ? 1.0 : 0.0}; };
    pb.exact = [](double) { return State{0.0}; };

    RegularityMeta& m = pb.field.regularity;
    m.p = 2.0;
    m.lipschitz_norm = 0.0;
    m.growth_norm = 0.0;  // Kbar is nonzero only on a null set
    m.growth_integral = 0.0;
    return pb;
}

}  // namespace rrk

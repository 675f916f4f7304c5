#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrk {

/// Raised when a function is evaluated at a point where it is not finite
/// (a singular abscissa, or a non-finite return value).
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(const std::string& what, double t, std::ptrdiff_t step = -1)
        : std::runtime_error(what), t_(t), step_(step) {}

    double time() const noexcept { return t_; }
    /// Step index j of the failing update, or -1 outside a solver.
    std::ptrdiff_t step() const noexcept { return step_; }

private:
    double t_;
    std::ptrdiff_t step_;
};

/// Raised when an iterate stops being finite.
class OverflowError : public std::runtime_error {
public:
    OverflowError(const std::string& what, std::ptrdiff_t step)
        : std::runtime_error(what), step_(step) {}

    std::ptrdiff_t step() const noexcept { return step_; }

private:
    std::ptrdiff_t step_;
};

/// Point in R^d. Euclidean norm throughout.
class State {
public:
    State() = default;
    explicit State(std::size_t dim, double value = 0.0) : v_(dim, value) {}
    State(std::initializer_list<double> values) : v_(values) {}
    explicit State(std::vector<double> values) : v_(std::move(values)) {}

    std::size_t dim() const noexcept { return v_.size(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    std::span<const double> components() const noexcept { return v_; }

    bool finite() const noexcept {
        for (double c : v_)
            if (!std::isfinite(c)) return false;
        return true;
    }

    double norm() const noexcept {
        double s = 0.0;
        for (double c : v_) s += c * c;
        return std::sqrt(s);
    }

    State& operator+=(const State& o) {
        check_dim(o);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    State& operator-=(const State& o) {
        check_dim(o);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }
    State& operator*=(double s) noexcept {
        for (double& c : v_) c *= s;
        return *this;
    }

    friend State operator+(State a, const State& b) { return a += b; }
    friend State operator-(State a, const State& b) { return a -= b; }
    friend State operator*(double s, State a) { return a *= s; }
    friend State operator*(State a, double s) { return a *= s; }
    friend bool operator==(const State&, const State&) = default;

private:
    void check_dim(const State& o) const {
        if (o.v_.size() != v_.size())
            throw std::invalid_argument("State dimension mismatch");
    }

    std::vector<double> v_;
};

/// x + h * k, written so every solver and the quadrature rule round identically.
inline State axpy(const State& x, double h, const State& k) {
    State out = x;
    for (std::size_t i = 0; i < out.dim(); ++i) out[i] = x[i] + h * k[i];
    return out;
}

inline double distance(const State& a, const State& b) { return (a - b).norm(); }

/// Uniform grid t_j = j*h, j = 0..N, with N*h <= T < (N+1)*h.
/// Nodes are always computed as j*h, never accumulated.
class TimeGrid {
public:
    double final_time() const noexcept { return T_; }
    double step() const noexcept { return h_; }
    std::size_t n_steps() const noexcept { return n_; }
    double node(std::size_t j) const noexcept { return static_cast<double>(j) * h_; }
    double last_node() const noexcept { return node(n_); }

    std::vector<double> nodes() const {
        std::vector<double> out(n_ + 1);
        for (std::size_t j = 0; j <= n_; ++j) out[j] = node(j);
        return out;
    }

    friend TimeGrid make_grid(double T, double h);

private:
    TimeGrid(double T, double h, std::size_t n) : T_(T), h_(h), n_(n) {}

    double T_;
    double h_;
    std::size_t n_;
};

inline TimeGrid make_grid(double T, double h) {
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::domain_error("final time T must be positive and finite");
    if (!(h > 0.0) || !(h < 1.0))
        throw std::domain_error("step size h must lie in (0,1)");
    double q = std::floor(T / h);
    if (q > 1e12) throw std::domain_error("too many steps for T/h");
    auto n = static_cast<std::size_t>(q);
    // T/h rounds; fix the two-sided inequality in floating point.
    while (n > 0 && static_cast<double>(n) * h > T) --n;
    while (static_cast<double>(n + 1) * h <= T) ++n;
    if (n == 0) throw std::domain_error("step size exceeds final time");
    return TimeGrid(T, h, n);
}

/// Regularity data declared by a right-hand side. Norms are over [0,T].
///
/// Carathéodory regime: |f(t,x1)-f(t,x2)| <= L(t)|x1-x2|, |f(t,0)| <= K(t),
/// Kbar = max(K, L). Hölder regime: constant L, time-Hölder constant K with
/// exponent gamma, and a constant growth bound Kbar.
struct RegularityMeta {
    double p = 2.0;                              ///< integrability exponent, >= 2
    std::optional<double> lipschitz_norm;        ///< ||L||_{L^p}
    std::optional<double> growth_norm;           ///< ||Kbar||_{L^p}
    std::optional<double> growth_integral;       ///< int_0^T Kbar
    std::optional<double> hoelder_gamma;
    std::optional<double> lipschitz_const;
    std::optional<double> hoelder_const;
    std::optional<double> growth_const;          ///< constant Kbar (Hölder regime)

    void validate() const {
        if (!(p >= 2.0)) throw std::domain_error("integrability exponent p must be >= 2");
        if (hoelder_gamma) {
            if (!(*hoelder_gamma > 0.0 && *hoelder_gamma <= 1.0))
                throw std::domain_error("Hölder exponent must lie in (0,1]");
            if (!lipschitz_const || !hoelder_const)
                throw std::domain_error("Hölder regime needs Lipschitz and Hölder constants");
        }
    }
};

/// Right-hand side f(t, x) of u' = f(t, u).
struct VectorField {
    std::function<State(double, const State&)> eval;
    RegularityMeta regularity;
    bool state_independent = false;

    State operator()(double t, const State& x) const { return eval(t, x); }
};

namespace detail {

inline std::string format_time(double t) {
    std::ostringstream os;
    os.precision(17);
    os << t;
    return os.str();
}

inline State checked_eval(const VectorField& f, double t, const State& x, std::ptrdiff_t step) {
    State k;
    try {
        k = f(t, x);
    } catch (const EvaluationError& e) {
        throw EvaluationError(e.what(), t, step);
    }
    if (!k.finite())
        throw EvaluationError("right-hand side is not finite at t=" + format_time(t), t, step);
    return k;
}

}  // namespace detail

}  // namespace rrk

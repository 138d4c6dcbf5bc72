#ifndef IRF_DEBIAS_HPP
#define IRF_DEBIAS_HPP

#include <cstddef>

#include "irf/errors.hpp"

// Odds-ratio correction between the original model (class-1 prior p) and the
// rebalanced model produced by under-sampling (class-1 prior p*). Conditional
// covariate laws are shared, so the two regression functions have
// proportional odds and one maps onto the other by a monotone rational map.

namespace irf {

/// Class-1 priors of the original (p) and rebalanced (p_star) models.
struct PriorPair {
    double p = 0.5;
    double p_star = 0.5;

    PriorPair() = default;
    PriorPair(double p_, double p_star_) : p(p_), p_star(p_star_) {
        require(p > 0.0 && p < 1.0, ErrorKind::OutOfRange, "p must lie in (0,1)");
        require(p_star > 0.0 && p_star < 1.0, ErrorKind::OutOfRange, "p_star must lie in (0,1)");
    }
};

/// Class and subsample sizes feeding the plug-in map g_n.
struct EmpiricalPriors {
    std::size_t n0 = 1;
    std::size_t n1 = 1;
    std::size_t s0 = 1;
    std::size_t s1 = 1;

    EmpiricalPriors() = default;
    EmpiricalPriors(std::size_t n0_, std::size_t n1_, std::size_t s0_, std::size_t s1_)
        : n0(n0_), n1(n1_), s0(s0_), s1(s1_) {
        require(n0 >= 1 && n1 >= 1 && s0 >= 1 && s1 >= 1, ErrorKind::InvalidArgument,
                "n0, n1, s0, s1 must all be >= 1");
    }

    double p_hat() const noexcept { return static_cast<double>(n1) / static_cast<double>(n0 + n1); }
    double p_star_hat() const noexcept { return static_cast<double>(s1) / static_cast<double>(s0 + s1); }
    PriorPair priors() const { return {p_hat(), p_star_hat()}; }
};

namespace detail {
inline void check_unit(double z, const char* what) {
    require(z >= 0.0 && z <= 1.0, ErrorKind::OutOfRange, what);
}
}  // namespace detail

/// z / (1 - z).
inline double odds(double z) {
    if (z == 1.0) {
        fail(ErrorKind::OddsAtOne, "odds of probability 1 is infinite");
    }
    require(z >= 0.0 && z < 1.0, ErrorKind::OutOfRange, "odds needs z in [0,1)");
    return z / (1.0 - z);
}

/// Density ratio R(x,p) = odds(p) / odds(mu(x)).
inline double odds_ratio_R(double mu_x, double p) {
    if (mu_x == 0.0 || mu_x == 1.0) {
        fail(ErrorKind::DegenerateMu, "odds ratio undefined at mu in {0,1}");
    }
    require(mu_x > 0.0 && mu_x < 1.0, ErrorKind::OutOfRange, "mu must lie in (0,1)");
    require(p > 0.0 && p < 1.0, ErrorKind::OutOfRange, "p must lie in (0,1)");
    return (p / (1.0 - p)) * ((1.0 - mu_x) / mu_x);
}

/// Maps the rebalanced regression value back to the original model.
/// The closed rational form is exact at both endpoints: g(0) = 0, g(1) = 1.
inline double g(double z, const PriorPair& pr) {
    detail::check_unit(z, "g needs z in [0,1]");
    const double up = (1.0 - pr.p_star) * pr.p * z;
    return up / (pr.p_star * (1.0 - pr.p) * (1.0 - z) + up);
}

/// Inverse of g: original regression value to the rebalanced one.
inline double g_inv(double z, const PriorPair& pr) {
    detail::check_unit(z, "g_inv needs z in [0,1]");
    const double up = pr.p_star * (1.0 - pr.p) * z;
    return up / (pr.p * (1.0 - pr.p_star) * (1.0 - z) + up);
}

/// Plug-in g with p and p* replaced by n1/(n0+n1) and s1/(s0+s1), written in
/// integer-count form.
inline double g_n(double z, const EmpiricalPriors& emp) {
    detail::check_unit(z, "g_n needs z in [0,1]");
    const double a = static_cast<double>(emp.n1) * static_cast<double>(emp.s0) * z;
    const double b = static_cast<double>(emp.n0) * static_cast<double>(emp.s1) * (1.0 - z);
    return a / (b + a);
}

}  // namespace irf

#endif  // IRF_DEBIAS_HPP

#ifndef IRF_THEORY_HPP
#define IRF_THEORY_HPP

#include <cmath>
#include <cstddef>

#include "irf/debias.hpp"
#include "irf/errors.hpp"

// Leading-order asymptotic variances of the bagged estimators. Remainder
// terms of order s^(-1/d) relative are dropped.

namespace irf {

namespace detail {
inline void check_open_unit(double v, const char* what) {
    require(v > 0.0 && v < 1.0, ErrorKind::OutOfRange, what);
}
inline void check_closed_unit(double v, const char* what) {
    require(v >= 0.0 && v <= 1.0, ErrorKind::OutOfRange, what);
}
}  // namespace detail

/// V1^s ~ mu(1-mu)/(2s) for the subsampled 1-NN.
inline double v1s_approx(double mu, std::size_t s) {
    detail::check_closed_unit(mu, "mu must lie in [0,1]");
    require(s >= 1, ErrorKind::InvalidArgument, "s must be >= 1");
    return mu * (1.0 - mu) / (2.0 * static_cast<double>(s));
}

struct V1Pair {
    double v10 = 0.0;
    double v11 = 0.0;
};

/// Class-wise projection variances of the under-sampled 1-NN, s = s0 + s1.
inline V1Pair v10_v11_approx(double mu_star, double p_star, std::size_t s) {
    detail::check_closed_unit(mu_star, "mu_star must lie in [0,1]");
    detail::check_open_unit(p_star, "p_star must lie in (0,1)");
    require(s >= 1, ErrorKind::InvalidArgument, "s must be >= 1");
    const double two_s = 2.0 * static_cast<double>(s);
    return {mu_star * mu_star * (1.0 - mu_star) / (two_s * (1.0 - p_star)),
            mu_star * (1.0 - mu_star) * (1.0 - mu_star) / (two_s * p_star)};
}

/// Limit variance of sqrt(2n/s) (estimate - mu) for subsampling.
inline double clt_var_sub(double mu) {
    detail::check_closed_unit(mu, "mu must lie in [0,1]");
    return mu * (1.0 - mu);
}

/// Limit variance of sqrt(2n/s) (estimate - mu_star) for under-sampling.
inline double clt_var_under(double mu_star, double p, double p_star) {
    detail::check_closed_unit(mu_star, "mu_star must lie in [0,1]");
    detail::check_open_unit(p, "p must lie in (0,1)");
    detail::check_open_unit(p_star, "p_star must lie in (0,1)");
    return mu_star * (1.0 - mu_star) * ((1.0 - p_star) * mu_star / (1.0 - p) + p_star * (1.0 - mu_star) / p);
}

namespace detail {
// (1-p) p* (1-mu) + p (1-p*) mu, arranged so it reduces to (1-p) p exactly when p* = p.
inline double odds_denominator(double mu, double p, double p_star) {
    const double a = (1.0 - p) * p_star;
    const double b = p * (1.0 - p_star);
    return a + (b - a) * mu;
}
}  // namespace detail

/// Squared derivative of g at g^{-1}(mu).
inline double v_star(double mu, double p, double p_star) {
    detail::check_closed_unit(mu, "mu must lie in [0,1]");
    detail::check_open_unit(p, "p must lie in (0,1)");
    detail::check_open_unit(p_star, "p_star must lie in (0,1)");
    const double num = ((1.0 - p) * p_star) * (p * (1.0 - p_star));
    const double den = detail::odds_denominator(mu, p, p_star);
    const double den2 = den * den;
    return num * num / (den2 * den2);
}

/// Limit variance of sqrt(2n/s) (estimate - mu) for importance sampling.
inline double clt_var_is(double mu, double p, double p_star) {
    detail::check_closed_unit(mu, "mu must lie in [0,1]");
    detail::check_open_unit(p, "p must lie in (0,1)");
    detail::check_open_unit(p_star, "p_star must lie in (0,1)");
    const double a = p * (1.0 - p);
    const double b = p_star * (1.0 - p_star);
    const double den = detail::odds_denominator(mu, p, p_star);
    return std::pow(a, 3) * std::pow(b, 4) * mu * (1.0 - mu) / std::pow(den, 7);
}

/// Variance of the Hajek projection, s^2 V1^s / n.
inline double hajek_var_sub(double v1s, std::size_t n, std::size_t s) {
    require(n >= 1 && s >= 1, ErrorKind::InvalidArgument, "sizes must be >= 1");
    const double sd = static_cast<double>(s);
    return sd * sd * v1s / static_cast<double>(n);
}

inline double hajek_var_under(double v10, double v11, std::size_t n0, std::size_t n1, std::size_t s0,
                              std::size_t s1) {
    require(n0 >= 1 && n1 >= 1 && s0 >= 1 && s1 >= 1, ErrorKind::InvalidArgument, "sizes must be >= 1");
    const double a = static_cast<double>(s0);
    const double b = static_cast<double>(s1);
    return a * a * v10 / static_cast<double>(n0) + b * b * v11 / static_cast<double>(n1);
}

/// Throws ZeroTheoryVariance when a standardization would divide by zero.
inline double require_positive_variance(double v) {
    if (!(v > 0.0)) {
        fail(ErrorKind::ZeroTheoryVariance, "limit variance is zero at this point (mu in {0,1})");
    }
    return v;
}

}  // namespace irf

#endif  // IRF_THEORY_HPP

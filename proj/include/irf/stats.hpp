#ifndef IRF_STATS_HPP
#define IRF_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "irf/errors.hpp"

namespace irf {

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double mean(std::span<const double> v) {
    require(!v.empty(), ErrorKind::InvalidArgument, "mean of an empty sample");
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double stddev(std::span<const double> v) {
    require(v.size() >= 2, ErrorKind::InvalidArgument, "stddev needs at least two values");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Fraction of standardized values with |z| <= 1.96.
inline double coverage95(std::span<const double> z) {
    require(!z.empty(), ErrorKind::InvalidArgument, "coverage of an empty sample");
    std::size_t hits = 0;
    for (double x : z) {
        hits += std::abs(x) <= 1.96 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(z.size());
}

/// Kolmogorov-Smirnov distance between the sample and N(0,1).
inline double ks_normal(std::span<const double> v) {
    require(!v.empty(), ErrorKind::InvalidArgument, "KS of an empty sample");
    std::vector<double> x(v.begin(), v.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = normal_cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Two-sample Kolmogorov-Smirnov distance.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    require(!a.empty() && !b.empty(), ErrorKind::InvalidArgument, "KS of an empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size());
    const double m = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double t = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == t) {
            ++i;
        }
        while (j < y.size() && y[j] == t) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return d;
}

namespace detail {
inline double ks_coefficient(double alpha) {
    if (alpha == 0.01) {
        return 1.63;
    }
    if (alpha == 0.05) {
        return 1.36;
    }
    fail(ErrorKind::InvalidArgument, "KS critical values are tabulated for alpha 0.01 and 0.05 only");
}
}  // namespace detail

/// Asymptotic one-sample critical value c(alpha) / sqrt(n).
inline double ks_critical(double alpha, std::size_t n) {
    require(n >= 1, ErrorKind::InvalidArgument, "n must be >= 1");
    return detail::ks_coefficient(alpha) / std::sqrt(static_cast<double>(n));
}

/// Asymptotic two-sample critical value c(alpha) sqrt((n + m) / (n m)).
inline double ks_critical_two_sample(double alpha, std::size_t n, std::size_t m) {
    require(n >= 1 && m >= 1, ErrorKind::InvalidArgument, "sizes must be >= 1");
    const double a = static_cast<double>(n);
    const double b = static_cast<double>(m);
    return detail::ks_coefficient(alpha) * std::sqrt((a + b) / (a * b));
}

}  // namespace irf

#endif  // IRF_STATS_HPP

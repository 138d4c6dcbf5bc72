#ifndef IRF_SYNTH_HPP
#define IRF_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "irf/dataset.hpp"
#include "irf/debias.hpp"
#include "irf/errors.hpp"
#include "irf/random.hpp"

namespace irf {

/// Marginal imbalance: mu is small everywhere (for the imbalanced scenario).
/// Conditional imbalance: mu is large on a box L and small outside it.
enum class Setup { MarginalImbalance = 1, ConditionalImbalance = 2 };

/// Balanced is a 50/50 class prior, Imbalanced is 90/10.
enum class Scenario { Balanced = 1, Imbalanced = 2 };

inline double target_prior(Scenario sc) noexcept { return sc == Scenario::Balanced ? 0.5 : 0.1; }

struct ScenarioConfig {
    Scenario scenario = Scenario::Balanced;
    double target_p = 0.5;
    std::size_t n = 100;
};

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    bool contains(Point x) const noexcept {
        for (std::size_t j = 0; j < lo.size(); ++j) {
            if (x[j] < lo[j] || x[j] > hi[j]) {
                return false;
            }
        }
        return true;
    }

    /// Max-norm distance from x to the box (0 inside).
    double distance(Point x) const noexcept {
        double out = 0.0;
        for (std::size_t j = 0; j < lo.size(); ++j) {
            out = std::max({out, lo[j] - x[j], x[j] - hi[j]});
        }
        return out;
    }

    Point center_into(std::vector<double>& buf) const {
        buf.resize(lo.size());
        for (std::size_t j = 0; j < lo.size(); ++j) {
            buf[j] = 0.5 * (lo[j] + hi[j]);
        }
        return buf;
    }
};

inline double logistic(double t) noexcept {
    return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

/// Ground-truth regression model over covariates uniform on [-1,1]^d.
///
/// Setup 1: mu(x) = logistic(a + 1.5 * sum_j x_j).
/// Setup 2: outside value min(logistic(a + 1.5 * sum_j x_j), 0.5), raised
/// linearly to 0.9 across a max-norm band of width 0.1 around L = [0.25,0.75]^d
/// and equal to 0.9 on L. The band keeps mu Lipschitz.
///
/// The intercept a is calibrated so that the integral of mu equals target_p.
struct SyntheticModel {
    static constexpr double kSlope = 1.5;
    static constexpr double kInside = 0.9;
    static constexpr double kOutsideCap = 0.5;
    static constexpr double kBand = 0.1;

    Setup setup = Setup::MarginalImbalance;
    std::size_t d = 2;
    double intercept = 0.0;
    double target_p = 0.5;
    double prior = 0.5;  // quadrature value of the integral of mu at the calibrated intercept
    double lipschitz_bound = 0.0;
    std::optional<Box> region_L;

    double mu(Point x) const noexcept { return mu_with(intercept, x); }

    double mu_with(double a, Point x) const noexcept {
        double sum = 0.0;
        for (double c : x) {
            sum += c;
        }
        const double smooth = logistic(a + kSlope * sum);
        if (setup == Setup::MarginalImbalance || !region_L) {
            return smooth;
        }
        const double outside = std::min(smooth, kOutsideCap);
        const double blend = std::max(0.0, 1.0 - region_L->distance(x) / kBand);
        return outside + (kInside - outside) * blend;
    }

    /// Density of the uniform design on [-1,1]^d.
    double design_density() const noexcept { return std::ldexp(1.0, -static_cast<int>(d)); }
};

// Gauss-Legendre rule on [-1,1] by Newton iteration on P_n.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline QuadratureRule gauss_legendre(std::size_t n) {
    require(n >= 1, ErrorKind::InvalidArgument, "quadrature needs >= 1 node");
    if (n == 1) {
        return {{0.0}, {2.0}};
    }
    QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
    const auto nn = static_cast<double>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nn + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const auto kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            dp = nn * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

namespace detail {

// Composite 1-D rule over [-1,1] with sub-interval breakpoints; weights sum to 1
// (i.e. it integrates against the uniform probability on [-1,1]).
inline QuadratureRule composite_axis_rule(std::vector<double> breaks, std::size_t nodes_per_piece) {
    breaks.push_back(-1.0);
    breaks.push_back(1.0);
    for (auto& b : breaks) {
        b = std::clamp(b, -1.0, 1.0);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const auto base = gauss_legendre(nodes_per_piece);
    QuadratureRule out;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double half = 0.5 * (breaks[k + 1] - breaks[k]);
        const double mid = 0.5 * (breaks[k + 1] + breaks[k]);
        for (std::size_t i = 0; i < base.nodes.size(); ++i) {
            out.nodes.push_back(mid + half * base.nodes[i]);
            out.weights.push_back(0.5 * half * base.weights[i]);
        }
    }
    return out;
}

}  // namespace detail

/// Quadrature of mu over the uniform design. Outer axes use a fixed composite
/// Gauss-Legendre rule split at the band edges; the last axis is split per outer
/// point at the kinks of mu (cap crossing and the max-norm diagonals).
inline double quadrature_prior(const SyntheticModel& model, double intercept) {
    std::vector<double> breaks;
    if (model.region_L) {
        for (double e : {model.region_L->lo[0], model.region_L->hi[0]}) {
            breaks.push_back(e);
            breaks.push_back(e - SyntheticModel::kBand);
            breaks.push_back(e + SyntheticModel::kBand);
        }
    }
    const std::size_t d = model.d;
    const std::size_t pieces = breaks.size() + 1;
    const double budget = std::pow(static_cast<double>(1U << 20), 1.0 / static_cast<double>(d));
    std::size_t per_piece = 64;
    if (static_cast<double>(per_piece * pieces) > budget) {
        per_piece = std::max<std::size_t>(4, static_cast<std::size_t>(budget / static_cast<double>(pieces)));
    }
    const auto rule = detail::composite_axis_rule(breaks, per_piece);
    const auto base = gauss_legendre(per_piece);
    const std::size_t m = rule.nodes.size();
    const std::size_t outer = d - 1;
    std::vector<std::size_t> digit(outer, 0);
    std::vector<double> x(d);
    std::vector<double> inner_breaks;
    double total = 0.0;
    while (true) {
        double w = 1.0;
        double partial = 0.0;
        double gap = 0.0;
        for (std::size_t j = 0; j < outer; ++j) {
            x[j] = rule.nodes[digit[j]];
            w *= rule.weights[digit[j]];
            partial += x[j];
            if (model.region_L) {
                gap = std::max({gap, model.region_L->lo[j] - x[j], x[j] - model.region_L->hi[j]});
            }
        }
        inner_breaks.assign(breaks.begin(), breaks.end());
        inner_breaks.push_back(-intercept / SyntheticModel::kSlope - partial);
        if (model.region_L) {
            inner_breaks.push_back(model.region_L->lo[outer] - gap);
            inner_breaks.push_back(model.region_L->hi[outer] + gap);
        }
        inner_breaks.push_back(-1.0);
        inner_breaks.push_back(1.0);
        for (auto& b : inner_breaks) {
            b = std::clamp(b, -1.0, 1.0);
        }
        std::sort(inner_breaks.begin(), inner_breaks.end());
        double inner = 0.0;
        for (std::size_t k = 0; k + 1 < inner_breaks.size(); ++k) {
            const double half = 0.5 * (inner_breaks[k + 1] - inner_breaks[k]);
            if (half <= 0.0) {
                continue;
            }
            const double mid = 0.5 * (inner_breaks[k + 1] + inner_breaks[k]);
            for (std::size_t i = 0; i < base.nodes.size(); ++i) {
                x[outer] = mid + half * base.nodes[i];
                inner += 0.5 * half * base.weights[i] * model.mu_with(intercept, x);
            }
        }
        total += w * inner;
        std::size_t j = 0;
        while (j < outer && ++digit[j] == m) {
            digit[j] = 0;
            ++j;
        }
        if (j == outer) {
            break;
        }
    }
    return total;
}

/// Builds the model for (setup, scenario) with the intercept solved by
/// bisection so that the quadrature prior hits the scenario's target.
inline SyntheticModel make_model(Setup setup, Scenario scenario, std::size_t d = 2) {
    require(d >= 1, ErrorKind::InvalidArgument, "dimension must be >= 1");
    SyntheticModel model;
    model.setup = setup;
    model.d = d;
    model.target_p = target_prior(scenario);
    const double sum_slope = 0.25 * SyntheticModel::kSlope * static_cast<double>(d);
    model.lipschitz_bound = sum_slope;
    if (setup == Setup::ConditionalImbalance) {
        model.region_L = Box{std::vector<double>(d, 0.25), std::vector<double>(d, 0.75)};
        model.lipschitz_bound = sum_slope + SyntheticModel::kInside / SyntheticModel::kBand;
    }

    double lo = -40.0, hi = 40.0;
    const double f_lo = quadrature_prior(model, lo);
    const double f_hi = quadrature_prior(model, hi);
    if (!(f_lo < model.target_p && model.target_p < f_hi)) {
        fail(ErrorKind::CalibrationFailed, "target prior " + std::to_string(model.target_p) +
                                               " outside reachable range [" + std::to_string(f_lo) + ", " +
                                               std::to_string(f_hi) + "]");
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (quadrature_prior(model, mid) < model.target_p ? lo : hi) = mid;
    }
    model.intercept = 0.5 * (lo + hi);
    model.prior = quadrature_prior(model, model.intercept);
    if (std::abs(model.prior - model.target_p) > 1e-3) {
        fail(ErrorKind::CalibrationFailed, "bisection did not reach the target prior");
    }
    return model;
}

/// n i.i.d. draws: X uniform on [-1,1]^d, Y | X ~ Bernoulli(mu(X)).
inline Dataset generate(const SyntheticModel& model, std::size_t n, RandomStream& rng) {
    require(n >= 1, ErrorKind::InvalidArgument, "generate needs n >= 1");
    std::vector<double> coords(n * model.d);
    std::vector<Label> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = coords.data() + i * model.d;
        for (std::size_t j = 0; j < model.d; ++j) {
            row[j] = rng.uniform(-1.0, 1.0);
        }
        labels[i] = rng.bernoulli(model.mu(Point(row, model.d))) ? Label::One : Label::Zero;
    }
    return {PointSet(model.d, std::move(coords)), std::move(labels)};
}

inline double true_mu(const SyntheticModel& model, Point x) {
    require(x.size() == model.d, ErrorKind::InvalidArgument, "point dimension mismatch");
    return model.mu(x);
}

/// Regression function of the rebalanced model with class-1 prior p_star.
inline double true_mu_star(const SyntheticModel& model, Point x, const PriorPair& priors) {
    return g_inv(true_mu(model, x), priors);
}

/// Equally spaced tensor grid on [-1,1]^d including the endpoints.
inline PointSet evaluation_grid(std::size_t d, std::size_t per_axis) {
    require(per_axis >= 2, ErrorKind::InvalidArgument, "grid needs >= 2 points per axis");
    if (d == 0 || d > 2) {
        fail(ErrorKind::UnsupportedDimension, "evaluation grid supports d in {1,2}");
    }
    std::vector<double> axis(per_axis);
    for (std::size_t i = 0; i < per_axis; ++i) {
        axis[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(per_axis - 1);
    }
    PointSet out(d);
    if (d == 1) {
        for (double a : axis) {
            out.push_back(std::span<const double>(&a, 1));
        }
        return out;
    }
    for (double a : axis) {
        for (double b : axis) {
            const double p[2] = {a, b};
            out.push_back(p);
        }
    }
    return out;
}

/// key=value description of the model, one per line.
inline void write_model_sidecar(const SyntheticModel& model, std::ostream& out) {
    out.precision(17);
    out << "setup=" << static_cast<int>(model.setup) << '\n'
        << "d=" << model.d << '\n'
        << "slope=" << SyntheticModel::kSlope << '\n'
        << "intercept=" << model.intercept << '\n'
        << "target_p=" << model.target_p << '\n'
        << "quadrature_prior=" << model.prior << '\n'
        << "lipschitz_bound=" << model.lipschitz_bound << '\n';
    if (model.region_L) {
        out << "region_lo=" << model.region_L->lo[0] << '\n'
            << "region_hi=" << model.region_L->hi[0] << '\n'
            << "inside_value=" << SyntheticModel::kInside << '\n'
            << "outside_cap=" << SyntheticModel::kOutsideCap << '\n'
            << "band=" << SyntheticModel::kBand << '\n';
    }
}

}  // namespace irf

#endif  // IRF_SYNTH_HPP

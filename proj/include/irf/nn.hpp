#ifndef IRF_NN_HPP
#define IRF_NN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "irf/dataset.hpp"
#include "irf/debias.hpp"
#include "irf/errors.hpp"
#include "irf/random.hpp"

// Bagged one-nearest-neighbour estimators under the max-norm.
//
// Ties in distance are broken towards the lowest dataset index everywhere
// (single prediction, Monte Carlo bagging and the closed forms), so the
// exact and sampled routes agree even on duplicated points.

namespace irf {

/// Position of the max-norm-closest point; lowest position wins ties.
inline std::size_t nn_index(Point x, const PointSet& points) {
    if (points.empty()) {
        fail(ErrorKind::EmptyPointSet, "nearest neighbour of an empty point set");
    }
    std::size_t best = 0;
    double best_d = chebyshev(x, points[0]);
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double d = chebyshev(x, points[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

namespace detail {

// (distance, index) lexicographic order.
inline bool closer(double d, Index i, double best_d, Index best_i) noexcept {
    return d < best_d || (d == best_d && i < best_i);
}

inline Index nearest_in(Point x, const Dataset& ds, std::span<const Index> subset) {
    Index best = subset[0];
    double best_d = chebyshev(x, ds.x(best));
    for (std::size_t k = 1; k < subset.size(); ++k) {
        const Index i = subset[k];
        const double d = chebyshev(x, ds.x(i));
        if (closer(d, i, best_d, best)) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

/// Label of the nearest member of `subset` (dataset indices).
inline int one_nn_predict(Point x, const Dataset& ds, std::span<const Index> subset) {
    if (subset.empty()) {
        fail(ErrorKind::EmptySubset, "1-NN prediction from an empty subset");
    }
    return ds.label(detail::nearest_in(x, ds, subset));
}

/// Dataset indices sorted by (distance to x, index).
inline IndexList neighbour_order(Point x, const Dataset& ds) {
    std::vector<std::pair<double, Index>> keyed(ds.size());
    for (Index i = 0; i < ds.size(); ++i) {
        keyed[i] = {chebyshev(x, ds.x(i)), i};
    }
    std::sort(keyed.begin(), keyed.end());
    IndexList order(ds.size());
    for (std::size_t r = 0; r < keyed.size(); ++r) {
        order[r] = keyed[r].second;
    }
    return order;
}

/// Probability that the r-th closest of n points (r = 0-based) is the
/// closest member of a uniform size-s subset: C(n-1-r, s-1) / C(n, s).
inline std::vector<double> rank_weights(std::size_t n, std::size_t s) {
    require(s >= 1 && s <= n, ErrorKind::SizeExceedsPopulation, "rank weights need 1 <= s <= n");
    std::vector<double> w(n, 0.0);
    w[0] = static_cast<double>(s) / static_cast<double>(n);
    for (std::size_t r = 1; r + s <= n; ++r) {
        w[r] = w[r - 1] * static_cast<double>(n - r - s + 1) / static_cast<double>(n - r);
    }
    return w;
}

/// Probability that none of the b closest points of a population of n lands
/// in a uniform size-k subset: C(n-b, k) / C(n, k), for b = 0..n.
inline std::vector<double> miss_probabilities(std::size_t n, std::size_t k) {
    std::vector<double> h(n + 1, 0.0);
    h[0] = 1.0;
    for (std::size_t b = 0; b + k < n; ++b) {
        h[b + 1] = h[b] * static_cast<double>(n - b - k) / static_cast<double>(n - b);
    }
    return h;
}

/// Infinite-ensemble subsampling bagged 1-NN: average of the 1-NN label over
/// all C(n, s) subsets, computed from neighbour ranks.
inline double exact_sub_1nn(Point x, const Dataset& ds, std::size_t s) {
    if (s < 1 || s > ds.size()) {
        fail(ErrorKind::SizeExceedsPopulation, "exact_sub_1nn needs 1 <= s <= n");
    }
    const auto w = rank_weights(ds.size(), s);
    const auto order = neighbour_order(x, ds);
    double out = 0.0;
    for (std::size_t r = 0; r < order.size() && w[r] > 0.0; ++r) {
        out += w[r] * ds.label(order[r]);
    }
    return std::min(out, 1.0);  // weights sum to 1 up to rounding
}

/// Infinite-ensemble under-sampling bagged 1-NN: probability that the nearest
/// point of a stratified (s0, s1) subsample has label 1.
inline double exact_under_1nn(Point x, const Dataset& ds, std::size_t s0, std::size_t s1) {
    check_stratified_sizes(ds, s0, s1);
    const auto w1 = rank_weights(ds.n1(), s1);
    const auto h0 = miss_probabilities(ds.n0(), s0);
    const auto order = neighbour_order(x, ds);
    double out = 0.0;
    std::size_t ones_before = 0, zeros_before = 0;
    for (Index i : order) {
        if (ds.y(i) == Label::One) {
            out += w1[ones_before] * h0[zeros_before];
            ++ones_before;
        } else {
            ++zeros_before;
        }
        if (h0[zeros_before] == 0.0) {
            break;
        }
    }
    return std::min(out, 1.0);
}

/// Subsample sizes used by the importance-sampling procedure:
/// s = min(n0, n1), s1 = floor(sqrt(s)), s0 = ceil(sqrt(s)).
struct Alg2Sizes {
    std::size_t s = 1;
    std::size_t s0 = 1;
    std::size_t s1 = 1;
};

inline std::size_t isqrt_floor(std::size_t v) noexcept {
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(v)));
    while (r * r > v) {
        --r;
    }
    while ((r + 1) * (r + 1) <= v) {
        ++r;
    }
    return r;
}

inline Alg2Sizes alg2_sizes(std::size_t n0, std::size_t n1) {
    require(n0 >= 1 && n1 >= 1, ErrorKind::InvalidArgument, "alg2_sizes needs n0, n1 >= 1");
    const std::size_t s = std::min(n0, n1);
    const std::size_t lo = isqrt_floor(s);
    const std::size_t hi = lo * lo == s ? lo : lo + 1;
    return {s, hi, lo};
}

namespace detail {

// Flat copy of a subsample used to scan many query points against it.
struct SubsampleView {
    std::size_t dim = 0;
    std::vector<double> coords;
    std::vector<Index> ids;
    std::vector<int> labels;

    void assign(const Dataset& ds, std::span<const Index> a, std::span<const Index> b = {}) {
        dim = ds.dim();
        coords.clear();
        ids.clear();
        labels.clear();
        for (auto part : {a, b}) {
            for (Index i : part) {
                const auto x = ds.x(i);
                coords.insert(coords.end(), x.begin(), x.end());
                ids.push_back(i);
                labels.push_back(ds.label(i));
            }
        }
    }

    int nearest_label(Point q) const noexcept {
        double best_d = std::numeric_limits<double>::infinity();
        Index best_i = std::numeric_limits<Index>::max();
        int best_y = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const double d = chebyshev(q, Point(coords.data() + k * dim, dim));
            if (closer(d, ids[k], best_d, best_i)) {
                best_d = d;
                best_i = ids[k];
                best_y = labels[k];
            }
        }
        return best_y;
    }
};

}  // namespace detail

/// Monte Carlo subsampling bagged 1-NN at every query point, sharing the B
/// subsamples across queries as a fitted ensemble would.
inline std::vector<double> bagged_sub_1nn(const PointSet& queries, const Dataset& ds, std::size_t s,
                                          std::size_t B, RandomStream& rng) {
    require(B >= 1, ErrorKind::InvalidArgument, "ensemble size B must be >= 1");
    if (s < 1 || s > ds.size()) {
        fail(ErrorKind::SizeExceedsPopulation, "bagged_sub_1nn needs 1 <= s <= n");
    }
    Subsampler sampler(iota_indices(ds.size()));
    detail::SubsampleView view;
    std::vector<double> sums(queries.size(), 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        view.assign(ds, sampler.draw(s, rng));
        for (std::size_t q = 0; q < queries.size(); ++q) {
            sums[q] += view.nearest_label(queries[q]);
        }
    }
    for (auto& v : sums) {
        v /= static_cast<double>(B);
    }
    return sums;
}

inline double bagged_sub_1nn(Point x, const Dataset& ds, std::size_t s, std::size_t B, RandomStream& rng) {
    PointSet q(x.size());
    q.push_back(x);
    return bagged_sub_1nn(q, ds, s, B, rng)[0];
}

/// Monte Carlo under-sampling bagged 1-NN; estimates the rebalanced regression function.
inline std::vector<double> bagged_under_1nn(const PointSet& queries, const Dataset& ds, std::size_t s0,
                                            std::size_t s1, std::size_t B, RandomStream& rng) {
    require(B >= 1, ErrorKind::InvalidArgument, "ensemble size B must be >= 1");
    check_stratified_sizes(ds, s0, s1);
    Subsampler zeros(ds.idx0());
    Subsampler ones(ds.idx1());
    detail::SubsampleView view;
    std::vector<double> sums(queries.size(), 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        const auto a = zeros.draw(s0, rng);
        const auto c = ones.draw(s1, rng);
        view.assign(ds, a, c);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            sums[q] += view.nearest_label(queries[q]);
        }
    }
    for (auto& v : sums) {
        v /= static_cast<double>(B);
    }
    return sums;
}

inline double bagged_under_1nn(Point x, const Dataset& ds, std::size_t s0, std::size_t s1, std::size_t B,
                               RandomStream& rng) {
    PointSet q(x.size());
    q.push_back(x);
    return bagged_under_1nn(q, ds, s0, s1, B, rng)[0];
}

inline EmpiricalPriors empirical_priors_for(const Dataset& ds, std::size_t s0, std::size_t s1) {
    return {ds.n0(), ds.n1(), s0, s1};
}

/// Importance-sampling bagged 1-NN: g_n applied to the under-sampling estimate.
inline double is_bagged_1nn(Point x, const Dataset& ds, std::size_t s0, std::size_t s1, std::size_t B,
                            RandomStream& rng) {
    return g_n(bagged_under_1nn(x, ds, s0, s1, B, rng), empirical_priors_for(ds, s0, s1));
}

inline std::vector<double> is_bagged_1nn(const PointSet& queries, const Dataset& ds, std::size_t s0,
                                         std::size_t s1, std::size_t B, RandomStream& rng) {
    auto out = bagged_under_1nn(queries, ds, s0, s1, B, rng);
    const auto emp = empirical_priors_for(ds, s0, s1);
    for (auto& v : out) {
        v = g_n(v, emp);
    }
    return out;
}

inline double exact_is_1nn(Point x, const Dataset& ds, std::size_t s0, std::size_t s1) {
    return g_n(exact_under_1nn(x, ds, s0, s1), empirical_priors_for(ds, s0, s1));
}

}  // namespace irf

#endif  // IRF_NN_HPP

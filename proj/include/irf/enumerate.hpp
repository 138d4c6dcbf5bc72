#ifndef IRF_ENUMERATE_HPP
#define IRF_ENUMERATE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "irf/dataset.hpp"
#include "irf/errors.hpp"
#include "irf/nn.hpp"

// Brute-force subset enumeration. These evaluate the infinite-ensemble
// estimators straight from their definition (average over every admissible
// subsample) and serve as the reference the closed forms are checked against.
// Nothing here calls the rank-weight or hypergeometric formulas.

namespace irf {

inline constexpr double kMaxEnumeration = 1e6;

inline double binomial(std::size_t n, std::size_t k) {
    if (k > n) {
        return 0.0;
    }
    k = std::min(k, n - k);
    double out = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return std::round(out);
}

/// Calls f(span of k positions in [0, n)) for every k-combination, in
/// lexicographic order.
template <class F>
void for_each_combination(std::size_t n, std::size_t k, F&& f) {
    if (k > n) {
        return;
    }
    std::vector<std::size_t> c(k);
    for (std::size_t i = 0; i < k; ++i) {
        c[i] = i;
    }
    while (true) {
        f(std::span<const std::size_t>(c));
        if (k == 0) {
            return;
        }
        std::size_t i = k;
        while (i > 0 && c[i - 1] == n - k + i - 1) {
            --i;
        }
        if (i == 0) {
            return;
        }
        ++c[i - 1];
        for (std::size_t j = i; j < k; ++j) {
            c[j] = c[j - 1] + 1;
        }
    }
}

namespace detail {

inline void check_enumeration_size(double count) {
    if (count > kMaxEnumeration) {
        fail(ErrorKind::EnumerationTooLarge, "enumeration of " + std::to_string(count) + " subsets refused");
    }
}

inline IndexList pick(const IndexList& population, std::span<const std::size_t> positions) {
    IndexList out;
    out.reserve(positions.size());
    for (auto p : positions) {
        out.push_back(population[p]);
    }
    return out;
}

}  // namespace detail

/// Average of stat(subset) over all size-s subsets of the dataset.
template <class Stat>
double enumerate_plain(const Dataset& ds, std::size_t s, Stat&& stat) {
    if (s < 1 || s > ds.size()) {
        fail(ErrorKind::SizeExceedsPopulation, "enumeration needs 1 <= s <= n");
    }
    detail::check_enumeration_size(binomial(ds.size(), s));
    const auto all = iota_indices(ds.size());
    double total = 0.0;
    std::size_t count = 0;
    for_each_combination(ds.size(), s, [&](std::span<const std::size_t> c) {
        total += stat(detail::pick(all, c));
        ++count;
    });
    return total / static_cast<double>(count);
}

/// Average of stat(subset0, subset1) over all stratified (s0, s1) subsamples.
template <class Stat>
double enumerate_stratified(const Dataset& ds, std::size_t s0, std::size_t s1, Stat&& stat) {
    check_stratified_sizes(ds, s0, s1);
    detail::check_enumeration_size(binomial(ds.n0(), s0) * binomial(ds.n1(), s1));
    double total = 0.0;
    std::size_t count = 0;
    for_each_combination(ds.n0(), s0, [&](std::span<const std::size_t> c0) {
        const auto a = detail::pick(ds.idx0(), c0);
        for_each_combination(ds.n1(), s1, [&](std::span<const std::size_t> c1) {
            total += stat(a, detail::pick(ds.idx1(), c1));
            ++count;
        });
    });
    return total / static_cast<double>(count);
}

inline double enumerate_sub_1nn(Point x, const Dataset& ds, std::size_t s) {
    return enumerate_plain(ds, s, [&](const IndexList& sub) { return double(one_nn_predict(x, ds, sub)); });
}

inline double enumerate_under_1nn(Point x, const Dataset& ds, std::size_t s0, std::size_t s1) {
    return enumerate_stratified(ds, s0, s1, [&](const IndexList& a, const IndexList& b) {
        IndexList both = a;
        both.insert(both.end(), b.begin(), b.end());
        return double(one_nn_predict(x, ds, both));
    });
}

/// Class-1 proportion among `members` with 0/0 = 0.
inline double leaf_proportion(const Dataset& ds, std::span<const Index> members) {
    if (members.empty()) {
        return 0.0;
    }
    std::size_t ones = 0;
    for (Index i : members) {
        ones += ds.y(i) == Label::One ? 1 : 0;
    }
    return static_cast<double>(ones) / static_cast<double>(members.size());
}

/// `leaf_members(rows)` must return the rows sharing x's leaf in the
/// partition built (deterministically, label-blind) from `rows`.
template <class LeafMembers>
double enumerate_irf_sub(const Dataset& ds, std::size_t s, LeafMembers&& leaf_members) {
    return enumerate_plain(ds, s, [&](const IndexList& sub) { return leaf_proportion(ds, leaf_members(sub)); });
}

template <class LeafMembers>
double enumerate_irf_under(const Dataset& ds, std::size_t s0, std::size_t s1, LeafMembers&& leaf_members) {
    return enumerate_stratified(ds, s0, s1, [&](const IndexList& a, const IndexList& b) {
        IndexList both = a;
        both.insert(both.end(), b.begin(), b.end());
        return leaf_proportion(ds, leaf_members(both));
    });
}

}  // namespace irf

#endif  // IRF_ENUMERATE_HPP

#ifndef IRF_FOREST_HPP
#define IRF_FOREST_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "irf/dataset.hpp"
#include "irf/debias.hpp"
#include "irf/errors.hpp"
#include "irf/random.hpp"

// Axis-aligned partition trees over [-1,1]^d and the forest estimators built
// on them. Splits look at covariates only.

namespace irf {

enum class SplitRule {
    UniformRandom,  // uniform coordinate, uniform threshold inside the node's covariate range
    Median,         // coordinate = depth mod d, threshold at the median; consumes no randomness
};

struct TreeParams {
    std::size_t min_leaf = 5;
    std::optional<std::size_t> max_depth;  // default ceil(log2 s)
    SplitRule rule = SplitRule::UniformRandom;

    std::size_t depth_limit(std::size_t s) const noexcept {
        if (max_depth) {
            return *max_depth;
        }
        std::size_t depth = 0;
        while ((std::size_t{1} << depth) < s) {
            ++depth;
        }
        return depth;
    }
};

/// Axis-aligned cell of the partition.
struct Cell {
    std::vector<double> lo;
    std::vector<double> hi;

    /// Max-norm diameter (longest side).
    double diameter() const noexcept {
        double out = 0.0;
        for (std::size_t j = 0; j < lo.size(); ++j) {
            out = std::max(out, hi[j] - lo[j]);
        }
        return out;
    }
};

class PartitionTree {
public:
    struct Leaf {
        Cell cell;
        std::size_t begin = 0;
        std::size_t end = 0;
    };

    /// Grows a tree on `points[rows]`. `rows` are indices into `points`.
    static PartitionTree build(const PointSet& points, std::span<const Index> rows, const TreeParams& params,
                               RandomStream& rng) {
        require(!rows.empty(), ErrorKind::EmptySubset, "tree needs a nonempty subsample");
        PartitionTree t;
        t.dim_ = points.dim();
        t.rows_.assign(rows.begin(), rows.end());
        Cell root{std::vector<double>(t.dim_, -1.0), std::vector<double>(t.dim_, 1.0)};
        Builder b{points, params, params.depth_limit(rows.size()), rng, t};
        b.grow(0, t.rows_.size(), 0, std::move(root));
        return t;
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t leaf_count() const noexcept { return leaves_.size(); }
    const Leaf& leaf(std::size_t k) const noexcept { return leaves_[k]; }

    std::size_t depth() const noexcept {
        std::size_t best = 0;
        std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            auto [id, d] = stack.back();
            stack.pop_back();
            const Node& nd = nodes_[id];
            if (nd.feature < 0) {
                best = std::max(best, d);
            } else {
                stack.push_back({nd.left, d + 1});
                stack.push_back({nd.right, d + 1});
            }
        }
        return best;
    }

    std::size_t find_leaf(Point x) const noexcept {
        std::uint32_t id = 0;
        while (nodes_[id].feature >= 0) {
            const Node& nd = nodes_[id];
            id = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
        }
        return nodes_[id].leaf;
    }

    /// Training rows sharing x's leaf.
    std::span<const Index> leaf_rows(Point x) const noexcept {
        const Leaf& l = leaves_[find_leaf(x)];
        return {rows_.data() + l.begin, l.end - l.begin};
    }

    std::span<const Index> leaf_rows_of(std::size_t k) const noexcept {
        const Leaf& l = leaves_[k];
        return {rows_.data() + l.begin, l.end - l.begin};
    }

private:
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        std::uint32_t leaf = 0;
    };

    struct Builder {
        const PointSet& points;
        const TreeParams& params;
        std::size_t max_depth;
        RandomStream& rng;
        PartitionTree& t;

        std::uint32_t make_leaf(std::size_t begin, std::size_t end, Cell cell) {
            Node nd;
            nd.leaf = static_cast<std::uint32_t>(t.leaves_.size());
            t.leaves_.push_back({std::move(cell), begin, end});
            t.nodes_.push_back(nd);
            return static_cast<std::uint32_t>(t.nodes_.size() - 1);
        }

        std::uint32_t grow(std::size_t begin, std::size_t end, std::size_t depth, Cell cell) {
            const std::size_t count = end - begin;
            if (depth >= max_depth || count < 2 * std::max<std::size_t>(params.min_leaf, 1)) {
                return make_leaf(begin, end, std::move(cell));
            }
            auto first = t.rows_.begin() + static_cast<std::ptrdiff_t>(begin);
            auto last = t.rows_.begin() + static_cast<std::ptrdiff_t>(end);

            std::size_t j = 0;
            double threshold = 0.0;
            if (params.rule == SplitRule::UniformRandom) {
                j = static_cast<std::size_t>(rng.below(t.dim_));
                double lo = std::numeric_limits<double>::infinity();
                double hi = -lo;
                for (auto it = first; it != last; ++it) {
                    lo = std::min(lo, points[*it][j]);
                    hi = std::max(hi, points[*it][j]);
                }
                if (!(lo < hi)) {
                    return make_leaf(begin, end, std::move(cell));
                }
                threshold = rng.uniform(lo, hi);
            } else {
                j = depth % t.dim_;
                std::vector<double> v;
                v.reserve(count);
                for (auto it = first; it != last; ++it) {
                    v.push_back(points[*it][j]);
                }
                std::sort(v.begin(), v.end());
                if (v.front() == v.back()) {
                    return make_leaf(begin, end, std::move(cell));
                }
                threshold = 0.5 * (v[count / 2 - 1] + v[count / 2]);
            }

            auto mid = std::stable_partition(first, last, [&](Index i) { return points[i][j] < threshold; });
            const auto left_count = static_cast<std::size_t>(mid - first);
            if (left_count < params.min_leaf || count - left_count < params.min_leaf || left_count == 0 ||
                left_count == count) {
                return make_leaf(begin, end, std::move(cell));
            }

            const auto id = static_cast<std::uint32_t>(t.nodes_.size());
            t.nodes_.push_back(Node{static_cast<int>(j), threshold, 0, 0, 0});
            Cell right_cell = cell;
            cell.hi[j] = threshold;
            right_cell.lo[j] = threshold;
            const auto l = grow(begin, begin + left_count, depth + 1, std::move(cell));
            const auto r = grow(begin + left_count, end, depth + 1, std::move(right_cell));
            t.nodes_[id].left = l;
            t.nodes_[id].right = r;
            return id;
        }
    };

    std::size_t dim_ = 0;
    std::vector<Node> nodes_;
    std::vector<Leaf> leaves_;
    IndexList rows_;
};

struct TreePrediction {
    std::size_t count1 = 0;
    std::size_t count0 = 0;
    double value = 0.0;

    std::size_t count_total() const noexcept { return count0 + count1; }
};

inline TreePrediction leaf_counts(const Dataset& ds, std::span<const Index> members) {
    TreePrediction out;
    for (Index i : members) {
        (ds.y(i) == Label::One ? out.count1 : out.count0) += 1;
    }
    out.value = members.empty() ? 0.0 : static_cast<double>(out.count1) / static_cast<double>(members.size());
    return out;
}

/// Class-1 share of the subsample points in x's leaf (0 for an empty leaf).
inline TreePrediction tree_predict_sub(Point x, const PartitionTree& tree, const Dataset& ds) {
    return leaf_counts(ds, tree.leaf_rows(x));
}

/// N1 / (N1 + N0) in x's leaf of a tree grown on the stratified subsample.
/// The tree stores both parts, so this is the same count as the plain case.
inline TreePrediction tree_predict_under(Point x, const PartitionTree& tree, const Dataset& ds) {
    return leaf_counts(ds, tree.leaf_rows(x));
}

namespace detail {

// Adds each query's leaf value of `tree` to sums.
inline void accumulate_tree(const PartitionTree& tree, const Dataset& ds, const PointSet& queries,
                            std::vector<double>& values, std::vector<double>& sums) {
    values.resize(tree.leaf_count());
    for (std::size_t k = 0; k < tree.leaf_count(); ++k) {
        values[k] = leaf_counts(ds, tree.leaf_rows_of(k)).value;
    }
    for (std::size_t q = 0; q < queries.size(); ++q) {
        sums[q] += values[tree.find_leaf(queries[q])];
    }
}

inline PointSet single_query(Point x) {
    PointSet q(x.size());
    q.push_back(x);
    return q;
}

}  // namespace detail

/// Subsampling forest of B trees evaluated at every query point.
inline std::vector<double> irf_sub(const PointSet& queries, const Dataset& ds, std::size_t s, std::size_t B,
                                   const TreeParams& params, RandomStream& rng) {
    require(B >= 1, ErrorKind::InvalidArgument, "ensemble size B must be >= 1");
    if (s < 1 || s > ds.size()) {
        fail(ErrorKind::SizeExceedsPopulation, "irf_sub needs 1 <= s <= n");
    }
    Subsampler sampler(iota_indices(ds.size()));
    std::vector<double> sums(queries.size(), 0.0), values;
    for (std::size_t b = 0; b < B; ++b) {
        const auto rows = sampler.draw(s, rng);
        const auto tree = PartitionTree::build(ds.points(), rows, params, rng);
        detail::accumulate_tree(tree, ds, queries, values, sums);
    }
    for (auto& v : sums) {
        v /= static_cast<double>(B);
    }
    return sums;
}

inline double irf_sub(Point x, const Dataset& ds, std::size_t s, std::size_t B, const TreeParams& params,
                      RandomStream& rng) {
    return irf_sub(detail::single_query(x), ds, s, B, params, rng)[0];
}

/// Under-sampling forest: each tree grown on s0 class-0 and s1 class-1 points.
inline std::vector<double> irf_under(const PointSet& queries, const Dataset& ds, std::size_t s0, std::size_t s1,
                                     std::size_t B, const TreeParams& params, RandomStream& rng) {
    require(B >= 1, ErrorKind::InvalidArgument, "ensemble size B must be >= 1");
    check_stratified_sizes(ds, s0, s1);
    Subsampler zeros(ds.idx0());
    Subsampler ones(ds.idx1());
    IndexList rows;
    std::vector<double> sums(queries.size(), 0.0), values;
    for (std::size_t b = 0; b < B; ++b) {
        const auto a = zeros.draw(s0, rng);
        const auto c = ones.draw(s1, rng);
        rows.assign(a.begin(), a.end());
        rows.insert(rows.end(), c.begin(), c.end());
        const auto tree = PartitionTree::build(ds.points(), rows, params, rng);
        detail::accumulate_tree(tree, ds, queries, values, sums);
    }
    for (auto& v : sums) {
        v /= static_cast<double>(B);
    }
    return sums;
}

inline double irf_under(Point x, const Dataset& ds, std::size_t s0, std::size_t s1, std::size_t B,
                        const TreeParams& params, RandomStream& rng) {
    return irf_under(detail::single_query(x), ds, s0, s1, B, params, rng)[0];
}

/// Importance-sampling forest: g_n applied to the under-sampling forest.
inline std::vector<double> irf_is(const PointSet& queries, const Dataset& ds, std::size_t s0, std::size_t s1,
                                  std::size_t B, const TreeParams& params, RandomStream& rng) {
    auto out = irf_under(queries, ds, s0, s1, B, params, rng);
    const EmpiricalPriors emp(ds.n0(), ds.n1(), s0, s1);
    for (auto& v : out) {
        v = g_n(v, emp);
    }
    return out;
}

inline double irf_is(Point x, const Dataset& ds, std::size_t s0, std::size_t s1, std::size_t B,
                     const TreeParams& params, RandomStream& rng) {
    return irf_is(detail::single_query(x), ds, s0, s1, B, params, rng)[0];
}

/// Regular grid of cells_per_axis^d cells over [-1,1]^d; a fixed partition,
/// so the infinite forest over it has a closed form.
struct GridPartition {
    std::size_t d = 2;
    std::size_t cells_per_axis = 2;

    std::size_t cell_of(Point x) const noexcept {
        std::size_t id = 0;
        for (std::size_t j = 0; j < d; ++j) {
            auto k = static_cast<std::ptrdiff_t>(std::floor((x[j] + 1.0) * 0.5 * static_cast<double>(cells_per_axis)));
            k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(cells_per_axis) - 1);
            id = id * cells_per_axis + static_cast<std::size_t>(k);
        }
        return id;
    }

    /// Members of `rows` in x's cell.
    IndexList members(const Dataset& ds, std::span<const Index> rows, Point x) const {
        const std::size_t c = cell_of(x);
        IndexList out;
        for (Index i : rows) {
            if (cell_of(ds.x(i)) == c) {
                out.push_back(i);
            }
        }
        return out;
    }
};

namespace detail {

inline double log_binomial(std::size_t n, std::size_t k) {
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

// P(K = k) for K ~ Hypergeometric(population N, successes M, draws S), k = 0..S.
inline std::vector<double> hypergeometric_pmf(std::size_t N, std::size_t M, std::size_t S) {
    std::vector<double> pmf(S + 1, 0.0);
    const double denom = log_binomial(N, S);
    for (std::size_t k = 0; k <= S; ++k) {
        if (k > M || S - k > N - M) {
            continue;
        }
        pmf[k] = std::exp(log_binomial(M, k) + log_binomial(N - M, S - k) - denom);
    }
    return pmf;
}

}  // namespace detail

/// Infinite subsampling forest over a fixed grid partition:
/// (m1/m) * P(x's cell receives at least one of the s points).
inline double exact_irf_sub(Point x, const Dataset& ds, std::size_t s, const GridPartition& part) {
    if (s < 1 || s > ds.size()) {
        fail(ErrorKind::SizeExceedsPopulation, "exact_irf_sub needs 1 <= s <= n");
    }
    const auto cell = part.members(ds, iota_indices(ds.size()), x);
    const std::size_t m = cell.size();
    if (m == 0) {
        return 0.0;
    }
    std::size_t m1 = 0;
    for (Index i : cell) {
        m1 += ds.y(i) == Label::One ? 1 : 0;
    }
    const double p_empty = detail::hypergeometric_pmf(ds.size(), m, s)[0];
    return static_cast<double>(m1) / static_cast<double>(m) * (1.0 - p_empty);
}

/// Infinite under-sampling forest over a fixed grid partition: E[K1/(K0+K1)]
/// with independent hypergeometric cell counts per class and 0/0 = 0.
inline double exact_irf_under(Point x, const Dataset& ds, std::size_t s0, std::size_t s1,
                              const GridPartition& part) {
    check_stratified_sizes(ds, s0, s1);
    const std::size_t m0 = part.members(ds, ds.idx0(), x).size();
    const std::size_t m1 = part.members(ds, ds.idx1(), x).size();
    const auto pmf0 = detail::hypergeometric_pmf(ds.n0(), m0, s0);
    const auto pmf1 = detail::hypergeometric_pmf(ds.n1(), m1, s1);
    double out = 0.0;
    for (std::size_t k1 = 1; k1 < pmf1.size(); ++k1) {
        if (pmf1[k1] == 0.0) {
            continue;
        }
        double inner = 0.0;
        for (std::size_t k0 = 0; k0 < pmf0.size(); ++k0) {
            inner += pmf0[k0] * static_cast<double>(k1) / static_cast<double>(k0 + k1);
        }
        out += pmf1[k1] * inner;
    }
    return out;
}

struct LeafDiagnostics {
    double mean_diam_given_occupied = 0.0;
    double p_empty_leaf = 0.0;
};

/// Monte Carlo estimate, at probe x, of the mean diameter of x's leaf over
/// trees where that leaf is occupied, and of the probability it is empty.
inline LeafDiagnostics leaf_diagnostics(Point x, const Dataset& ds, std::size_t s, const TreeParams& params,
                                        std::size_t reps, RandomStream& rng) {
    require(reps >= 1, ErrorKind::InvalidArgument, "reps must be >= 1");
    if (s < 1 || s > ds.size()) {
        fail(ErrorKind::SizeExceedsPopulation, "leaf_diagnostics needs 1 <= s <= n");
    }
    Subsampler sampler(iota_indices(ds.size()));
    double diam = 0.0;
    std::size_t occupied = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto tree = PartitionTree::build(ds.points(), sampler.draw(s, rng), params, rng);
        const std::size_t k = tree.find_leaf(x);
        if (tree.leaf_rows_of(k).empty()) {
            continue;
        }
        ++occupied;
        diam += tree.leaf(k).cell.diameter();
    }
    LeafDiagnostics out;
    out.p_empty_leaf = 1.0 - static_cast<double>(occupied) / static_cast<double>(reps);
    out.mean_diam_given_occupied =
        occupied == 0 ? std::numeric_limits<double>::quiet_NaN() : diam / static_cast<double>(occupied);
    return out;
}

}  // namespace irf

#endif  // IRF_FOREST_HPP

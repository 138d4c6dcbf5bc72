#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "irf/enumerate.hpp"
#include "irf/forest.hpp"
#include "irf/synth.hpp"

using namespace irf;

namespace {

Dataset fixture() {
    const std::vector<double> coords = {0, 0, 0.1, 0, 0.3, 0.3, -0.5, 0.2, 0.9, -0.9, -0.2, -0.6, 0.05, -0.05};
    const std::vector<Label> ys = {Label::One, Label::Zero, Label::One, Label::Zero,
                                   Label::One, Label::Zero, Label::Zero};
    return {PointSet(2, coords), ys};
}
const double kProbe[] = {0.0, 0.05};

Dataset random_dataset(std::size_t n, RandomStream& rng, double p1 = 0.5) {
    std::vector<double> coords(2 * n);
    std::vector<Label> ys(n);
    for (auto& c : coords) {
        c = rng.uniform(-1, 1);
    }
    for (auto& y : ys) {
        y = rng.bernoulli(p1) ? Label::One : Label::Zero;
    }
    return {PointSet(2, coords), ys};
}

TreeParams params(std::size_t min_leaf, std::optional<std::size_t> depth, SplitRule rule = SplitRule::UniformRandom) {
    TreeParams t;
    t.min_leaf = min_leaf;
    t.max_depth = depth;
    t.rule = rule;
    return t;
}

}  // namespace

TEST_CASE("single-leaf trees", "[forest]") {
    RandomStream rng(1);
    const auto ds = fixture();
    const auto rows = iota_indices(ds.size());
    const auto a = PartitionTree::build(ds.points(), rows, params(7, std::nullopt), rng);
    CHECK(a.leaf_count() == 1);
    const auto b = PartitionTree::build(ds.points(), rows, params(1, 0), rng);
    CHECK(b.leaf_count() == 1);
    CHECK(b.leaf(0).cell.diameter() == 2.0);
    CHECK_THROWS_AS(PartitionTree::build(ds.points(), std::span<const Index>(), params(1, 3), rng), Error);
}

TEST_CASE("leaves tile the cube and respect min_leaf", "[forest]") {
    RandomStream rng(2);
    for (int t = 0; t < 20; ++t) {
        const auto ds = random_dataset(8, rng);
        const auto tree = PartitionTree::build(ds.points(), iota_indices(8), params(1, 3), rng);
        CHECK(tree.depth() <= 3);
        std::size_t total = 0;
        for (std::size_t k = 0; k < tree.leaf_count(); ++k) {
            CHECK(!tree.leaf_rows_of(k).empty());
            total += tree.leaf_rows_of(k).size();
            for (Index i : tree.leaf_rows_of(k)) {
                CHECK(tree.find_leaf(ds.x(i)) == k);
            }
        }
        CHECK(total == 8);
        double vol = 0.0;
        for (std::size_t k = 0; k < tree.leaf_count(); ++k) {
            const auto& c = tree.leaf(k).cell;
            vol += (c.hi[0] - c.lo[0]) * (c.hi[1] - c.lo[1]);
        }
        CHECK(vol == Catch::Approx(4.0));
        for (int q = 0; q < 1000; ++q) {
            const double x[] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            const auto& c = tree.leaf(tree.find_leaf(x)).cell;
            CHECK((x[0] >= c.lo[0] && x[0] <= c.hi[0] && x[1] >= c.lo[1] && x[1] <= c.hi[1]));
        }
    }
    const auto ds = random_dataset(200, rng);
    const auto tree = PartitionTree::build(ds.points(), iota_indices(200), params(5, 10), rng);
    for (std::size_t k = 0; k < tree.leaf_count(); ++k) {
        CHECK(tree.leaf_rows_of(k).size() >= 5);
    }
}

TEST_CASE("splits never read labels", "[forest]") {
    RandomStream data_rng(3);
    const auto ds = random_dataset(50, data_rng);
    std::vector<Label> flipped(ds.labels());
    for (auto& y : flipped) {
        y = y == Label::One ? Label::Zero : Label::One;
    }
    const Dataset other(ds.points(), flipped);
    RandomStream a(99), b(99);
    const auto ta = PartitionTree::build(ds.points(), iota_indices(50), params(3, 6), a);
    const auto tb = PartitionTree::build(other.points(), iota_indices(50), params(3, 6), b);
    REQUIRE(ta.leaf_count() == tb.leaf_count());
    for (std::size_t k = 0; k < ta.leaf_count(); ++k) {
        CHECK(ta.leaf(k).cell.lo == tb.leaf(k).cell.lo);
        CHECK(ta.leaf(k).cell.hi == tb.leaf(k).cell.hi);
        const auto ra = ta.leaf_rows_of(k), rb = tb.leaf_rows_of(k);
        CHECK(std::vector<Index>(ra.begin(), ra.end()) == std::vector<Index>(rb.begin(), rb.end()));
    }
}

TEST_CASE("leaf proportions and the 0/0 convention", "[forest]") {
    std::vector<Label> ys = {Label::One, Label::Zero, Label::Zero};
    const Dataset ds(PointSet(1, {0.1, 0.2, 0.3}), ys);
    const Index all[] = {0, 1, 2};
    auto p = leaf_counts(ds, all);
    CHECK(p.count1 == 1);
    CHECK(p.count_total() == 3);
    CHECK(p.value == Catch::Approx(1.0 / 3.0));
    CHECK(leaf_counts(ds, std::span<const Index>()).value == 0.0);
    const Index ones[] = {0};
    CHECK(leaf_counts(ds, ones).value == 1.0);
    std::vector<Label> y8(8, Label::Zero);
    y8[0] = y8[1] = Label::One;
    const Dataset d8(PointSet(1, std::vector<double>(8, 0.0)), y8);
    const auto all8 = iota_indices(8);
    CHECK(leaf_counts(d8, all8).value == 0.25);

    RandomStream rng(4);
    const auto tree = PartitionTree::build(ds.points(), all, params(3, std::nullopt), rng);
    const double x[] = {0.0};
    CHECK(tree_predict_sub(x, tree, ds).value == Catch::Approx(1.0 / 3.0));
    CHECK(tree_predict_under(x, tree, ds).count0 == 2);
}

TEST_CASE("forest trivial cases", "[forest]") {
    RandomStream rng(5);
    const auto ds = fixture();
    // B = 1 and one leaf: the subsample's class-1 share
    const double v = irf_sub(kProbe, ds, 4, 1, params(4, std::nullopt), rng);
    CHECK((v == 0.0 || v == 0.25 || v == 0.5 || v == 0.75 || v == 1.0));
    std::vector<Label> ones(7, Label::One);
    const Dataset all_one(ds.points(), ones);
    CHECK(irf_sub(kProbe, all_one, 3, 20, params(1, 3), rng) == 1.0);
    CHECK_THROWS_AS(irf_sub(kProbe, ds, 3, 0, params(1, 3), rng), Error);
    CHECK_THROWS_AS(irf_under(kProbe, all_one, 1, 1, 5, params(1, 3), rng), Error);
}

TEST_CASE("grid-partition exact forest matches frozen enumeration values", "[forest]") {
    const auto ds = fixture();
    const GridPartition part{2, 2};
    const double sub[] = {0.2857142857142857, 0.47619047619047616, 0.5904761904761905, 0.6476190476190476,
                          0.6666666666666666, 0.6666666666666666, 0.6666666666666666};
    for (std::size_t s = 1; s <= 7; ++s) {
        CHECK(std::abs(exact_irf_sub(kProbe, ds, s, part) - sub[s - 1]) < 1e-12);
    }
    const double under[4][3] = {{0.5833333333333334, 0.8888888888888888, 0.9166666666666666},
                                {0.5, 0.7777777777777778, 0.8333333333333334},
                                {0.4166666666666667, 0.6666666666666666, 0.75},
                                {0.3333333333333333, 0.5555555555555556, 0.6666666666666666}};
    for (std::size_t s0 = 1; s0 <= 4; ++s0) {
        for (std::size_t s1 = 1; s1 <= 3; ++s1) {
            CHECK(std::abs(exact_irf_under(kProbe, ds, s0, s1, part) - under[s0 - 1][s1 - 1]) < 1e-12);
        }
    }
}

TEST_CASE("grid-partition exact forest special cases", "[forest]") {
    // single cell: K1/K averages to n1/n for every s
    const auto ds = fixture();
    const GridPartition one{2, 1};
    for (std::size_t s = 1; s <= 7; ++s) {
        CHECK(std::abs(exact_irf_sub(kProbe, ds, s, one) - 3.0 / 7.0) < 1e-12);
    }
    // n = 4, s = 2, two cells along x1; x's cell holds rows {0 (y=1), 1 (y=0)}.
    // Of the 6 pairs: {0,1} -> 1/2, {0,2},{0,3} -> 1, {1,2},{1,3} -> 0, {2,3} -> 0 (empty)
    // so the average is 2.5 / 6.
    std::vector<Label> ys = {Label::One, Label::Zero, Label::One, Label::Zero};
    const Dataset four(PointSet(1, {-0.5, -0.2, 0.4, 0.7}), ys);
    const GridPartition halves{1, 2};
    const double x[] = {-0.9};
    CHECK(std::abs(exact_irf_sub(x, four, 2, halves) - 2.5 / 6.0) < 1e-15);
    // s = n: leaf proportion on the full data
    CHECK(exact_irf_sub(x, four, 4, halves) == 0.5);
}

TEST_CASE("Monte Carlo forests agree with enumeration of the median tree", "[forest]") {
    RandomStream rng(6);
    const auto tree = params(1, 2, SplitRule::Median);
    std::vector<Label> ys = {Label::One, Label::Zero, Label::One, Label::Zero, Label::Zero, Label::One};
    const Dataset ds(PointSet(2, {0.1, 0.2, -0.3, 0.5, 0.7, -0.1, -0.6, -0.6, 0.2, 0.9, 0.0, -0.4}), ys);
    const double x[] = {0.05, 0.1};
    auto leaf = [&](const IndexList& rows) {
        RandomStream unused(0);
        const auto t = PartitionTree::build(ds.points(), rows, tree, unused);
        const auto span = t.leaf_rows(x);
        return IndexList(span.begin(), span.end());
    };
    const std::size_t B = 100000;
    const double m1 = enumerate_irf_sub(ds, 3, leaf);
    const double m2 = enumerate_plain(ds, 3, [&](const IndexList& r) {
        const double v = leaf_proportion(ds, leaf(r));
        return v * v;
    });
    CHECK(std::abs(irf_sub(x, ds, 3, B, tree, rng) - m1) <= 3 * std::sqrt((m2 - m1 * m1) / B));
    const double u1 = enumerate_irf_under(ds, 2, 2, leaf);
    const double u2 = enumerate_stratified(ds, 2, 2, [&](const IndexList& a, const IndexList& b) {
        IndexList both = a;
        both.insert(both.end(), b.begin(), b.end());
        const double v = leaf_proportion(ds, leaf(both));
        return v * v;
    });
    CHECK(std::abs(irf_under(x, ds, 2, 2, B, tree, rng) - u1) <= 3 * std::sqrt((u2 - u1 * u1) / B));
}

TEST_CASE("symmetric configuration gives one half", "[forest]") {
    // class 0 mirrored onto class 1 through x = 0
    std::vector<double> coords;
    std::vector<Label> ys;
    for (double v : {0.2, 0.5, 0.8}) {
        coords.push_back(-v);
        ys.push_back(Label::Zero);
        coords.push_back(v);
        ys.push_back(Label::One);
    }
    const Dataset ds(PointSet(1, coords), ys);
    RandomStream rng(7);
    const double x[] = {0.0};
    const double v = irf_under(x, ds, 2, 2, 200000, params(1, 2), rng);
    CHECK(std::abs(v - 0.5) < 0.01);
}

TEST_CASE("importance-sampling forest", "[forest]") {
    RandomStream rng(8);
    const auto ds = fixture();  // n0 = 4, n1 = 3
    RandomStream a(1), b(1);
    const double under = irf_under(kProbe, ds, 4, 3, 200, params(1, 3), a);
    const double is = irf_is(kProbe, ds, 4, 3, 200, params(1, 3), b);
    CHECK(is == Catch::Approx(under));  // n0 s1 = n1 s0
    std::vector<Label> ones(7, Label::One);
    CHECK_THROWS_AS(irf_is(kProbe, Dataset(ds.points(), ones), 1, 1, 10, params(1, 3), rng), Error);
}

TEST_CASE("leaf diagnostics", "[forest]") {
    const auto model = make_model(Setup::MarginalImbalance, Scenario::Balanced);
    RandomStream data_rng(9);
    const auto ds = generate(model, 2000, data_rng);
    const double x[] = {0.1, -0.2};
    RandomStream rng(10);
    const auto root = leaf_diagnostics(x, ds, 30, params(30, std::nullopt), 20, rng);
    CHECK(root.mean_diam_given_occupied == 2.0);
    CHECK(root.p_empty_leaf == 0.0);
    const auto deep = leaf_diagnostics(x, ds, 100, params(1, 12), 50, rng);
    CHECK(deep.p_empty_leaf == 0.0);
    std::vector<double> diam;
    for (std::size_t s : {50, 200, 800}) {
        diam.push_back(leaf_diagnostics(x, ds, s, TreeParams{}, 400, rng).mean_diam_given_occupied);
    }
    CHECK(diam[0] > diam[1]);
    CHECK(diam[1] > diam[2]);
}

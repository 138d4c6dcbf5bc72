#include <catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>

#include "irf/dataset.hpp"

using namespace irf;

namespace {

Dataset labelled(const std::vector<int>& ys, std::size_t d = 1) {
    std::vector<double> coords;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            coords.push_back(-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(ys.size() + 1));
        }
        labels.push_back(ys[i] ? Label::One : Label::Zero);
    }
    return {PointSet(d, coords), labels};
}

Dataset counts(std::size_t n0, std::size_t n1) {
    std::vector<int> ys(n0, 0);
    ys.insert(ys.end(), n1, 1);
    return labelled(ys);
}

}  // namespace

TEST_CASE("partition_by_class", "[dataset]") {
    auto [a0, a1] = partition_by_class(labelled({1, 0, 0, 1}));
    CHECK(a0 == IndexList{1, 2});
    CHECK(a1 == IndexList{0, 3});
    auto [b0, b1] = partition_by_class(labelled({0, 0}));
    CHECK(b0 == IndexList{0, 1});
    CHECK(b1.empty());
    auto [c0, c1] = partition_by_class(labelled({1}));
    CHECK(c0.empty());
    CHECK(c1 == IndexList{0});
}

TEST_CASE("every index lands in exactly one class list", "[dataset]") {
    RandomStream rng(11);
    std::vector<int> ys(200);
    for (auto& y : ys) {
        y = rng.bernoulli(0.3) ? 1 : 0;
    }
    const auto ds = labelled(ys);
    std::vector<int> seen(ys.size(), 0);
    for (auto i : ds.idx0()) {
        ++seen[i];
        CHECK(ys[i] == 0);
    }
    for (auto i : ds.idx1()) {
        ++seen[i];
        CHECK(ys[i] == 1);
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST_CASE("imbalance_ratio", "[dataset]") {
    CHECK(imbalance_ratio(counts(90, 10)) == 9.0);
    CHECK(imbalance_ratio(counts(50, 50)) == 1.0);
    CHECK(imbalance_ratio(counts(0, 5)) == 0.0);
    try {
        imbalance_ratio(counts(4, 0));
        FAIL("expected EmptyMinorityClass");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyMinorityClass);
    }
}

TEST_CASE("empirical_priors", "[dataset]") {
    auto a = empirical_priors(counts(900, 100), Stratified{10, 10});
    CHECK(a.p_hat == Catch::Approx(0.1));
    CHECK(a.p_star_hat == Catch::Approx(0.5));
    auto b = empirical_priors(counts(50, 50), Plain{20});
    CHECK(b.p_hat == 0.5);
    CHECK(b.p_star_hat == 0.5);
    auto c = empirical_priors(counts(90, 10), Stratified{3, 3});
    CHECK(c.p_hat == Catch::Approx(0.1));
    CHECK(c.p_star_hat == 0.5);
}

TEST_CASE("subsample_plain basics", "[dataset]") {
    RandomStream rng(2);
    const auto ds = counts(3, 4);
    auto full = subsample_plain(ds, 7, rng);
    std::sort(full.begin(), full.end());
    CHECK(full == iota_indices(7));
    CHECK(subsample_plain(labelled({1}), 1, rng) == IndexList{0});
    try {
        subsample_plain(ds, 8, rng);
        FAIL("expected SizeExceedsPopulation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SizeExceedsPopulation);
    }
}

TEST_CASE("plain subsamples are uniform over all C(5,2) subsets", "[dataset]") {
    RandomStream rng(3);
    Subsampler sampler(iota_indices(5));
    std::map<std::pair<Index, Index>, int> freq;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        auto d = sampler.draw(2, rng);
        ++freq[{std::min(d[0], d[1]), std::max(d[0], d[1])}];
    }
    REQUIRE(freq.size() == 10);
    double chi2 = 0.0;
    for (const auto& [k, c] : freq) {
        CHECK(std::abs(c / double(draws) - 0.1) < 0.01);
        chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
    }
    // chi-square with 9 d.o.f.: 0.999 quantile is 27.88
    CHECK(chi2 < 27.88);
}

TEST_CASE("stratified subsamples are uniform over pairs", "[dataset]") {
    RandomStream rng(4);
    const auto ds = labelled({0, 1, 0, 1});
    std::map<std::pair<Index, Index>, int> freq;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        auto [a, b] = subsample_stratified(ds, 1, 1, rng);
        REQUIRE(a.size() == 1);
        REQUIRE(b.size() == 1);
        CHECK(ds.y(a[0]) == Label::Zero);
        CHECK(ds.y(b[0]) == Label::One);
        ++freq[{a[0], b[0]}];
    }
    REQUIRE(freq.size() == 4);
    for (const auto& [k, c] : freq) {
        CHECK(std::abs(c / double(draws) - 0.25) < 0.01);
    }
    auto [f0, f1] = subsample_stratified(ds, 2, 2, rng);
    std::sort(f0.begin(), f0.end());
    std::sort(f1.begin(), f1.end());
    CHECK(f0 == ds.idx0());
    CHECK(f1 == ds.idx1());
}

TEST_CASE("stratified size errors", "[dataset]") {
    RandomStream rng(5);
    auto kind_of = [&](const Dataset& ds, std::size_t s0, std::size_t s1) {
        try {
            subsample_stratified(ds, s0, s1, rng);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };
    CHECK(kind_of(counts(3, 2), 1, 3) == ErrorKind::SizeExceedsClass);
    CHECK(kind_of(counts(3, 2), 4, 1) == ErrorKind::SizeExceedsClass);
    CHECK(kind_of(counts(3, 0), 1, 1) == ErrorKind::EmptyMinorityClass);
    CHECK(kind_of(counts(0, 3), 1, 1) == ErrorKind::EmptyMajorityClass);
}

TEST_CASE("same stream, same subsamples", "[dataset]") {
    const auto ds = counts(20, 20);
    RandomStream a(77), b(77);
    for (int i = 0; i < 10; ++i) {
        CHECK(subsample_plain(ds, 5, a) == subsample_plain(ds, 5, b));
    }
}

TEST_CASE("chebyshev distance", "[dataset]") {
    const double a[] = {0.0, 0.0}, b[] = {0.3, -0.7};
    CHECK(chebyshev(a, b) == 0.7);
    CHECK(chebyshev(b, b) == 0.0);
}

TEST_CASE("CSV round trip is exact", "[dataset]") {
    RandomStream rng(6);
    std::vector<double> coords;
    std::vector<Label> ys;
    for (int i = 0; i < 50; ++i) {
        coords.push_back(rng.uniform(-1, 1));
        coords.push_back(rng.uniform(-1, 1));
        ys.push_back(rng.bernoulli(0.5) ? Label::One : Label::Zero);
    }
    const Dataset ds(PointSet(2, coords), ys);
    std::stringstream ss;
    write_csv(ds, ss);
    CHECK(ss.str().rfind("x1,x2,y\n", 0) == 0);
    const auto back = read_csv(ss);
    CHECK(back.points().coords() == ds.points().coords());
    CHECK(back.labels() == ds.labels());
}

TEST_CASE("CSV parse errors", "[dataset]") {
    auto kind_of = [](const std::string& text) {
        std::istringstream in(text);
        try {
            read_csv(in);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };
    CHECK(kind_of("") == ErrorKind::ParseError);
    CHECK(kind_of("a,b,y\n0,0,1\n") == ErrorKind::ParseError);
    CHECK(kind_of("x1,x2,y\n0,0,2\n") == ErrorKind::ParseError);
    CHECK(kind_of("x1,x2,y\n0,zero,1\n") == ErrorKind::ParseError);
    CHECK(kind_of("x1,x2,y\n0,0\n") == ErrorKind::ParseError);
    CHECK_THROWS_AS(read_csv_file("/nonexistent/file.csv"), Error);
}

TEST_CASE("non-finite coordinates are rejected", "[dataset]") {
    CHECK_THROWS_AS(Dataset(PointSet(1, {std::nan("")}), {Label::One}), Error);
}

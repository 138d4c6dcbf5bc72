#ifndef IRF_DATASET_HPP
#define IRF_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "irf/errors.hpp"
#include "irf/random.hpp"

namespace irf {

using Index = std::size_t;
using IndexList = std::vector<Index>;
using Point = std::span<const double>;

/// Max-norm distance, the only metric used throughout.
inline double chebyshev(Point a, Point b) noexcept {
    double out = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        out = std::max(out, std::abs(a[j] - b[j]));
    }
    return out;
}

/// Dense row-major set of points of a common dimension.
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(std::size_t dim) : dim_(dim) {
        require(dim >= 1, ErrorKind::InvalidArgument, "PointSet dimension must be >= 1");
    }
    PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
        require(dim >= 1, ErrorKind::InvalidArgument, "PointSet dimension must be >= 1");
        require(coords_.size() % dim == 0, ErrorKind::InvalidArgument,
                "coordinate count is not a multiple of the dimension");
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    bool empty() const noexcept { return size() == 0; }

    Point operator[](std::size_t i) const noexcept { return {coords_.data() + i * dim_, dim_}; }

    void push_back(Point p) {
        require(p.size() == dim_, ErrorKind::InvalidArgument, "point dimension mismatch");
        coords_.insert(coords_.end(), p.begin(), p.end());
    }

    const std::vector<double>& coords() const noexcept { return coords_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
};

/// Binary label.
enum class Label : std::uint8_t { Zero = 0, One = 1 };

inline constexpr int as_int(Label y) noexcept { return static_cast<int>(y); }

struct LabeledSample {
    std::vector<double> x;
    Label y = Label::Zero;
};

/// Labeled samples with cached class partition. Immutable once built.
class Dataset {
public:
    Dataset() = default;

    Dataset(PointSet points, std::vector<Label> labels)
        : points_(std::move(points)), labels_(std::move(labels)) {
        require(points_.size() == labels_.size(), ErrorKind::InvalidArgument,
                "point and label counts differ");
        for (double c : points_.coords()) {
            require(std::isfinite(c), ErrorKind::InvalidArgument, "non-finite coordinate");
        }
        for (Index i = 0; i < labels_.size(); ++i) {
            (labels_[i] == Label::One ? idx1_ : idx0_).push_back(i);
        }
    }

    static Dataset from_samples(std::span<const LabeledSample> samples) {
        require(!samples.empty(), ErrorKind::InvalidArgument, "no samples");
        PointSet pts(samples.front().x.size());
        std::vector<Label> ys;
        ys.reserve(samples.size());
        for (const auto& s : samples) {
            pts.push_back(s.x);
            ys.push_back(s.y);
        }
        return {std::move(pts), std::move(ys)};
    }

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dim() const noexcept { return points_.dim(); }
    bool empty() const noexcept { return labels_.empty(); }

    Point x(Index i) const noexcept { return points_[i]; }
    Label y(Index i) const noexcept { return labels_[i]; }
    int label(Index i) const noexcept { return as_int(labels_[i]); }

    const PointSet& points() const noexcept { return points_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }

    const IndexList& idx0() const noexcept { return idx0_; }
    const IndexList& idx1() const noexcept { return idx1_; }
    std::size_t n0() const noexcept { return idx0_.size(); }
    std::size_t n1() const noexcept { return idx1_.size(); }

private:
    PointSet points_;
    std::vector<Label> labels_;
    IndexList idx0_;
    IndexList idx1_;
};

struct Plain {
    std::size_t s = 1;
};

struct Stratified {
    std::size_t s0 = 1;
    std::size_t s1 = 1;
};

using SubsampleScheme = std::variant<Plain, Stratified>;

/// Class index lists in dataset order.
inline std::pair<IndexList, IndexList> partition_by_class(const Dataset& ds) {
    require(!ds.empty(), ErrorKind::InvalidArgument, "partition_by_class needs a nonempty dataset");
    return {ds.idx0(), ds.idx1()};
}

/// n0 / n1.
inline double imbalance_ratio(const Dataset& ds) {
    if (ds.n1() == 0) {
        fail(ErrorKind::EmptyMinorityClass, "imbalance ratio undefined without class-1 samples");
    }
    return static_cast<double>(ds.n0()) / static_cast<double>(ds.n1());
}

struct PriorEstimates {
    double p_hat = 0.0;
    double p_star_hat = 0.0;
};

inline PriorEstimates empirical_priors(const Dataset& ds, const SubsampleScheme& scheme) {
    require(!ds.empty(), ErrorKind::InvalidArgument, "empirical_priors needs a nonempty dataset");
    const double p_hat = static_cast<double>(ds.n1()) / static_cast<double>(ds.size());
    if (const auto* st = std::get_if<Stratified>(&scheme)) {
        require(st->s0 + st->s1 >= 1, ErrorKind::InvalidArgument, "s0 + s1 must be >= 1");
        return {p_hat, static_cast<double>(st->s1) / static_cast<double>(st->s0 + st->s1)};
    }
    return {p_hat, p_hat};
}

/// Draws uniform without-replacement subsets of a fixed population by partial
/// Fisher-Yates on a persistent buffer. The buffer stays a permutation of the
/// population, so each draw costs O(k) and is uniform whatever the previous
/// draws did.
class Subsampler {
public:
    explicit Subsampler(IndexList population) : pool_(std::move(population)) {}

    std::size_t population() const noexcept { return pool_.size(); }

    /// First k entries of the returned span form the draw; valid until the next call.
    std::span<const Index> draw(std::size_t k, RandomStream& rng) {
        if (k > pool_.size()) {
            fail(ErrorKind::SizeExceedsPopulation,
                 "subsample of " + std::to_string(k) + " from population of " + std::to_string(pool_.size()));
        }
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(pool_.size() - i));
            std::swap(pool_[i], pool_[j]);
        }
        return {pool_.data(), k};
    }

private:
    IndexList pool_;
};

inline IndexList iota_indices(std::size_t n) {
    IndexList out(n);
    std::iota(out.begin(), out.end(), Index{0});
    return out;
}

inline IndexList subsample_plain(const Dataset& ds, std::size_t s, RandomStream& rng) {
    require(s >= 1, ErrorKind::InvalidArgument, "subsample size must be >= 1");
    if (s > ds.size()) {
        fail(ErrorKind::SizeExceedsPopulation,
             "s=" + std::to_string(s) + " exceeds n=" + std::to_string(ds.size()));
    }
    Subsampler sampler(iota_indices(ds.size()));
    const auto picked = sampler.draw(s, rng);
    return {picked.begin(), picked.end()};
}

inline void check_stratified_sizes(const Dataset& ds, std::size_t s0, std::size_t s1) {
    if (ds.n1() == 0) {
        fail(ErrorKind::EmptyMinorityClass, "no class-1 samples");
    }
    if (ds.n0() == 0) {
        fail(ErrorKind::EmptyMajorityClass, "no class-0 samples");
    }
    require(s0 >= 1 && s1 >= 1, ErrorKind::InvalidArgument, "s0 and s1 must be >= 1");
    if (s0 > ds.n0()) {
        fail(ErrorKind::SizeExceedsClass,
             "s0=" + std::to_string(s0) + " exceeds n0=" + std::to_string(ds.n0()));
    }
    if (s1 > ds.n1()) {
        fail(ErrorKind::SizeExceedsClass,
             "s1=" + std::to_string(s1) + " exceeds n1=" + std::to_string(ds.n1()));
    }
}

inline std::pair<IndexList, IndexList> subsample_stratified(const Dataset& ds, std::size_t s0,
                                                            std::size_t s1, RandomStream& rng) {
    check_stratified_sizes(ds, s0, s1);
    Subsampler zeros(ds.idx0());
    Subsampler ones(ds.idx1());
    const auto a = zeros.draw(s0, rng);
    const auto b = ones.draw(s1, rng);
    return {IndexList(a.begin(), a.end()), IndexList(b.begin(), b.end())};
}

// CSV: header x1,...,xd,y; labels strictly "0" or "1".

inline void write_csv(const Dataset& ds, std::ostream& out) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        out << 'x' << (j + 1) << ',';
    }
    out << "y\n";
    out << std::setprecision(17);
    for (Index i = 0; i < ds.size(); ++i) {
        for (double c : ds.x(i)) {
            out << c << ',';
        }
        out << ds.label(i) << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') {
        s.pop_back();
    }
    return s;
}

}  // namespace detail

inline Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorKind::ParseError, "empty CSV input");
    }
    const auto header = detail::split_fields(detail::strip_cr(line));
    if (header.size() < 2 || header.back() != "y") {
        fail(ErrorKind::ParseError, "header must be x1,...,xd,y");
    }
    const std::size_t dim = header.size() - 1;
    for (std::size_t j = 0; j < dim; ++j) {
        if (header[j] != "x" + std::to_string(j + 1)) {
            fail(ErrorKind::ParseError, "unexpected header field '" + header[j] + "'");
        }
    }
    PointSet pts(dim);
    std::vector<Label> ys;
    std::vector<double> row(dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto fields = detail::split_fields(line);
        if (fields.size() != dim + 1) {
            fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": wrong field count");
        }
        for (std::size_t j = 0; j < dim; ++j) {
            std::size_t used = 0;
            try {
                row[j] = std::stod(fields[j], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != fields[j].size() || !std::isfinite(row[j])) {
                fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad coordinate");
            }
        }
        if (fields[dim] == "0") {
            ys.push_back(Label::Zero);
        } else if (fields[dim] == "1") {
            ys.push_back(Label::One);
        } else {
            fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": label must be 0 or 1");
        }
        pts.push_back(row);
    }
    return {std::move(pts), std::move(ys)};
}

inline Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::IoError, "cannot open " + path);
    }
    return read_csv(in);
}

}  // namespace irf

#endif  // IRF_DATASET_HPP

#ifndef IRF_EXPERIMENT_HPP
#define IRF_EXPERIMENT_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "irf/dataset.hpp"
#include "irf/debias.hpp"
#include "irf/enumerate.hpp"
#include "irf/errors.hpp"
#include "irf/forest.hpp"
#include "irf/nn.hpp"
#include "irf/parallel.hpp"
#include "irf/random.hpp"
#include "irf/stats.hpp"
#include "irf/synth.hpp"
#include "irf/theory.hpp"

// Monte Carlo harness: repeated datasets from a synthetic model, estimators
// evaluated on a grid or at probe points, summaries written as CSV.
//
// Every repetition draws from its own stream derived from (seed, n, rep), and
// reductions run in repetition order, so outputs do not depend on threads.

namespace irf {

enum class Estimator { IrfSub, NnSub, NnUnder, NnIs, IrfUnder, IrfIs };

inline constexpr std::array<Estimator, 6> kAllEstimators = {Estimator::IrfSub,  Estimator::NnSub,
                                                            Estimator::NnUnder, Estimator::NnIs,
                                                            Estimator::IrfUnder, Estimator::IrfIs};

inline std::string_view to_string(Estimator e) noexcept {
    switch (e) {
        case Estimator::IrfSub: return "irf_sub";
        case Estimator::NnSub: return "nn_sub";
        case Estimator::NnUnder: return "nn_under";
        case Estimator::NnIs: return "nn_is";
        case Estimator::IrfUnder: return "irf_under";
        case Estimator::IrfIs: return "irf_is";
    }
    return "?";
}

inline Estimator parse_estimator(std::string_view name) {
    for (auto e : kAllEstimators) {
        if (to_string(e) == name) {
            return e;
        }
    }
    fail(ErrorKind::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

inline std::vector<Estimator> parse_estimator_list(const std::string& csv) {
    std::vector<Estimator> out;
    std::istringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        const auto e = parse_estimator(item);
        if (std::find(out.begin(), out.end(), e) == out.end()) {
            out.push_back(e);
        }
    }
    require(!out.empty(), ErrorKind::InvalidArgument, "estimator list is empty");
    return out;
}

inline bool uses_forest(Estimator e) noexcept {
    return e == Estimator::IrfSub || e == Estimator::IrfUnder || e == Estimator::IrfIs;
}
inline bool uses_stratified(Estimator e) noexcept { return e != Estimator::IrfSub && e != Estimator::NnSub; }
inline bool is_importance(Estimator e) noexcept { return e == Estimator::NnIs || e == Estimator::IrfIs; }

/// The under-sampling and importance-sampling variants of a learner share one
/// ensemble per repetition (the latter is g_n of the former).
enum class Family { NnSub = 0, IrfSub = 1, NnUnder = 2, IrfUnder = 3 };

inline Family family_of(Estimator e) noexcept {
    switch (e) {
        case Estimator::NnSub: return Family::NnSub;
        case Estimator::IrfSub: return Family::IrfSub;
        case Estimator::NnUnder:
        case Estimator::NnIs: return Family::NnUnder;
        default: return Family::IrfUnder;
    }
}

/// What the error of an estimate is measured against.
enum class Target {
    Native,  // mu* for nn_under / irf_under, mu otherwise
    Mu,
    MuStar,
};

inline Target parse_target(std::string_view s) {
    if (s == "native") return Target::Native;
    if (s == "mu") return Target::Mu;
    if (s == "mu_star") return Target::MuStar;
    fail(ErrorKind::InvalidArgument, "target must be native, mu or mu_star");
}

/// How stratified subsample sizes are chosen from a realized dataset.
enum class UnderSizes {
    Alg2,          // s1 = floor(sqrt(min(n0,n1))), s0 = ceil(sqrt(min(n0,n1)))
    Proportional,  // s1 = round(s n1 / n): keeps p* close to the empirical prior
};

inline UnderSizes parse_under_sizes(std::string_view s) {
    if (s == "alg2") return UnderSizes::Alg2;
    if (s == "proportional") return UnderSizes::Proportional;
    fail(ErrorKind::InvalidArgument, "under-sizes must be alg2 or proportional");
}

struct SRule {
    enum class Kind { Sqrt, Pow08, Fixed };
    Kind kind = Kind::Sqrt;
    std::size_t k = 0;

    static SRule parse(std::string_view s) {
        if (s == "sqrt") return {Kind::Sqrt, 0};
        if (s == "pow08") return {Kind::Pow08, 0};
        if (s.rfind("fixed:", 0) == 0) {
            const std::string num(s.substr(6));
            std::size_t used = 0;
            unsigned long long v = 0;
            try {
                v = std::stoull(num, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != num.size() || v == 0) {
                fail(ErrorKind::InvalidArgument, "fixed:<k> needs a positive integer k");
            }
            return {Kind::Fixed, static_cast<std::size_t>(v)};
        }
        fail(ErrorKind::InvalidArgument, "s-rule must be sqrt, pow08 or fixed:<k>");
    }

    std::string str() const {
        switch (kind) {
            case Kind::Sqrt: return "sqrt";
            case Kind::Pow08: return "pow08";
            case Kind::Fixed: return "fixed:" + std::to_string(k);
        }
        return "?";
    }
};

/// floor(n^0.8) in exact integer arithmetic: largest r with r^5 <= n^4.
inline std::size_t floor_pow08(std::size_t n) {
    using u128 = unsigned __int128;
    const u128 n4 = static_cast<u128>(n) * n * n * n;
    auto pow5 = [](u128 r) { return r * r * r * r * r; };
    auto r = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.8)));
    while (r > 0 && pow5(r) > n4) {
        --r;
    }
    while (pow5(static_cast<u128>(r) + 1) <= n4) {
        ++r;
    }
    return r;
}

inline std::size_t resolve_s(std::size_t n, const SRule& rule) {
    require(n >= 1, ErrorKind::InvalidArgument, "n must be >= 1");
    switch (rule.kind) {
        case SRule::Kind::Sqrt: return std::max<std::size_t>(1, isqrt_floor(n));
        case SRule::Kind::Pow08: return std::max<std::size_t>(1, floor_pow08(n));
        case SRule::Kind::Fixed: return std::min(rule.k, n);
    }
    return 1;
}

struct StratifiedSizes {
    std::size_t s0 = 1;
    std::size_t s1 = 1;
};

inline StratifiedSizes stratified_sizes(const Dataset& ds, std::size_t s, UnderSizes mode) {
    require(ds.n0() >= 1 && ds.n1() >= 1, ErrorKind::InvalidArgument, "both classes must be present");
    if (mode == UnderSizes::Alg2) {
        const auto a = alg2_sizes(ds.n0(), ds.n1());
        return {a.s0, a.s1};
    }
    const double share = static_cast<double>(s) * static_cast<double>(ds.n1()) / static_cast<double>(ds.size());
    std::size_t s1 = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(share)));
    s1 = std::min(s1, ds.n1());
    std::size_t s0 = s > s1 ? s - s1 : 1;
    s0 = std::clamp<std::size_t>(s0, 1, ds.n0());
    return {s0, s1};
}

struct ExperimentConfig {
    Setup setup = Setup::MarginalImbalance;
    Scenario scenario = Scenario::Balanced;
    std::size_t d = 2;
    std::vector<std::size_t> n_list = {100, 200, 500, 1000};
    SRule s_rule;
    std::size_t B = 500;
    bool nn_exact = false;  // closed-form infinite ensembles for the 1-NN estimators
    std::size_t reps = 500;
    std::size_t grid_per_axis = 100;
    std::vector<Estimator> estimators{kAllEstimators.begin(), kAllEstimators.end()};
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::vector<std::vector<double>> probes = {{0.25, 0.25}, {-0.5, -0.5}};
    Target target = Target::Native;
    UnderSizes under_sizes = UnderSizes::Alg2;
    TreeParams tree;

    void validate() const {
        require(reps >= 2, ErrorKind::InvalidArgument, "reps must be >= 2");
        require(!n_list.empty(), ErrorKind::InvalidArgument, "n list is empty");
        require(grid_per_axis >= 2, ErrorKind::InvalidArgument, "grid must have >= 2 points per axis");
        require(!estimators.empty(), ErrorKind::InvalidArgument, "no estimators selected");
        for (auto n : n_list) {
            require(n >= 2, ErrorKind::InvalidArgument, "every n must be >= 2");
        }
        for (auto e : estimators) {
            if (uses_forest(e) || !nn_exact) {
                require(B >= 1, ErrorKind::InvalidArgument, "ensemble size B must be >= 1");
            }
        }
        for (const auto& p : probes) {
            require(p.size() == d, ErrorKind::InvalidArgument, "probe dimension differs from d");
        }
    }
};

// ---------------------------------------------------------------------------
// One repetition

struct RepDataset {
    Dataset ds;
    std::size_t redraws = 0;
};

inline constexpr std::size_t kMaxRedraws = 100;

/// Dataset for one repetition, redrawn while a class is empty.
inline RepDataset draw_rep_dataset(const SyntheticModel& model, std::size_t n, const RandomStream& rep) {
    for (std::size_t attempt = 0; attempt <= kMaxRedraws; ++attempt) {
        auto stream = rep.child(StreamTag::Redraw, attempt);
        auto ds = generate(model, n, stream);
        if (ds.n0() >= 1 && ds.n1() >= 1) {
            return {std::move(ds), attempt};
        }
    }
    fail(ErrorKind::EmptyMinorityClass, "a class stayed empty after " + std::to_string(kMaxRedraws) + " redraws");
}

inline RandomStream rep_stream(std::uint64_t seed, std::size_t n, std::size_t rep) {
    return RandomStream(seed).child(StreamTag::Dataset, n).child(StreamTag::Repetition, rep);
}

struct FamilyResult {
    std::vector<double> values;  // raw ensemble output per query
    std::size_t s = 0;
    std::size_t s0 = 0;
    std::size_t s1 = 0;
    double seconds = 0.0;
};

inline FamilyResult evaluate_family(Family f, const PointSet& queries, const Dataset& ds,
                                    const ExperimentConfig& cfg, const RandomStream& rep) {
    const auto start = std::chrono::steady_clock::now();
    auto stream = rep.child(StreamTag::Estimator, static_cast<std::uint64_t>(f));
    FamilyResult out;
    const std::size_t s = resolve_s(ds.size(), cfg.s_rule);
    if (f == Family::NnSub || f == Family::IrfSub) {
        out.s = s;
        if (f == Family::IrfSub) {
            out.values = irf_sub(queries, ds, s, cfg.B, cfg.tree, stream);
        } else if (cfg.nn_exact) {
            out.values.resize(queries.size());
            for (std::size_t q = 0; q < queries.size(); ++q) {
                out.values[q] = exact_sub_1nn(queries[q], ds, s);
            }
        } else {
            out.values = bagged_sub_1nn(queries, ds, s, cfg.B, stream);
        }
    } else {
        const auto sz = stratified_sizes(ds, s, cfg.under_sizes);
        out.s0 = sz.s0;
        out.s1 = sz.s1;
        out.s = sz.s0 + sz.s1;
        if (f == Family::IrfUnder) {
            out.values = irf_under(queries, ds, sz.s0, sz.s1, cfg.B, cfg.tree, stream);
        } else if (cfg.nn_exact) {
            out.values.resize(queries.size());
            for (std::size_t q = 0; q < queries.size(); ++q) {
                out.values[q] = exact_under_1nn(queries[q], ds, sz.s0, sz.s1);
            }
        } else {
            out.values = bagged_under_1nn(queries, ds, sz.s0, sz.s1, cfg.B, stream);
        }
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Estimates of every selected estimator for one repetition, plus the
/// stratified sizes the rep used (needed for mu*).
struct RepEstimates {
    std::vector<std::vector<double>> values;  // [estimator][query]
    std::vector<std::size_t> s, s0, s1;       // per estimator
    std::vector<double> seconds;              // per estimator
    StratifiedSizes strat;                    // sizes defining p* for mu* targets
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    std::size_t redraws = 0;
};

inline RepEstimates run_rep(const SyntheticModel& model, std::size_t n, std::size_t rep,
                            const PointSet& queries, const ExperimentConfig& cfg) {
    const auto stream = rep_stream(cfg.seed, n, rep);
    auto data = draw_rep_dataset(model, n, stream);
    const Dataset& ds = data.ds;

    std::map<Family, FamilyResult> cache;
    RepEstimates out;
    out.redraws = data.redraws;
    out.n0 = ds.n0();
    out.n1 = ds.n1();
    out.strat = stratified_sizes(ds, resolve_s(n, cfg.s_rule), cfg.under_sizes);
    for (auto e : cfg.estimators) {
        const Family f = family_of(e);
        auto it = cache.find(f);
        if (it == cache.end()) {
            it = cache.emplace(f, evaluate_family(f, queries, ds, cfg, stream)).first;
        }
        const FamilyResult& fr = it->second;
        std::vector<double> v = fr.values;
        if (is_importance(e)) {
            const EmpiricalPriors emp(ds.n0(), ds.n1(), fr.s0, fr.s1);
            for (auto& z : v) {
                z = g_n(z, emp);
            }
        }
        out.values.push_back(std::move(v));
        out.s.push_back(fr.s);
        out.s0.push_back(fr.s0);
        out.s1.push_back(fr.s1);
        out.seconds.push_back(fr.seconds);
    }
    return out;
}

/// Whether an estimator's error is measured against mu* under `target`.
inline bool measured_against_mu_star(Estimator e, Target target) noexcept {
    switch (target) {
        case Target::Mu: return false;
        case Target::MuStar: return true;
        case Target::Native: return e == Estimator::NnUnder || e == Estimator::IrfUnder;
    }
    return false;
}

inline PriorPair rep_priors(const SyntheticModel& model, const RepEstimates& r) {
    return {model.prior, static_cast<double>(r.strat.s1) / static_cast<double>(r.strat.s0 + r.strat.s1)};
}

// Most frequent (s0, s1) pair; ties go to the smaller pair.
inline std::pair<std::size_t, std::size_t> mode_pair(const std::map<std::pair<std::size_t, std::size_t>, std::size_t>& counts) {
    std::pair<std::size_t, std::size_t> best{0, 0};
    std::size_t best_count = 0;
    for (const auto& [k, c] : counts) {
        if (c > best_count) {
            best = k;
            best_count = c;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Bias / variance / MISE

struct McRow {
    Estimator estimator = Estimator::NnSub;
    std::size_t n = 0;
    std::size_t s = 0;
    std::size_t s0 = 0;
    std::size_t s1 = 0;
    double bias2 = 0.0;
    double variance = 0.0;
    double mise = 0.0;
    std::size_t redraws = 0;
    double runtime_seconds = 0.0;
};

/// Bias^2, variance and MISE over the evaluation grid. With e_r(x) the error
/// of repetition r: bias2 = avg_x (mean_r e)^2, variance = avg_x var_r(e)
/// (population form), mise = bias2 + variance = avg_x mean_r e^2.
inline std::vector<McRow> run_mc(const ExperimentConfig& cfg) {
    cfg.validate();
    const SyntheticModel model = make_model(cfg.setup, cfg.scenario, cfg.d);
    const PointSet grid = evaluation_grid(cfg.d, cfg.grid_per_axis);
    std::vector<double> mu(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        mu[g] = model.mu(grid[g]);
    }

    const std::size_t E = cfg.estimators.size();
    const std::size_t G = grid.size();
    constexpr std::size_t kBlock = 32;

    std::vector<McRow> rows;
    for (std::size_t n : cfg.n_list) {
        // Welford accumulators per (estimator, grid point), updated in rep order.
        std::vector<std::vector<double>> mean(E, std::vector<double>(G, 0.0));
        std::vector<std::vector<double>> m2(E, std::vector<double>(G, 0.0));
        std::vector<std::map<std::pair<std::size_t, std::size_t>, std::size_t>> size_counts(E);
        std::vector<std::size_t> s_plain(E, 0);
        std::vector<double> seconds(E, 0.0);
        std::size_t redraws = 0;

        for (std::size_t start = 0; start < cfg.reps; start += kBlock) {
            const std::size_t count = std::min(kBlock, cfg.reps - start);
            std::vector<RepEstimates> block(count);
            parallel_for(count, cfg.threads,
                         [&](std::size_t i) { block[i] = run_rep(model, n, start + i, grid, cfg); });
            for (std::size_t i = 0; i < count; ++i) {
                const RepEstimates& r = block[i];
                const double k = static_cast<double>(start + i + 1);
                redraws += r.redraws;
                const PriorPair pr = rep_priors(model, r);
                for (std::size_t e = 0; e < E; ++e) {
                    const bool star = measured_against_mu_star(cfg.estimators[e], cfg.target);
                    for (std::size_t g = 0; g < G; ++g) {
                        const double target = star ? g_inv(mu[g], pr) : mu[g];
                        const double err = r.values[e][g] - target;
                        const double delta = err - mean[e][g];
                        mean[e][g] += delta / k;
                        m2[e][g] += delta * (err - mean[e][g]);
                    }
                    if (uses_stratified(cfg.estimators[e])) {
                        ++size_counts[e][{r.s0[e], r.s1[e]}];
                    } else {
                        s_plain[e] = r.s[e];
                    }
                    seconds[e] += r.seconds[e];
                }
            }
        }

        for (std::size_t e = 0; e < E; ++e) {
            McRow row;
            row.estimator = cfg.estimators[e];
            row.n = n;
            if (uses_stratified(row.estimator)) {
                const auto [a, b] = mode_pair(size_counts[e]);
                row.s0 = a;
                row.s1 = b;
                row.s = a + b;
            } else {
                row.s = s_plain[e];
            }
            double b2 = 0.0, var = 0.0;
            for (std::size_t g = 0; g < G; ++g) {
                b2 += mean[e][g] * mean[e][g];
                var += m2[e][g] / static_cast<double>(cfg.reps);
            }
            row.bias2 = b2 / static_cast<double>(G);
            row.variance = var / static_cast<double>(G);
            row.mise = row.bias2 + row.variance;
            row.redraws = redraws;
            row.runtime_seconds = seconds[e];
            rows.push_back(row);
        }
    }
    return rows;
}

inline std::string format_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void write_mc_csv(const std::vector<McRow>& rows, std::ostream& out) {
    out << "estimator,n,s,s0,s1,bias2,variance,mise\n";
    for (const auto& r : rows) {
        out << to_string(r.estimator) << ',' << r.n << ',' << r.s << ',' << r.s0 << ',' << r.s1 << ','
            << format_g12(r.bias2) << ',' << format_g12(r.variance) << ',' << format_g12(r.mise) << '\n';
    }
}

// ---------------------------------------------------------------------------
// CLT at probe points

struct CltRow {
    Estimator estimator = Estimator::NnSub;
    std::size_t n = 0;
    std::vector<double> probe;
    std::vector<double> standardized;
    std::vector<double> estimates;
    std::vector<double> targets;
    double ks = 0.0;
    double coverage95 = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t redraws = 0;
};

/// Standardized errors sqrt(2n/s) (estimate - target) / sqrt(limit variance),
/// with target mu* for nn_under and mu for nn_sub / nn_is.
inline std::vector<CltRow> run_clt(const ExperimentConfig& cfg) {
    cfg.validate();
    require(cfg.reps >= 100, ErrorKind::InvalidArgument, "clt needs reps >= 100");
    require(!cfg.probes.empty(), ErrorKind::InvalidArgument, "clt needs at least one probe point");
    for (auto e : cfg.estimators) {
        if (uses_forest(e)) {
            fail(ErrorKind::InvalidArgument, "clt supports the 1-NN estimators only (nn_sub, nn_under, nn_is)");
        }
    }
    const SyntheticModel model = make_model(cfg.setup, cfg.scenario, cfg.d);
    PointSet probes(cfg.d);
    std::vector<double> mu;
    for (const auto& p : cfg.probes) {
        probes.push_back(p);
        mu.push_back(model.mu(p));
        require_positive_variance(clt_var_sub(mu.back()));
    }
    const std::size_t E = cfg.estimators.size();
    const std::size_t P = probes.size();

    std::vector<CltRow> rows;
    for (std::size_t n : cfg.n_list) {
        std::vector<RepEstimates> reps(cfg.reps);
        parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) { reps[r] = run_rep(model, n, r, probes, cfg); });
        std::size_t redraws = 0;
        for (const auto& r : reps) {
            redraws += r.redraws;
        }
        for (std::size_t e = 0; e < E; ++e) {
            const Estimator est = cfg.estimators[e];
            for (std::size_t q = 0; q < P; ++q) {
                CltRow row;
                row.estimator = est;
                row.n = n;
                row.probe = cfg.probes[q];
                row.redraws = redraws;
                for (const auto& r : reps) {
                    const PriorPair pr = rep_priors(model, r);
                    const double s = static_cast<double>(r.s[e]);
                    const double scale = std::sqrt(2.0 * static_cast<double>(n) / s);
                    double target = mu[q];
                    double var = 0.0;
                    if (est == Estimator::NnSub) {
                        var = clt_var_sub(mu[q]);
                    } else if (est == Estimator::NnUnder) {
                        target = g_inv(mu[q], pr);
                        var = clt_var_under(target, pr.p, pr.p_star);
                    } else {
                        var = clt_var_is(mu[q], pr.p, pr.p_star);
                    }
                    require_positive_variance(var);
                    const double v = r.values[e][q];
                    row.estimates.push_back(v);
                    row.targets.push_back(target);
                    row.standardized.push_back(scale * (v - target) / std::sqrt(var));
                }
                row.ks = ks_normal(row.standardized);
                row.coverage95 = coverage95(row.standardized);
                row.mean = irf::mean(row.standardized);
                row.sd = stddev(row.standardized);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

inline void write_clt_csv(const std::vector<CltRow>& rows, std::ostream& out) {
    out << "estimator,n,probe_x1,probe_x2,ks,coverage95,mean,sd\n";
    for (const auto& r : rows) {
        out << to_string(r.estimator) << ',' << r.n << ',' << format_g12(r.probe.at(0)) << ','
            << (r.probe.size() > 1 ? format_g12(r.probe[1]) : std::string()) << ',' << format_g12(r.ks) << ','
            << format_g12(r.coverage95) << ',' << format_g12(r.mean) << ',' << format_g12(r.sd) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Projection variance V1^s of a single base learner at x0

enum class V1sDesign {
    Plain,             // independent inner completions for each outer draw
    GroupedImportance, // outer draws importance-sampled near x0, completions shared within groups
};

struct V1sOptions {
    V1sDesign design = V1sDesign::GroupedImportance;
    std::size_t group_size = 50;    // outer draws sharing one set of completions
    double mixture_uniform = 0.5;   // proposal weight on the uniform design
    double box_scale = 1.5;         // local box half-width = box_scale * s^(-1/d)
};

struct V1sEstimate {
    double value = 0.0;
    double se = 0.0;
    std::size_t groups = 0;
};

/// 1-NN label at the probe; the default base learner.
struct OneNnLearner {};

namespace detail {

struct Completion {
    std::vector<double> coords;
    std::vector<Label> labels;
    double nn_dist = 0.0;
    int nn_label = 0;
};

inline Completion draw_completion(const SyntheticModel& model, Point x0, std::size_t count, RandomStream& rng) {
    Completion c;
    c.coords.resize(count * model.d);
    c.labels.resize(count);
    c.nn_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
        double* row = c.coords.data() + i * model.d;
        for (std::size_t j = 0; j < model.d; ++j) {
            row[j] = rng.uniform(-1.0, 1.0);
        }
        const Point p(row, model.d);
        c.labels[i] = rng.bernoulli(model.mu(p)) ? Label::One : Label::Zero;
        const double dist = chebyshev(x0, p);
        if (dist < c.nn_dist) {
            c.nn_dist = dist;
            c.nn_label = as_int(c.labels[i]);
        }
    }
    return c;
}

// Base learner on {Z1} followed by the completion; Z1 has dataset index 0.
template <class Learner>
double learner_value(Learner& learner, Point x0, Point x1, Label y1, const Completion& c, std::size_t d) {
    if constexpr (std::is_same_v<std::decay_t<Learner>, OneNnLearner>) {
        return chebyshev(x0, x1) <= c.nn_dist ? as_int(y1) : c.nn_label;
    } else {
        std::vector<double> coords(x1.begin(), x1.end());
        coords.insert(coords.end(), c.coords.begin(), c.coords.end());
        std::vector<Label> labels{y1};
        labels.insert(labels.end(), c.labels.begin(), c.labels.end());
        const Dataset ds(PointSet(d, std::move(coords)), std::move(labels));
        return learner(x0, ds);
    }
}

// Weighted one-way variance of row means minus the residual variance / K,
// where residuals remove row and (shared) column effects. h is M x K row-major.
inline double grouped_v1s(const std::vector<double>& h, const std::vector<double>& w, std::size_t M,
                          std::size_t K) {
    double W = 0.0, W2 = 0.0;
    for (double x : w) {
        W += x;
        W2 += x * x;
    }
    const double correction = 1.0 - W2 / (W * W);
    std::vector<double> A(M, 0.0), Bk(K, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t k = 0; k < K; ++k) {
            A[m] += h[m * K + k];
            Bk[k] += w[m] * h[m * K + k];
        }
        A[m] /= static_cast<double>(K);
    }
    double grand = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        grand += w[m] * A[m];
    }
    grand /= W;
    for (auto& b : Bk) {
        b /= W;
    }
    double va = 0.0, res = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        va += w[m] * (A[m] - grand) * (A[m] - grand);
        double rm = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double r = h[m * K + k] - A[m] - Bk[k] + grand;
            rm += r * r;
        }
        res += w[m] * rm;
    }
    va /= W * correction;
    res /= W * static_cast<double>(K - 1) * correction;
    return va - res / static_cast<double>(K);
}

// Unweighted nested estimator with independent completions per row.
inline double plain_v1s(const std::vector<double>& h, std::size_t M, std::size_t K) {
    std::vector<double> A(M, 0.0);
    double within = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t k = 0; k < K; ++k) {
            A[m] += h[m * K + k];
        }
        A[m] /= static_cast<double>(K);
        double v = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            v += (h[m * K + k] - A[m]) * (h[m * K + k] - A[m]);
        }
        within += v / static_cast<double>(K - 1);
    }
    const double abar = irf::mean(A);
    double va = 0.0;
    for (double a : A) {
        va += (a - abar) * (a - abar);
    }
    va /= static_cast<double>(M - 1);
    return va - within / static_cast<double>(M) / static_cast<double>(K);
}

}  // namespace detail

/// Nested Monte Carlo estimate of V1^s = Var(E[T^s | Z1]) at x0, T^s being
/// `learner` trained on s i.i.d. draws from the model.
///
/// GroupedImportance splits the M outer draws into groups; each group shares
/// K completions (so completion effects cancel in the between-row variance)
/// and draws X1 from a mixture of the design and a small box around x0,
/// reweighted to the design. Plain is the textbook estimator.
template <class Learner = OneNnLearner>
V1sEstimate estimate_v1s(const SyntheticModel& model, Point x0, std::size_t s, std::size_t M_outer,
                         std::size_t K_inner, RandomStream& rng, const V1sOptions& opt = {},
                         Learner learner = {}) {
    require(M_outer >= 2 && K_inner >= 2, ErrorKind::InvalidArgument, "M_outer and K_inner must be >= 2");
    require(s >= 1, ErrorKind::InvalidArgument, "s must be >= 1");
    require(x0.size() == model.d, ErrorKind::InvalidArgument, "probe dimension mismatch");
    const std::size_t d = model.d;
    const std::size_t K = K_inner;

    std::vector<double> group_values;
    std::vector<double> x1(d);
    if (opt.design == V1sDesign::Plain) {
        // Batches of outer draws only serve the standard error.
        const std::size_t batches = std::min<std::size_t>(20, M_outer / 2);
        std::vector<double> all(M_outer * K);
        for (std::size_t m = 0; m < M_outer; ++m) {
            auto outer = rng.child(StreamTag::Outer, m);
            for (std::size_t j = 0; j < d; ++j) {
                x1[j] = outer.uniform(-1.0, 1.0);
            }
            const Label y1 = outer.bernoulli(model.mu(x1)) ? Label::One : Label::Zero;
            for (std::size_t k = 0; k < K; ++k) {
                auto inner = outer.child(StreamTag::Inner, k);
                const auto c = detail::draw_completion(model, x0, s - 1, inner);
                all[m * K + k] = detail::learner_value(learner, x0, x1, y1, c, d);
            }
        }
        V1sEstimate out;
        out.value = detail::plain_v1s(all, M_outer, K);
        const std::size_t per = M_outer / batches;
        for (std::size_t b = 0; b < batches; ++b) {
            std::vector<double> part(all.begin() + static_cast<std::ptrdiff_t>(b * per * K),
                                     all.begin() + static_cast<std::ptrdiff_t>((b + 1) * per * K));
            group_values.push_back(detail::plain_v1s(part, per, K));
        }
        out.groups = batches;
        out.se = stddev(group_values) / std::sqrt(static_cast<double>(batches));
        return out;
    }

    require(opt.group_size >= 2, ErrorKind::InvalidArgument, "group size must be >= 2");
    require(opt.mixture_uniform > 0.0 && opt.mixture_uniform <= 1.0, ErrorKind::InvalidArgument,
            "mixture weight must lie in (0,1]");
    const std::size_t groups = std::max<std::size_t>(2, M_outer / opt.group_size);
    const std::size_t Mg = std::max<std::size_t>(2, M_outer / groups);

    // Local box around x0 clipped to the cube.
    const double half = std::min(1.0, opt.box_scale * std::pow(static_cast<double>(s), -1.0 / static_cast<double>(d)));
    std::vector<double> lo(d), hi(d);
    double box_volume = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
        lo[j] = std::max(-1.0, x0[j] - half);
        hi[j] = std::min(1.0, x0[j] + half);
        box_volume *= hi[j] - lo[j];
    }
    const double design = model.design_density();
    const double alpha = opt.mixture_uniform;

    std::vector<double> h(Mg * K), w(Mg);
    std::vector<detail::Completion> comps(K);
    for (std::size_t g = 0; g < groups; ++g) {
        auto inner = rng.child(StreamTag::Inner, g);
        for (std::size_t k = 0; k < K; ++k) {
            comps[k] = detail::draw_completion(model, x0, s - 1, inner);
        }
        auto outer = rng.child(StreamTag::Outer, g);
        for (std::size_t m = 0; m < Mg; ++m) {
            const bool local = outer.uniform01() >= alpha;
            bool in_box = true;
            for (std::size_t j = 0; j < d; ++j) {
                x1[j] = local ? outer.uniform(lo[j], hi[j]) : outer.uniform(-1.0, 1.0);
                in_box = in_box && x1[j] >= lo[j] && x1[j] <= hi[j];
            }
            const double q = alpha * design + (in_box ? (1.0 - alpha) / box_volume : 0.0);
            w[m] = design / q;
            const Label y1 = outer.bernoulli(model.mu(x1)) ? Label::One : Label::Zero;
            for (std::size_t k = 0; k < K; ++k) {
                h[m * K + k] = detail::learner_value(learner, x0, x1, y1, comps[k], d);
            }
        }
        group_values.push_back(detail::grouped_v1s(h, w, Mg, K));
    }
    V1sEstimate out;
    out.groups = groups;
    out.value = irf::mean(group_values);
    out.se = stddev(group_values) / std::sqrt(static_cast<double>(groups));
    return out;
}

// ---------------------------------------------------------------------------
// Oracle cross-checks on tiny instances

struct OracleReport {
    std::size_t instances = 0;
    double max_dev_nn_sub = 0.0;
    double max_dev_nn_under = 0.0;
    double max_dev_irf_sub = 0.0;
    double max_dev_irf_under = 0.0;
    std::size_t mc_trials = 0;
    std::size_t mc_within_nn_sub = 0;
    std::size_t mc_within_nn_under = 0;
    std::size_t mc_within_irf_sub = 0;
    std::size_t mc_within_irf_under = 0;

    double max_exact_deviation() const noexcept {
        return std::max({max_dev_nn_sub, max_dev_nn_under, max_dev_irf_sub, max_dev_irf_under});
    }
    std::size_t min_mc_within() const noexcept {
        return std::min({mc_within_nn_sub, mc_within_nn_under, mc_within_irf_sub, mc_within_irf_under});
    }
};

/// Random small dataset with both classes present. With `ties`, coordinates
/// come from a coarse lattice so duplicated points and equal distances occur.
inline Dataset random_tiny_dataset(std::size_t n, std::size_t d, bool ties, RandomStream& rng) {
    require(n >= 2, ErrorKind::InvalidArgument, "tiny dataset needs n >= 2");
    while (true) {
        std::vector<double> coords(n * d);
        for (auto& c : coords) {
            c = ties ? -1.0 + 0.5 * static_cast<double>(rng.below(5)) : rng.uniform(-1.0, 1.0);
        }
        std::vector<Label> labels(n);
        for (auto& y : labels) {
            y = rng.bernoulli(0.4) ? Label::One : Label::Zero;
        }
        Dataset ds(PointSet(d, std::move(coords)), std::move(labels));
        if (ds.n0() >= 1 && ds.n1() >= 1) {
            return ds;
        }
    }
}

namespace detail {
inline std::vector<double> random_probe(std::size_t d, bool ties, RandomStream& rng) {
    std::vector<double> x(d);
    for (auto& c : x) {
        c = ties ? -1.0 + 0.25 * static_cast<double>(rng.below(9)) : rng.uniform(-1.0, 1.0);
    }
    return x;
}

inline std::size_t uniform_size(std::size_t lo, std::size_t hi, RandomStream& rng) {
    return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

inline TreeParams oracle_tree() {
    TreeParams t;
    t.min_leaf = 1;
    t.max_depth = 2;
    t.rule = SplitRule::Median;
    return t;
}
}  // namespace detail

/// Closed forms against brute-force enumeration on `instances` random tiny
/// datasets (n <= 12, every fourth one on a tie-heavy lattice).
inline OracleReport oracle_exact_vs_enumeration(std::uint64_t seed, std::size_t instances) {
    OracleReport rep;
    rep.instances = instances;
    const RandomStream root(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        auto rng = root.child(StreamTag::Trial, t);
        const bool ties = t % 4 == 3;
        const std::size_t n = detail::uniform_size(2, 12, rng);
        const auto ds = random_tiny_dataset(n, 2, ties, rng);
        const auto x = detail::random_probe(2, ties, rng);
        const std::size_t s = detail::uniform_size(1, n, rng);
        const std::size_t s0 = detail::uniform_size(1, ds.n0(), rng);
        const std::size_t s1 = detail::uniform_size(1, ds.n1(), rng);
        const GridPartition part{2, 2};
        auto grid_leaf = [&](const IndexList& rows) { return part.members(ds, rows, x); };

        rep.max_dev_nn_sub =
            std::max(rep.max_dev_nn_sub, std::abs(exact_sub_1nn(x, ds, s) - enumerate_sub_1nn(x, ds, s)));
        rep.max_dev_nn_under = std::max(
            rep.max_dev_nn_under, std::abs(exact_under_1nn(x, ds, s0, s1) - enumerate_under_1nn(x, ds, s0, s1)));
        rep.max_dev_irf_sub = std::max(
            rep.max_dev_irf_sub, std::abs(exact_irf_sub(x, ds, s, part) - enumerate_irf_sub(ds, s, grid_leaf)));
        rep.max_dev_irf_under =
            std::max(rep.max_dev_irf_under, std::abs(exact_irf_under(x, ds, s0, s1, part) -
                                                     enumerate_irf_under(ds, s0, s1, grid_leaf)));
    }
    return rep;
}

/// Monte Carlo ensembles of size B against their infinite-ensemble values on
/// n = 6 instances; counts trials with |bagged - exact| <= 3 sqrt(v / B),
/// v being the variance of a single ensemble member over subsamples.
inline void oracle_mc_vs_exact(std::uint64_t seed, std::size_t trials, std::size_t B, OracleReport& rep,
                               std::size_t threads = 1) {
    struct Trial {
        bool nn_sub = false, nn_under = false, irf_sub = false, irf_under = false;
    };
    std::vector<Trial> results(trials);
    const RandomStream root(seed);
    const TreeParams tree = detail::oracle_tree();
    parallel_for(trials, threads, [&](std::size_t t) {
        auto rng = root.child(StreamTag::Probe, t);
        const auto ds = random_tiny_dataset(6, 2, false, rng);
        const auto x = detail::random_probe(2, false, rng);
        const std::size_t s = detail::uniform_size(1, 6, rng);
        const std::size_t s0 = detail::uniform_size(1, ds.n0(), rng);
        const std::size_t s1 = detail::uniform_size(1, ds.n1(), rng);
        auto within = [&](double bagged, double m1, double m2) {
            const double v = std::max(0.0, m2 - m1 * m1);
            return std::abs(bagged - m1) <= 3.0 * std::sqrt(v / static_cast<double>(B)) + 1e-12;
        };
        auto mc = rng.child(StreamTag::Estimator, 0);

        // 1-NN members are Bernoulli, so v = p (1 - p).
        const double e_sub = exact_sub_1nn(x, ds, s);
        results[t].nn_sub = within(bagged_sub_1nn(x, ds, s, B, mc), e_sub, e_sub);
        const double e_under = exact_under_1nn(x, ds, s0, s1);
        results[t].nn_under = within(bagged_under_1nn(x, ds, s0, s1, B, mc), e_under, e_under);

        auto tree_leaf = [&](const IndexList& rows) {
            RandomStream unused(0);
            const auto tr = PartitionTree::build(ds.points(), rows, tree, unused);
            const auto span = tr.leaf_rows(x);
            return IndexList(span.begin(), span.end());
        };
        auto sq_leaf = [&](const IndexList& rows) {
            const double v = leaf_proportion(ds, tree_leaf(rows));
            return v * v;
        };
        const double m1_sub = enumerate_irf_sub(ds, s, tree_leaf);
        const double m2_sub = enumerate_plain(ds, s, sq_leaf);
        results[t].irf_sub = within(irf_sub(x, ds, s, B, tree, mc), m1_sub, m2_sub);
        const double m1_under = enumerate_irf_under(ds, s0, s1, tree_leaf);
        const double m2_under = enumerate_stratified(ds, s0, s1, [&](const IndexList& a, const IndexList& b) {
            IndexList both = a;
            both.insert(both.end(), b.begin(), b.end());
            return sq_leaf(both);
        });
        results[t].irf_under = within(irf_under(x, ds, s0, s1, B, tree, mc), m1_under, m2_under);
    });
    rep.mc_trials = trials;
    for (const auto& r : results) {
        rep.mc_within_nn_sub += r.nn_sub ? 1 : 0;
        rep.mc_within_nn_under += r.nn_under ? 1 : 0;
        rep.mc_within_irf_sub += r.irf_sub ? 1 : 0;
        rep.mc_within_irf_under += r.irf_under ? 1 : 0;
    }
}

inline OracleReport oracle_check(std::uint64_t seed, std::size_t instances = 200, std::size_t trials = 100,
                                 std::size_t B = 100000, std::size_t threads = 1) {
    auto rep = oracle_exact_vs_enumeration(seed, instances);
    if (trials > 0) {
        oracle_mc_vs_exact(seed, trials, B, rep, threads);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// key=value configuration files

/// Parses `key=value` lines; `#` starts a comment; blank lines are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) {
            return std::string();
        }
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorKind::ParseError, "config line " + std::to_string(line_no) + ": expected key=value");
        }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) {
            fail(ErrorKind::ParseError, "config line " + std::to_string(line_no) + ": empty key");
        }
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

inline std::vector<std::pair<std::string, std::string>> parse_key_values_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::IoError, "cannot open config file " + path);
    }
    return parse_key_values(in);
}

}  // namespace irf

#endif  // IRF_EXPERIMENT_HPP

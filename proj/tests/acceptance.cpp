// Acceptance run: one PASS/FAIL line per criterion.
//
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "irf/experiment.hpp"

using namespace irf;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome debias_identities() {
    double round_trip = 0.0, plug_in = 0.0, odds_res = 0.0;
    for (int a = 1; a <= 20; ++a) {
        for (int b = 1; b <= 20; ++b) {
            for (int c = 1; c <= 20; ++c) {
                const double z = a / 21.0, p = b / 21.0, ps = c / 21.0;
                const PriorPair pr(p, ps);
                round_trip = std::max(round_trip, std::abs(g(g_inv(z, pr), pr) - z));
                const double gz = g(z, pr);
                const double lhs = odds(gz) / odds(z);
                const double rhs = (p / (1 - p)) / (ps / (1 - ps));
                odds_res = std::max(odds_res, std::abs(lhs - rhs) / rhs);
            }
        }
    }
    for (std::size_t n0 = 1; n0 <= 40; n0 += 3) {
        for (std::size_t n1 = 1; n1 <= 40; n1 += 3) {
            for (std::size_t s0 = 1; s0 <= n0; s0 += 4) {
                for (std::size_t s1 = 1; s1 <= n1; s1 += 4) {
                    const EmpiricalPriors emp(n0, n1, s0, s1);
                    for (int k = 0; k <= 20; ++k) {
                        const double z = k / 20.0;
                        plug_in = std::max(plug_in, std::abs(g_n(z, emp) - g(z, emp.priors())));
                    }
                }
            }
        }
    }
    return {round_trip < 1e-12 && plug_in < 1e-12 && odds_res < 1e-10,
            "round_trip=" + fmt("%.2e", round_trip) + " g_n=" + fmt("%.2e", plug_in) +
                " odds=" + fmt("%.2e", odds_res)};
}

Outcome equal_prior_reductions() {
    bool exact = true;
    double dev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double mu = i / 1000.0;
        for (int j = 1; j < 20; ++j) {
            const double p = j / 20.0;
            exact = exact && v_star(mu, p, p) == 1.0;
            dev = std::max(dev, std::abs(clt_var_is(mu, p, p) - clt_var_sub(mu)));
            dev = std::max(dev, std::abs(clt_var_under(mu, p, p) - mu * (1 - mu)));
        }
    }
    return {exact && dev < 1e-12, std::string("v_star_exact=") + (exact ? "yes" : "no") + " max_dev=" + fmt("%.2e", dev)};
}

Outcome delta_identity() {
    double dev = 0.0;
    for (int a = 1; a <= 10; ++a) {
        for (int b = 1; b <= 10; ++b) {
            for (int c = 1; c <= 10; ++c) {
                const double mu = a / 11.0, p = b / 11.0, ps = c / 11.0;
                const double rhs = clt_var_under(g_inv(mu, PriorPair(p, ps)), p, ps) * v_star(mu, p, ps);
                dev = std::max(dev, std::abs(clt_var_is(mu, p, ps) - rhs));
            }
        }
    }
    return {dev < 1e-10, "max_dev=" + fmt("%.3e", dev)};
}

Outcome oracle_exact() {
    const auto rep = oracle_exact_vs_enumeration(2024, 200);
    return {rep.max_exact_deviation() < 1e-12,
            "nn_sub=" + fmt("%.1e", rep.max_dev_nn_sub) + " nn_under=" + fmt("%.1e", rep.max_dev_nn_under) +
                " irf_sub=" + fmt("%.1e", rep.max_dev_irf_sub) + " irf_under=" + fmt("%.1e", rep.max_dev_irf_under)};
}

Outcome oracle_mc() {
    OracleReport rep;
    oracle_mc_vs_exact(2024, 100, 100000, rep, default_threads());
    const bool ok = rep.min_mc_within() >= 99;
    return {ok, "within/100: nn_sub=" + std::to_string(rep.mc_within_nn_sub) +
                    " nn_under=" + std::to_string(rep.mc_within_nn_under) +
                    " irf_sub=" + std::to_string(rep.mc_within_irf_sub) +
                    " irf_under=" + std::to_string(rep.mc_within_irf_under)};
}

Outcome projection_variance() {
    const auto model = make_model(Setup::MarginalImbalance, Scenario::Balanced);
    const std::vector<double> x0{0.0, 0.0};
    RandomStream a(61), b(62);
    const auto v200 = estimate_v1s(model, x0, 200, 2000, 200, a);
    const auto v400 = estimate_v1s(model, x0, 400, 2000, 200, b);
    const double ref = 6.25e-4;
    const bool close = std::abs(v200.value - ref) <= 0.15 * ref;
    const double halving_gap = v200.value - 2.0 * v400.value;
    const double halving_se = std::sqrt(v200.se * v200.se + 4.0 * v400.se * v400.se);
    const bool halves = std::abs(halving_gap) <= 3.0 * halving_se;
    return {close && halves, "mu(x0)=" + fmt("%.4f", model.mu(x0)) + " v(200)=" + fmt("%.4e", v200.value) + "+-" +
                                 fmt("%.1e", v200.se) + " v(400)=" + fmt("%.4e", v400.value) + "+-" +
                                 fmt("%.1e", v400.se) + " ratio=" + fmt("%.3f", v200.value / v400.value)};
}

Outcome clt_sub() {
    ExperimentConfig cfg;
    cfg.setup = Setup::MarginalImbalance;
    cfg.scenario = Scenario::Balanced;
    cfg.n_list = {2000};
    cfg.reps = 500;
    cfg.nn_exact = true;
    cfg.estimators = {Estimator::NnSub};
    cfg.probes = {{0.25, 0.25}};
    cfg.seed = 7;
    cfg.threads = default_threads();
    const auto rows = run_clt(cfg);
    const auto& r = rows.at(0);
    const double crit = ks_critical(0.01, r.standardized.size());
    const bool ok = r.ks < crit && r.coverage95 >= 0.92 && r.coverage95 <= 0.97;
    return {ok, "ks=" + fmt("%.4f", r.ks) + " crit=" + fmt("%.4f", crit) + " coverage95=" + fmt("%.3f", r.coverage95) +
                    " mean=" + fmt("%.3f", r.mean) + " sd=" + fmt("%.3f", r.sd)};
}

Outcome targeting() {
    ExperimentConfig cfg;
    cfg.setup = Setup::MarginalImbalance;
    cfg.scenario = Scenario::Imbalanced;
    cfg.n_list = {2000};
    cfg.reps = 500;
    cfg.nn_exact = true;
    cfg.estimators = {Estimator::NnUnder, Estimator::NnIs};
    cfg.seed = 8;
    cfg.threads = default_threads();
    const auto model = make_model(cfg.setup, cfg.scenario);
    const auto rows = run_clt(cfg);
    bool ok = true;
    std::ostringstream detail;
    for (const auto& r : rows) {
        const double m = mean(r.estimates);
        const double se = stddev(r.estimates) / std::sqrt(static_cast<double>(r.estimates.size()));
        const double mu = model.mu(r.probe);
        const double mu_star = mean(r.targets);  // g^{-1}(mu) at each rep's p*
        const double z_mu = (m - mu) / se;
        const double z_star = (m - mu_star) / se;
        bool this_ok;
        if (r.estimator == Estimator::NnUnder) {
            this_ok = std::abs(z_star) <= 3.0 && std::abs(z_mu) > 5.0;
        } else {
            this_ok = std::abs(z_mu) <= 3.0;
        }
        ok = ok && this_ok;
        detail << to_string(r.estimator) << "@(" << r.probe[0] << "," << r.probe[1] << "): z_mu=" << fmt("%.2f", z_mu)
               << " z_mu*=" << fmt("%.2f", z_star) << (this_ok ? "" : " [miss]") << "; ";
    }
    return {ok, detail.str()};
}

struct TrendCase {
    Setup setup;
    Scenario scenario;
};

Outcome trends() {
    bool ok = true;
    std::ostringstream detail;
    for (const TrendCase tc : {TrendCase{Setup::MarginalImbalance, Scenario::Balanced},
                               TrendCase{Setup::MarginalImbalance, Scenario::Imbalanced},
                               TrendCase{Setup::ConditionalImbalance, Scenario::Balanced},
                               TrendCase{Setup::ConditionalImbalance, Scenario::Imbalanced}}) {
        ExperimentConfig cfg;
        cfg.setup = tc.setup;
        cfg.scenario = tc.scenario;
        cfg.n_list = {100, 400, 1000};
        cfg.reps = 200;
        cfg.grid_per_axis = 50;
        cfg.nn_exact = true;
        cfg.B = 500;
        cfg.seed = 9;
        cfg.threads = default_threads();
        const auto rows = run_mc(cfg);
        auto find = [&](Estimator e, std::size_t n, const std::vector<McRow>& rs) {
            for (const auto& r : rs) {
                if (r.estimator == e && r.n == n) return r;
            }
            fail(ErrorKind::InvalidArgument, "missing row");
        };
        const std::string tag = "S" + std::to_string(static_cast<int>(tc.setup)) + "/Sc" +
                                std::to_string(static_cast<int>(tc.scenario));
        for (auto e : cfg.estimators) {
            const double m100 = find(e, 100, rows).mise;
            const double m1000 = find(e, 1000, rows).mise;
            if (!(m1000 < m100)) {
                ok = false;
                detail << tag << " " << to_string(e) << " mise(100)=" << fmt("%.4g", m100)
                       << " mise(1000)=" << fmt("%.4g", m1000) << " [miss]; ";
            }
        }
        if (tc.scenario == Scenario::Imbalanced) {
            cfg.target = Target::Mu;
            cfg.estimators = {Estimator::NnUnder, Estimator::NnIs};
            const auto vs_mu = run_mc(cfg);
            for (std::size_t n : cfg.n_list) {
                const double is = find(Estimator::NnIs, n, vs_mu).mise;
                const double under = find(Estimator::NnUnder, n, vs_mu).mise;
                const bool good = is < under;
                ok = ok && good;
                detail << tag << " n=" << n << " is=" << fmt("%.4g", is) << " under=" << fmt("%.4g", under)
                       << (good ? "" : " [miss]") << "; ";
            }
        }
    }
    return {ok, detail.str()};
}

Outcome determinism() {
    ExperimentConfig mc;
    mc.n_list = {60, 120};
    mc.reps = 40;
    mc.grid_per_axis = 8;
    mc.B = 20;
    mc.scenario = Scenario::Imbalanced;
    mc.seed = 10;
    ExperimentConfig clt = mc;
    clt.reps = 100;
    clt.estimators = {Estimator::NnSub, Estimator::NnUnder, Estimator::NnIs};
    auto mc_csv = [&](std::size_t threads) {
        mc.threads = threads;
        std::ostringstream out;
        write_mc_csv(run_mc(mc), out);
        return out.str();
    };
    auto clt_csv = [&](std::size_t threads) {
        clt.threads = threads;
        std::ostringstream out;
        write_clt_csv(run_clt(clt), out);
        return out.str();
    };
    const bool same_mc = mc_csv(1) == mc_csv(8);
    const bool same_clt = clt_csv(1) == clt_csv(8);
    return {same_mc && same_clt,
            std::string("mc=") + (same_mc ? "identical" : "differs") + " clt=" + (same_clt ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"debias identities", debias_identities},
        {"equal-prior reductions", equal_prior_reductions},
        {"delta-method identity", delta_identity},
        {"closed forms vs enumeration", oracle_exact},
        {"Monte Carlo vs closed forms", oracle_mc},
        {"projection variance V1^s", projection_variance},
        {"CLT for nn_sub", clt_sub},
        {"under-sampling / IS targeting", targeting},
        {"MISE trends", trends},
        {"thread-count determinism", determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::atoi(argv[i]));
    }
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!selected.empty() && !selected.count(id)) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d (%s) [%.1fs]: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, secs,
                    o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}

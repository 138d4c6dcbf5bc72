// irfsim: command-line front end for the simulation harness.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "irf/experiment.hpp"

namespace {

using namespace irf;

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::istringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) {
            fail(ErrorKind::InvalidArgument, "cannot parse number '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& csv) {
    std::vector<std::size_t> out;
    for (double v : parse_doubles(csv)) {
        if (!(v >= 1.0) || v != std::floor(v)) {
            fail(ErrorKind::InvalidArgument, "sample sizes must be positive integers");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

// Sends output to --out or stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) {
                fail(ErrorKind::IoError, "cannot write " + path);
            }
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

struct CommonArgs {
    int setup = 1;
    int scenario = 1;
    std::size_t d = 2;
    std::string n_list = "100,200,500,1000";
    std::string s_rule = "sqrt";
    std::size_t B = 500;
    bool nn_exact = false;
    std::size_t reps = 500;
    std::size_t grid = 100;
    std::string estimators = "irf_sub,nn_sub,nn_under,nn_is,irf_under,irf_is";
    std::uint64_t seed = 1;
    std::size_t threads = default_threads();
    std::string out;
    std::string target = "native";
    std::string under_sizes = "alg2";
    std::size_t min_leaf = 5;
    int max_depth = -1;
    std::string split = "random";
    std::vector<std::string> probes;

    void add_to(CLI::App* app, bool with_grid) {
        app->add_option("--setup", setup, "1 = marginal imbalance, 2 = conditional imbalance")
            ->check(CLI::IsMember({1, 2}));
        app->add_option("--scenario", scenario, "1 = balanced (p=0.5), 2 = imbalanced (p=0.1)")
            ->check(CLI::IsMember({1, 2}));
        app->add_option("--d", d, "covariate dimension")->check(CLI::Range(1, 2));
        app->add_option("--n", n_list, "comma-separated sample sizes");
        app->add_option("--s-rule", s_rule, "sqrt | pow08 | fixed:<k>");
        app->add_option("--B", B, "ensemble size (trees or subsamples)");
        app->add_flag("--nn-exact", nn_exact, "use closed-form infinite ensembles for the 1-NN estimators");
        app->add_option("--reps", reps, "Monte Carlo repetitions");
        if (with_grid) {
            app->add_option("--grid", grid, "evaluation grid points per axis");
            app->add_option("--target", target, "native | mu | mu_star");
        } else {
            app->add_option("--probe", probes, "probe point x1,x2 (repeatable)");
        }
        app->add_option("--estimators", estimators, "comma-separated estimator names");
        app->add_option("--seed", seed, "64-bit seed");
        app->add_option("--threads", threads, "worker threads (default: IRF_THREADS or 1)")
            ->check(CLI::PositiveNumber);
        app->add_option("--out", out, "output CSV path (default stdout)");
        app->add_option("--under-sizes", under_sizes, "alg2 | proportional");
        app->add_option("--min-leaf", min_leaf, "minimum points per leaf");
        app->add_option("--max-depth", max_depth, "maximum tree depth (default ceil(log2 s))");
        app->add_option("--split", split, "random | median")->check(CLI::IsMember({"random", "median"}));
    }

    ExperimentConfig config() const {
        ExperimentConfig c;
        c.setup = static_cast<Setup>(setup);
        c.scenario = static_cast<Scenario>(scenario);
        c.d = d;
        c.n_list = parse_sizes(n_list);
        c.s_rule = SRule::parse(s_rule);
        c.B = B;
        c.nn_exact = nn_exact;
        c.reps = reps;
        c.grid_per_axis = grid;
        c.estimators = parse_estimator_list(estimators);
        c.seed = seed;
        c.threads = threads;
        c.target = parse_target(target);
        c.under_sizes = parse_under_sizes(under_sizes);
        c.tree.min_leaf = min_leaf;
        if (max_depth >= 0) {
            c.tree.max_depth = static_cast<std::size_t>(max_depth);
        }
        c.tree.rule = split == "median" ? SplitRule::Median : SplitRule::UniformRandom;
        if (!probes.empty()) {
            c.probes.clear();
            for (const auto& p : probes) {
                c.probes.push_back(parse_doubles(p));
            }
        } else if (d != 2) {
            c.probes = {std::vector<double>(d, 0.25), std::vector<double>(d, -0.5)};
        }
        return c;
    }
};

// Splices `--key=value` pairs from a --config file in front of the command
// line flags. Keys also given on the command line are dropped, so the
// command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    std::set<std::string> given;
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config" && i + 1 < args.size()) {
            path = args[++i];
            continue;
        }
        if (a.rfind("--config=", 0) == 0) {
            path = a.substr(9);
            continue;
        }
        if (a.rfind("--", 0) == 0) {
            given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
        }
        kept.push_back(a);
    }
    if (path.empty()) {
        return kept;
    }
    std::vector<std::string> injected;
    for (const auto& [key, value] : parse_key_values_file(path)) {
        if (!given.count(key)) {
            injected.push_back("--" + key + "=" + value);
        }
    }
    // kept[0] is the program name, kept[1] the subcommand.
    std::vector<std::string> out;
    const std::size_t head = std::min<std::size_t>(2, kept.size());
    out.insert(out.end(), kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(head));
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), kept.begin() + static_cast<std::ptrdiff_t>(head), kept.end());
    return out;
}

int run_theory(const std::string& formula, double mu, double mu_star, double p, double p_star, double z,
               std::size_t n, std::size_t s, std::size_t n0, std::size_t n1, std::size_t s0, std::size_t s1,
               double v1s, double v10, double v11) {
    std::cout.precision(17);
    if (formula == "v1s") {
        std::cout << v1s_approx(mu, s) << '\n';
    } else if (formula == "v10_v11") {
        const auto v = v10_v11_approx(mu_star, p_star, s);
        std::cout << v.v10 << ',' << v.v11 << '\n';
    } else if (formula == "clt_sub") {
        std::cout << clt_var_sub(mu) << '\n';
    } else if (formula == "clt_under") {
        std::cout << clt_var_under(mu_star, p, p_star) << '\n';
    } else if (formula == "v_star") {
        std::cout << v_star(mu, p, p_star) << '\n';
    } else if (formula == "clt_is") {
        std::cout << clt_var_is(mu, p, p_star) << '\n';
    } else if (formula == "hajek_sub") {
        std::cout << hajek_var_sub(v1s, n, s) << '\n';
    } else if (formula == "hajek_under") {
        std::cout << hajek_var_under(v10, v11, n0, n1, s0, s1) << '\n';
    } else if (formula == "g") {
        std::cout << g(z, PriorPair(p, p_star)) << '\n';
    } else if (formula == "g_inv") {
        std::cout << g_inv(z, PriorPair(p, p_star)) << '\n';
    } else if (formula == "g_n") {
        std::cout << g_n(z, EmpiricalPriors(n0, n1, s0, s1)) << '\n';
    } else {
        fail(ErrorKind::InvalidArgument, "unknown formula '" + formula + "'");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bagged nearest-neighbour and infinite random forest simulations"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::vector<std::string> raw(argv, argv + argc);
    std::vector<std::string> args;
    try {
        args = expand_config(raw);
    } catch (const irf::Error& e) {
        std::cerr << "error: " << irf::to_string(e.kind()) << ": " << e.what() << '\n';
        return 2;
    }

    // generate
    auto* gen = app.add_subcommand("generate", "draw one dataset (CSV) and write the model sidecar");
    int gen_setup = 1, gen_scenario = 1;
    std::size_t gen_n = 100, gen_d = 2;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--setup", gen_setup)->check(CLI::IsMember({1, 2}));
    gen->add_option("--scenario", gen_scenario)->check(CLI::IsMember({1, 2}));
    gen->add_option("--n", gen_n)->check(CLI::PositiveNumber);
    gen->add_option("--d", gen_d)->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out, "CSV path; the model goes to <out>.model.txt");

    // mc / clt
    auto* mc = app.add_subcommand("mc", "bias^2 / variance / MISE over the evaluation grid");
    CommonArgs mc_args;
    mc_args.add_to(mc, true);
    auto* clt = app.add_subcommand("clt", "normal-approximation checks at probe points");
    CommonArgs clt_args;
    clt_args.add_to(clt, false);
    clt_args.estimators = "nn_sub,nn_under,nn_is";
    clt_args.n_list = "2000";

    // v1s
    auto* v1s = app.add_subcommand("v1s", "nested Monte Carlo estimate of the projection variance V1^s");
    int v_setup = 1, v_scenario = 1;
    std::size_t v_s = 200, v_M = 2000, v_K = 200, v_group = 50;
    std::uint64_t v_seed = 1;
    std::string v_probe = "0,0", v_design = "grouped";
    v1s->add_option("--setup", v_setup)->check(CLI::IsMember({1, 2}));
    v1s->add_option("--scenario", v_scenario)->check(CLI::IsMember({1, 2}));
    v1s->add_option("--s", v_s)->check(CLI::PositiveNumber);
    v1s->add_option("--M", v_M, "outer draws");
    v1s->add_option("--K", v_K, "inner completions");
    v1s->add_option("--group-size", v_group, "outer draws sharing completions (grouped design)");
    v1s->add_option("--probe", v_probe);
    v1s->add_option("--design", v_design)->check(CLI::IsMember({"grouped", "plain"}));
    v1s->add_option("--seed", v_seed);

    // oracle-check
    auto* oracle = app.add_subcommand("oracle-check", "closed forms vs enumeration vs Monte Carlo on tiny instances");
    std::uint64_t o_seed = 1;
    std::size_t o_instances = 200, o_trials = 100, o_B = 100000, o_threads = default_threads();
    oracle->add_option("--seed", o_seed);
    oracle->add_option("--instances", o_instances);
    oracle->add_option("--trials", o_trials);
    oracle->add_option("--B", o_B)->check(CLI::PositiveNumber);
    oracle->add_option("--threads", o_threads)->check(CLI::PositiveNumber);

    // theory
    auto* theory = app.add_subcommand("theory", "evaluate an asymptotic formula");
    std::string t_formula;
    double t_mu = 0.5, t_mu_star = 0.5, t_p = 0.5, t_p_star = 0.5, t_z = 0.5, t_v1s = 0.0, t_v10 = 0.0,
           t_v11 = 0.0;
    std::size_t t_n = 100, t_s = 10, t_n0 = 50, t_n1 = 50, t_s0 = 5, t_s1 = 5;
    theory
        ->add_option("formula", t_formula,
                     "v1s | v10_v11 | clt_sub | clt_under | v_star | clt_is | hajek_sub | hajek_under | g | g_inv | g_n")
        ->required();
    theory->add_option("--mu", t_mu);
    theory->add_option("--mu-star", t_mu_star);
    theory->add_option("--p", t_p);
    theory->add_option("--p-star", t_p_star);
    theory->add_option("--z", t_z);
    theory->add_option("--n", t_n);
    theory->add_option("--s", t_s);
    theory->add_option("--n0", t_n0);
    theory->add_option("--n1", t_n1);
    theory->add_option("--s0", t_s0);
    theory->add_option("--s1", t_s1);
    theory->add_option("--v1s", t_v1s);
    theory->add_option("--v10", t_v10);
    theory->add_option("--v11", t_v11);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            const auto model = make_model(static_cast<Setup>(gen_setup), static_cast<Scenario>(gen_scenario), gen_d);
            RandomStream rng = RandomStream(gen_seed).child(StreamTag::Dataset, gen_n);
            const auto ds = generate(model, gen_n, rng);
            Output out(gen_out);
            write_csv(ds, out.stream());
            if (!gen_out.empty()) {
                std::ofstream side(gen_out + ".model.txt");
                if (!side) {
                    fail(ErrorKind::IoError, "cannot write " + gen_out + ".model.txt");
                }
                write_model_sidecar(model, side);
                side << "n=" << gen_n << "\nn1=" << ds.n1() << "\nseed=" << gen_seed << '\n';
            }
        } else if (mc->parsed()) {
            const auto cfg = mc_args.config();
            const auto rows = run_mc(cfg);
            Output out(mc_args.out);
            write_mc_csv(rows, out.stream());
            std::size_t redraws = rows.empty() ? 0 : rows.front().redraws;
            for (const auto& r : rows) {
                std::cerr << to_string(r.estimator) << " n=" << r.n << " runtime_seconds=" << r.runtime_seconds
                          << '\n';
                redraws = std::max(redraws, r.redraws);
            }
            if (redraws > 0) {
                std::cerr << "datasets redrawn for an empty class: " << redraws << '\n';
            }
        } else if (clt->parsed()) {
            const auto cfg = clt_args.config();
            const auto rows = run_clt(cfg);
            Output out(clt_args.out);
            write_clt_csv(rows, out.stream());
        } else if (v1s->parsed()) {
            const auto model = make_model(static_cast<Setup>(v_setup), static_cast<Scenario>(v_scenario));
            const auto x0 = parse_doubles(v_probe);
            RandomStream rng(v_seed);
            V1sOptions opt;
            opt.design = v_design == "plain" ? V1sDesign::Plain : V1sDesign::GroupedImportance;
            opt.group_size = v_group;
            const auto est = estimate_v1s(model, x0, v_s, v_M, v_K, rng, opt);
            const double mu = model.mu(x0);
            std::cout.precision(12);
            std::cout << "estimate,se,groups,leading_order\n"
                      << est.value << ',' << est.se << ',' << est.groups << ',' << v1s_approx(mu, v_s) << '\n';
        } else if (oracle->parsed()) {
            const auto rep = oracle_check(o_seed, o_instances, o_trials, o_B, o_threads);
            std::cout.precision(6);
            std::cout << "instances=" << rep.instances << '\n'
                      << "max_dev_nn_sub=" << rep.max_dev_nn_sub << '\n'
                      << "max_dev_nn_under=" << rep.max_dev_nn_under << '\n'
                      << "max_dev_irf_sub=" << rep.max_dev_irf_sub << '\n'
                      << "max_dev_irf_under=" << rep.max_dev_irf_under << '\n'
                      << "mc_trials=" << rep.mc_trials << '\n'
                      << "mc_within_3sd nn_sub=" << rep.mc_within_nn_sub << " nn_under=" << rep.mc_within_nn_under
                      << " irf_sub=" << rep.mc_within_irf_sub << " irf_under=" << rep.mc_within_irf_under << '\n';
            const bool ok = rep.max_exact_deviation() < 1e-12 &&
                            (rep.mc_trials == 0 || rep.min_mc_within() * 100 >= 99 * rep.mc_trials);
            std::cout << (ok ? "PASS" : "FAIL") << '\n';
            return ok ? 0 : 1;
        } else if (theory->parsed()) {
            return run_theory(t_formula, t_mu, t_mu_star, t_p, t_p_star, t_z, t_n, t_s, t_n0, t_n1, t_s0, t_s1,
                              t_v1s, t_v10, t_v11);
        }
    } catch (const irf::Error& e) {
        std::cerr << "error: " << irf::to_string(e.kind()) << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

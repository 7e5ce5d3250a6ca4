// lbdp command line: simulate / estimate / bench / vaf.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lbdp/lbdp.hpp"

namespace {

constexpr const char* kVersion = "lbdp 1.0.0";

// validation problems (bad flags, bad input files, out-of-domain values)
// exit 1; failures during computation exit 2
int classify(const lbdp::Error& e) {
    if (dynamic_cast<const lbdp::InvalidParams*>(&e) != nullptr ||
        dynamic_cast<const lbdp::OutOfRange*>(&e) != nullptr ||
        dynamic_cast<const lbdp::OutOfBounds*>(&e) != nullptr ||
        dynamic_cast<const lbdp::IoError*>(&e) != nullptr ||
        dynamic_cast<const lbdp::NotEquidistant*>(&e) != nullptr ||
        dynamic_cast<const lbdp::DegenerateData*>(&e) != nullptr ||
        dynamic_cast<const lbdp::EmptyGroup*>(&e) != nullptr ||
        dynamic_cast<const lbdp::ScheduleBeyondTrajectory*>(&e) != nullptr)
        return 1;
    return 2;
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    if (path.empty()) {
        writer(std::cout);
        std::cout.flush();
    } else {
        auto out = lbdp::detail::open_out(path);
        writer(out);
    }
}

struct SimulateArgs {
    double lambda = 0.0, mu = 0.0;
    std::int64_t x0 = 1;
    double t_max = 0.0;
    std::uint64_t seed = 1;
    std::string method = "gillespie";
    double tau_step = 0.01;
    int observe = 0;
    int series = 1;
    double gamma_shape = 1.0, gamma_rate = 1.0;
    std::string out;
};

int run_simulate(const SimulateArgs& a) {
    const lbdp::RateParams p{a.lambda, a.mu};
    lbdp::Rng rng = lbdp::make_rng(a.seed);
    auto simulate_one = [&](double horizon) {
        return a.method == "tauleap" ? lbdp::tau_leap(p, a.x0, horizon, a.tau_step, rng)
                                     : lbdp::gillespie(p, a.x0, horizon, rng);
    };
    if (a.observe > 0) {
        if (a.observe < 2) throw lbdp::InvalidParams("--observe needs at least 2 timepoints");
        const auto schedule = lbdp::sample_schedule(a.observe, a.gamma_shape, a.gamma_rate, rng);
        std::vector<std::string> ids;
        std::vector<lbdp::ObservationSeries> series;
        for (int s = 0; s < a.series; ++s) {
            const auto traj = simulate_one(schedule.back());
            series.push_back(lbdp::observe(traj, schedule));
            ids.push_back("s" + std::to_string(s + 1));
        }
        with_output(a.out, [&](std::ostream& os) {
            os << "# seed=" << a.seed << '\n';
            lbdp::write_observations(os, ids, series);
        });
    } else {
        if (!(a.t_max > 0.0)) throw lbdp::InvalidParams("--t-max must be positive");
        const auto traj = simulate_one(a.t_max);
        with_output(a.out, [&](std::ostream& os) {
            os << "# seed=" << a.seed << '\n';
            lbdp::write_trajectory(os, traj);
        });
    }
    return 0;
}

struct EstimateArgs {
    std::string input;
    std::string method = "approx";
    std::string model = "constant";
    double mu0 = 1.0;
    std::vector<double> theta_init;
    std::string out;
};

int run_estimate(const EstimateArgs& a) {
    const auto set = lbdp::read_observations(std::filesystem::path(a.input));
    if (set.series.empty()) throw lbdp::InvalidParams("no series in " + a.input);
    std::vector<lbdp::EstimateResult> results;
    const lbdp::Method m = lbdp::require_method(a.method);
    if (m == lbdp::Method::generalized) {
        lbdp::RateFunctionSpec spec;
        std::vector<double> theta = a.theta_init;
        if (a.model == "exp-decay") {
            spec = lbdp::exp_decay_spec();
            if (theta.empty()) theta = {1.0, 0.5, 0.5};
        } else if (a.model == "constant") {
            spec = lbdp::constant_rate_spec(a.mu0);
            if (theta.empty()) theta = {0.1};
        } else {
            throw lbdp::InvalidParams("unknown --model " + a.model);
        }
        results.push_back(lbdp::generalized_estimate(spec, set.series, theta));
    } else {
        for (const auto& s : set.series) {
            switch (m) {
                case lbdp::Method::gw: results.push_back(lbdp::gw_estimate(s)); break;
                case lbdp::Method::approx_mle: results.push_back(lbdp::approx_mle(s)); break;
                case lbdp::Method::gaussian_mle: results.push_back(lbdp::gaussian_mle(s)); break;
                case lbdp::Method::saddlepoint: results.push_back(lbdp::saddlepoint_mle(s)); break;
                default: throw lbdp::InvalidParams("unknown --method " + a.method);
            }
        }
    }
    with_output(a.out, [&](std::ostream& os) { lbdp::write_estimates(os, results); });
    return 0;
}

struct BenchArgs {
    std::vector<std::string> configs;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
};

int run_bench(const BenchArgs& a) {
    std::vector<lbdp::BenchReport> reports;
    std::string seeds;
    for (const auto& path : a.configs) {
        auto cfg = lbdp::parse_bench_config(std::filesystem::path(path));
        if (a.seed) cfg.seed = *a.seed;
        if (a.workers) cfg.workers = *a.workers;
        if (!seeds.empty()) seeds += ',';
        seeds += std::to_string(cfg.seed);
        reports.push_back(lbdp::run_bench(cfg));
    }
    std::filesystem::create_directories(a.out_dir);
    {
        auto csv = lbdp::detail::open_out(std::filesystem::path(a.out_dir) / "report.csv");
        csv << "# seed=" << seeds << '\n';
        lbdp::write_bench_csv(csv, reports);
    }
    {
        auto txt = lbdp::detail::open_out(std::filesystem::path(a.out_dir) / "report.txt");
        txt << "# seed=" << seeds << '\n';
        lbdp::write_bench_text(txt, reports);
    }
    lbdp::write_bench_text(std::cout, reports);
    std::cout.flush();
    return 0;
}

struct VafArgs {
    std::string input;
    std::string method = "approx";
    bool exact_inverse = false;
    double wildtype_pop = 200000.0;
    std::string out;
};

int run_vaf(const VafArgs& a) {
    const lbdp::Method m = lbdp::require_method(a.method);
    if (m == lbdp::Method::generalized)
        throw lbdp::InvalidParams("vaf needs a per-series method (gw|approx|gaussian|saddlepoint)");
    const auto records = lbdp::read_vaf_records(std::filesystem::path(a.input));
    if (records.empty()) throw lbdp::InvalidParams("no rows in " + a.input);
    const auto fits = lbdp::fit_cohort(records, m, a.exact_inverse, a.wildtype_pop);
    for (const auto& f : fits)
        if (!f.warning.empty())
            std::cerr << "warning: " << f.subject_id << '/' << f.mutation << ": " << f.warning
                      << '\n';
    const auto summaries = lbdp::summarize(fits);
    with_output(a.out, [&](std::ostream& os) { lbdp::write_mutation_summaries(os, summaries); });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear birth-death process toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "simulate a trajectory or observed series");
    sim_cmd->add_option("--lambda", sim.lambda, "birth rate")->required();
    sim_cmd->add_option("--mu", sim.mu, "death rate")->required();
    sim_cmd->add_option("--x0", sim.x0, "initial count")->required();
    sim_cmd->add_option("--t-max", sim.t_max, "horizon (trajectory mode)");
    sim_cmd->add_option("--seed", sim.seed, "rng seed")->capture_default_str();
    sim_cmd->add_option("--method", sim.method, "gillespie|tauleap")
        ->check(CLI::IsMember({"gillespie", "tauleap"}))
        ->capture_default_str();
    sim_cmd->add_option("--tau-step", sim.tau_step, "tau-leap step")->capture_default_str();
    sim_cmd->add_option("--observe", sim.observe,
                        "emit an observation series on a random gamma-gap schedule of this many "
                        "timepoints instead of the raw trajectory");
    sim_cmd->add_option("--series", sim.series, "number of series in observe mode")
        ->capture_default_str();
    sim_cmd->add_option("--gamma-shape", sim.gamma_shape, "schedule gap shape")
        ->capture_default_str();
    sim_cmd->add_option("--gamma-rate", sim.gamma_rate, "schedule gap rate")
        ->capture_default_str();
    sim_cmd->add_option("--out", sim.out, "output file (default stdout)");

    EstimateArgs est;
    auto* est_cmd = app.add_subcommand("estimate", "fit growth rates to observed series");
    est_cmd->add_option("--input", est.input, "observations csv")->required();
    est_cmd->add_option("--method", est.method, "gw|approx|gaussian|saddlepoint|generalized")
        ->check(CLI::IsMember({"gw", "approx", "gaussian", "saddlepoint", "generalized"}))
        ->capture_default_str();
    est_cmd->add_option("--model", est.model, "generalized only: constant|exp-decay")
        ->capture_default_str();
    est_cmd->add_option("--mu0", est.mu0, "constant model: fixed death rate")
        ->capture_default_str();
    est_cmd->add_option("--theta-init", est.theta_init, "generalized only: starting parameters")
        ->delimiter(',');
    est_cmd->add_option("--out", est.out, "output file (default stdout)");
    std::uint64_t est_seed = 0;
    est_cmd->add_option("--seed", est_seed, "accepted for uniformity; estimation is deterministic");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "run benchmark configs");
    bench_cmd->add_option("--config", bench.configs, "bench config file (repeatable)")
        ->required()
        ->take_all();
    bench_cmd->add_option("--out", bench.out_dir, "output directory")->required();
    bench_cmd->add_option("--seed", bench.seed, "override config seeds");
    bench_cmd->add_option("--workers", bench.workers, "override config worker count");

    VafArgs vaf;
    auto* vaf_cmd = app.add_subcommand("vaf", "fit a longitudinal VAF cohort");
    vaf_cmd->add_option("--input", vaf.input, "vaf csv (subject_id,mutation,time,vaf)")
        ->required();
    vaf_cmd->add_option("--method", vaf.method, "gw|approx|gaussian|saddlepoint")
        ->capture_default_str();
    vaf_cmd->add_flag("--exact-inverse", vaf.exact_inverse,
                      "invert the forward vaf map exactly instead of the published approximation");
    vaf_cmd->add_option("--wildtype-pop", vaf.wildtype_pop, "wild-type population size")
        ->capture_default_str();
    vaf_cmd->add_option("--out", vaf.out, "output file (default stdout)");
    std::uint64_t vaf_seed = 0;
    vaf_cmd->add_option("--seed", vaf_seed, "accepted for uniformity; fitting is deterministic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (sim_cmd->parsed()) return run_simulate(sim);
        if (est_cmd->parsed()) return run_estimate(est);
        if (bench_cmd->parsed()) return run_bench(bench);
        if (vaf_cmd->parsed()) return run_vaf(vaf);
    } catch (const lbdp::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return classify(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

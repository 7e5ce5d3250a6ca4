#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "lbdp/bench.hpp"
#include "lbdp/io.hpp"

using namespace lbdp;

TEST_CASE("observation csv round trip is exact", "[io]") {
    ObservationSeries a({0.0, 0.7, 1.9}, {1000.0, 1073.0, 1209.0});
    ObservationSeries b({0.0, 1.0 / 3.0, 0.918273645}, {44444.444444444445, 50000.1, 2.5e-3 * 1e7});
    std::vector<std::string> ids{"s001", "s002"};
    std::vector<ObservationSeries> series{a, b};

    std::stringstream buf;
    write_observations(buf, ids, series);
    auto back = read_observations(buf);

    REQUIRE(back.ids == ids);
    REQUIRE(back.series.size() == 2);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(back.series[s].times() == series[s].times());
        CHECK(back.series[s].counts() == series[s].counts());
    }
}

TEST_CASE("observation reader tolerates comments, blanks and row order", "[io]") {
    const std::string text =
        "# generated by hand\n"
        "\n"
        "a,1.5,120\n"
        "a,0,100\n"
        "# interleaved comment\n"
        "b,0,50\n"
        "a,3,140\n"
        "b,2,61\n";
    std::stringstream in(text);
    auto set = read_observations(in);
    REQUIRE(set.ids == std::vector<std::string>{"a", "b"});
    CHECK(set.series[0].times() == std::vector<double>{0.0, 1.5, 3.0});
    CHECK(set.series[0].counts() == std::vector<double>{100.0, 120.0, 140.0});
    CHECK(set.series[1].counts() == std::vector<double>{50.0, 61.0});
}

TEST_CASE("observation reader rejects malformed rows", "[io]") {
    std::stringstream two_fields("series_id,time,count\na,1\n");
    CHECK_THROWS_AS(read_observations(two_fields), IoError);
    std::stringstream bad_number("a,zero,100\n");
    CHECK_THROWS_AS(read_observations(bad_number), IoError);
    // structurally fine but domain-invalid: duplicate times in one series
    std::stringstream dup("a,1,100\na,1,101\n");
    CHECK_THROWS_AS(read_observations(dup), InvalidParams);
}

TEST_CASE("trajectory csv round trip", "[io]") {
    Trajectory traj;
    traj.event_times = {0.0, 0.3141592653589793, 1.75, 2.0};
    traj.sizes = {5, 6, 5, 4};
    traj.horizon = 2.0;

    std::stringstream buf;
    write_trajectory(buf, traj);
    auto back = read_trajectory(buf);
    CHECK(back.event_times == traj.event_times);
    CHECK(back.sizes == traj.sizes);
    CHECK(back.horizon == 2.0);
}

TEST_CASE("trajectory reader rejects bad input", "[io]") {
    std::stringstream empty("# nothing here\n\n");
    CHECK_THROWS_AS(read_trajectory(empty), IoError);
    std::stringstream three("time,count\n0,5,9\n");
    CHECK_THROWS_AS(read_trajectory(three), IoError);
    std::stringstream frac("time,count\n0,5.5\n");
    CHECK_THROWS_AS(read_trajectory(frac), IoError);
}

TEST_CASE("estimate csv round trip preserves every field", "[io]") {
    EstimateResult full;
    full.method = Method::approx_mle;
    full.alpha_hat = 0.09996403037445218;
    full.sigma2_hat = 0.0024616469548897217;
    full.lambda_hat = 0.2;
    full.mu_hat = 0.1;
    full.converged = true;
    full.iterations = 17;
    full.runtime_seconds = 1.25e-4;

    EstimateResult sparse;
    sparse.method = Method::gaussian_mle;
    sparse.converged = false;
    sparse.iterations = 0;

    std::vector<EstimateResult> rs{full, sparse};
    std::stringstream buf;
    write_estimates(buf, rs);
    auto back = read_estimates(buf);

    REQUIRE(back.size() == 2);
    CHECK(back[0].method == Method::approx_mle);
    CHECK(back[0].alpha_hat == full.alpha_hat);
    CHECK(back[0].sigma2_hat == full.sigma2_hat);
    CHECK(back[0].lambda_hat == full.lambda_hat);
    CHECK(back[0].mu_hat == full.mu_hat);
    CHECK(back[0].converged);
    CHECK(back[0].iterations == 17);
    CHECK(back[0].runtime_seconds == full.runtime_seconds);

    CHECK(back[1].method == Method::gaussian_mle);
    CHECK_FALSE(back[1].alpha_hat);
    CHECK_FALSE(back[1].sigma2_hat);
    CHECK_FALSE(back[1].lambda_hat);
    CHECK_FALSE(back[1].mu_hat);
    CHECK_FALSE(back[1].converged);
}

TEST_CASE("estimate reader rejects malformed rows", "[io]") {
    std::stringstream short_row("approx,0.1,,,,1,3\n");
    CHECK_THROWS_AS(read_estimates(short_row), IoError);
    std::stringstream bad_method("unknown,0.1,,,,1,3,0.5\n");
    CHECK_THROWS_AS(read_estimates(bad_method), InvalidParams);
}

TEST_CASE("file-path overloads create and read real files", "[io]") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "lbdp_io_test";
    fs::create_directories(dir);
    const auto path = dir / "obs.csv";

    ObservationSeries s({0.0, 1.0}, {10.0, 12.0});
    std::vector<std::string> ids{"x"};
    std::vector<ObservationSeries> series{s};
    write_observations(path, ids, series);
    auto back = read_observations(path);
    CHECK(back.ids == ids);

    CHECK_THROWS_AS(read_observations(dir / "missing.csv"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("bench config parsing", "[io]") {
    const std::string text =
        "# study B\n"
        "lambda = 2\n"
        "mu = 1\n"
        "x0 = 100\n"
        "n_series = 10\n"
        "n_timepoints = 10\n"
        "gamma_shape = 0.2\n"
        "gamma_rate = 1\n"
        "simulator = tauleap\n"
        "tau_step = 0.01\n"
        "M = 200\n"
        "seed = 2\n"
        "workers = 4\n"
        "methods = approx, gaussian, saddlepoint\n";
    std::stringstream in(text);
    auto cfg = parse_bench_config(in);
    CHECK(cfg.lambda == 2.0);
    CHECK(cfg.mu == 1.0);
    CHECK(cfg.x0 == 100);
    CHECK(cfg.n_series == 10);
    CHECK(cfg.n_timepoints == 10);
    CHECK(cfg.gamma_shape == 0.2);
    CHECK(cfg.simulator == Simulator::tauleap);
    CHECK(cfg.tau_step == 0.01);
    CHECK(cfg.M == 200);
    CHECK(cfg.seed == 2);
    CHECK(cfg.workers == 4);
    REQUIRE(cfg.methods.size() == 3);
    CHECK(cfg.methods[0] == Method::approx_mle);
    CHECK(cfg.methods[1] == Method::gaussian_mle);
    CHECK(cfg.methods[2] == Method::saddlepoint);
}

TEST_CASE("bench config parsing failures", "[io]") {
    std::stringstream unknown("lambda = 0.2\nstep = 0.1\n");
    CHECK_THROWS_AS(parse_bench_config(unknown), IoError);
    std::stringstream no_eq("lambda 0.2\n");
    CHECK_THROWS_AS(parse_bench_config(no_eq), IoError);
    std::stringstream bad_val("lambda = fast\n");
    CHECK_THROWS_AS(parse_bench_config(bad_val), IoError);
    std::stringstream bad_m("M = 0\n");
    CHECK_THROWS_AS(parse_bench_config(bad_m), InvalidParams);
    std::stringstream bad_method("methods = bayesian\n");
    CHECK_THROWS_AS(parse_bench_config(bad_method), InvalidParams);
}

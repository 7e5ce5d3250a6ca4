#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lbdp/bench.hpp"

using namespace lbdp;

namespace {

BenchConfig tiny_config() {
    BenchConfig cfg;
    cfg.lambda = 0.3;
    cfg.mu = 0.05;
    cfg.x0 = 50;
    cfg.n_series = 2;
    cfg.n_timepoints = 4;
    cfg.M = 4;
    cfg.seed = 11;
    cfg.methods = {Method::approx_mle, Method::gaussian_mle};
    return cfg;
}

}  // namespace

TEST_CASE("bench run has the expected shape", "[bench]") {
    auto rep = run_bench(tiny_config());
    REQUIRE(rep.rows.size() == 2);
    REQUIRE(rep.records.size() == 4);
    for (const auto& per_rep : rep.records) REQUIRE(per_rep.size() == 2);
    CHECK(rep.rows[0].method == Method::approx_mle);
    CHECK(rep.rows[1].method == Method::gaussian_mle);
    for (const auto& row : rep.rows) {
        CHECK(row.mae >= 0.0);
        CHECK(row.n_failed <= 4);
        CHECK(row.mean_runtime_s >= 0.0);
    }
    // a growing process started from 50 fits essentially always
    CHECK(rep.rows[0].n_failed < 4);
}

TEST_CASE("bench reports are reproducible from the seed", "[bench]") {
    auto a = run_bench(tiny_config());
    auto b = run_bench(tiny_config());
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t m = 0; m < a.records.size(); ++m)
        for (std::size_t k = 0; k < a.records[m].size(); ++k) {
            CHECK(a.records[m][k].ok == b.records[m][k].ok);
            CHECK(a.records[m][k].alpha_hat == b.records[m][k].alpha_hat);
            CHECK(a.records[m][k].abs_err == b.records[m][k].abs_err);
        }
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].mae == b.rows[k].mae);
        CHECK(a.rows[k].n_failed == b.rows[k].n_failed);
    }

    auto cfg2 = tiny_config();
    cfg2.seed = 12;
    auto c = run_bench(cfg2);
    CHECK(c.records[0][0].alpha_hat != a.records[0][0].alpha_hat);
}

TEST_CASE("bench results do not depend on the worker count", "[bench]") {
    auto cfg = tiny_config();
    cfg.workers = 1;
    auto serial = run_bench(cfg);
    cfg.workers = 3;
    auto parallel = run_bench(cfg);
    for (std::size_t m = 0; m < serial.records.size(); ++m)
        for (std::size_t k = 0; k < serial.records[m].size(); ++k) {
            CHECK(serial.records[m][k].ok == parallel.records[m][k].ok);
            CHECK(serial.records[m][k].alpha_hat == parallel.records[m][k].alpha_hat);
            CHECK(serial.records[m][k].abs_err == parallel.records[m][k].abs_err);
        }
    for (std::size_t k = 0; k < serial.rows.size(); ++k) {
        CHECK(serial.rows[k].mae == parallel.rows[k].mae);
        CHECK(serial.rows[k].n_failed == parallel.rows[k].n_failed);
    }
}

TEST_CASE("estimators that reject the data count as failures", "[bench]") {
    // gamma-drawn schedules are never equidistant, so gw fails every
    // replicate while approx succeeds on the same data
    auto cfg = tiny_config();
    cfg.methods = {Method::gw, Method::approx_mle};
    auto rep = run_bench(cfg);
    CHECK(rep.rows[0].n_failed == cfg.M);
    CHECK(rep.rows[0].mae == 0.0);
    CHECK(rep.rows[1].n_failed < cfg.M);
}

TEST_CASE("bench config validation", "[bench]") {
    auto ok = tiny_config();
    CHECK_NOTHROW(ok.validate());

    auto bad = tiny_config();
    bad.M = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = tiny_config();
    bad.n_timepoints = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = tiny_config();
    bad.workers = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = tiny_config();
    bad.methods.clear();
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = tiny_config();
    bad.lambda = 0.0;
    bad.mu = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = tiny_config();
    bad.x0 = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
    bad = tiny_config();
    bad.tau_step = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
}

TEST_CASE("simulator names round trip", "[bench]") {
    CHECK(detail::simulator_name(Simulator::gillespie) == "gillespie");
    CHECK(detail::simulator_name(Simulator::tauleap) == "tauleap");
    CHECK(detail::simulator_from_name("gillespie") == Simulator::gillespie);
    CHECK(detail::simulator_from_name("tauleap") == Simulator::tauleap);
    CHECK_THROWS_AS(detail::simulator_from_name("exact"), InvalidParams);
}

TEST_CASE("report emission", "[bench]") {
    auto rep = run_bench(tiny_config());
    std::vector<BenchReport> reports{rep};

    std::stringstream csv;
    write_bench_csv(csv, reports);
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == bench_csv_header);
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);

    std::stringstream txt;
    write_bench_text(txt, reports);
    CHECK(txt.str().find("method") != std::string::npos);
    CHECK(txt.str().find("approx") != std::string::npos);

    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "lbdp_bench_test";
    emit_report(reports, dir);
    CHECK(fs::exists(dir / "report.csv"));
    CHECK(fs::exists(dir / "report.txt"));
    fs::remove_all(dir);
}

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "estimate.hpp"
#include "io.hpp"
#include "random.hpp"
#include "simulate.hpp"
#include "types.hpp"

namespace lbdp {

enum class Simulator { gillespie, tauleap };

struct BenchConfig {
    double lambda = 0.2;
    double mu = 0.1;
    std::int64_t x0 = 100;
    int n_series = 10;
    int n_timepoints = 10;
    double gamma_shape = 1.0;
    double gamma_rate = 1.0;
    Simulator simulator = Simulator::gillespie;
    double tau_step = 0.01;
    int M = 200;
    std::vector<Method> methods = {Method::approx_mle, Method::gaussian_mle, Method::saddlepoint};
    std::uint64_t seed = 1;
    int workers = 1;

    void validate() const {
        if (M < 1) throw InvalidParams("M must be >= 1");
        if (n_timepoints < 2) throw InvalidParams("n_timepoints must be >= 2");
        if (n_series < 1) throw InvalidParams("n_series must be >= 1");
        if (x0 < 1) throw InvalidParams("x0 must be >= 1");
        if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0))
            throw InvalidParams("gamma parameters must be positive");
        if (!(tau_step > 0.0)) throw InvalidParams("tau_step must be positive");
        if (workers < 1) throw InvalidParams("workers must be >= 1");
        if (methods.empty()) throw InvalidParams("method list must not be empty");
        RateParams check(lambda, mu);
        (void)check;
    }
};

// One replicate's outcome for one method.
struct BenchRecord {
    std::optional<double> alpha_hat;  // unset on failure
    double abs_err = 0.0;
    double runtime_seconds = 0.0;
    bool ok = false;
};

struct BenchRow {
    Method method;
    double mae = 0.0;
    double mean_runtime_s = 0.0;
    int n_failed = 0;
};

struct BenchReport {
    BenchConfig config;
    std::vector<BenchRow> rows;
    // records[m][k]: replicate m, method k (same order as config.methods)
    std::vector<std::vector<BenchRecord>> records;
};

namespace detail {

inline std::string_view simulator_name(Simulator s) {
    return s == Simulator::gillespie ? "gillespie" : "tauleap";
}

inline Simulator simulator_from_name(std::string_view s) {
    if (s == "gillespie") return Simulator::gillespie;
    if (s == "tauleap") return Simulator::tauleap;
    throw InvalidParams("unknown simulator: " + std::string(s));
}

// One replicate: draw a schedule, simulate n_series trajectories,
// observe, and time each estimator on the pooled data. Replicates whose
// observations cannot be formed (extinct by the first draw) are retried
// with a fresh salt, then marked failed across all methods.
inline std::vector<BenchRecord> bench_replicate(const BenchConfig& cfg, int m) {
    std::vector<BenchRecord> recs(cfg.methods.size());
    const double alpha_true = cfg.lambda - cfg.mu;
    const RateParams rates(cfg.lambda, cfg.mu);

    std::vector<ObservationSeries> obs;
    bool have_data = false;
    for (int retry = 0; retry < 100 && !have_data; ++retry) {
        Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(m),
                           static_cast<std::uint64_t>(retry));
        try {
            const auto schedule =
                sample_schedule(cfg.n_timepoints, cfg.gamma_shape, cfg.gamma_rate, rng);
            const double t_end = schedule.back();
            std::vector<ObservationSeries> trial;
            trial.reserve(static_cast<std::size_t>(cfg.n_series));
            for (int s = 0; s < cfg.n_series; ++s) {
                Trajectory traj = cfg.simulator == Simulator::gillespie
                                      ? gillespie(rates, cfg.x0, t_end, rng)
                                      : tau_leap(rates, cfg.x0, t_end, cfg.tau_step, rng);
                trial.push_back(observe(traj, schedule));
            }
            obs = std::move(trial);
            have_data = true;
        } catch (const Error&) {
            // resample with the next salt
        }
    }
    if (!have_data) return recs;  // all methods recorded as failed

    SolverConfig scfg;
    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
        auto& rec = recs[k];
        try {
            EstimateResult fit;
            switch (cfg.methods[k]) {
                case Method::gw: fit = gw_estimate(obs, scfg); break;
                case Method::approx_mle: fit = approx_mle(obs, scfg); break;
                case Method::gaussian_mle: fit = gaussian_mle(obs, scfg); break;
                case Method::saddlepoint: fit = saddlepoint_mle(obs, scfg); break;
                default: throw InvalidParams("method not benchable");
            }
            rec.runtime_seconds = fit.runtime_seconds;
            if (fit.converged && fit.alpha_hat) {
                rec.ok = true;
                rec.alpha_hat = fit.alpha_hat;
                rec.abs_err = std::abs(*fit.alpha_hat - alpha_true);
            }
        } catch (const Error&) {
            rec.ok = false;
        }
    }
    return recs;
}

}  // namespace detail

// Monte Carlo study over M replicates. Replicates are independent tasks
// with per-replicate seeded generators, so the report is identical for
// any worker count; aggregation runs sequentially in replicate order.
inline BenchReport run_bench(const BenchConfig& cfg) {
    cfg.validate();
    BenchReport report;
    report.config = cfg;
    report.records.assign(static_cast<std::size_t>(cfg.M), {});

    const int workers = std::min(cfg.workers, cfg.M);
    if (workers <= 1) {
        for (int m = 0; m < cfg.M; ++m)
            report.records[static_cast<std::size_t>(m)] = detail::bench_replicate(cfg, m);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (;;) {
                const int m = next.fetch_add(1);
                if (m >= cfg.M) return;
                report.records[static_cast<std::size_t>(m)] = detail::bench_replicate(cfg, m);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
        BenchRow row;
        row.method = cfg.methods[k];
        double err_sum = 0.0, rt_sum = 0.0;
        int n_ok = 0, n_timed = 0;
        for (int m = 0; m < cfg.M; ++m) {
            const auto& rec = report.records[static_cast<std::size_t>(m)][k];
            if (rec.ok) {
                err_sum += rec.abs_err;
                ++n_ok;
            } else {
                ++row.n_failed;
            }
            if (rec.runtime_seconds > 0.0) {
                rt_sum += rec.runtime_seconds;
                ++n_timed;
            }
        }
        row.mae = n_ok > 0 ? err_sum / n_ok : 0.0;
        row.mean_runtime_s = n_timed > 0 ? rt_sum / n_timed : 0.0;
        report.rows.push_back(row);
    }
    return report;
}

// ============================================================
// Config file: flat `key = value` lines with BenchConfig field names
// ============================================================

inline BenchConfig parse_bench_config(std::istream& in) {
    BenchConfig cfg;
    std::string line;
    while (detail::next_line(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("config lines take the form key = value");
        const auto key = detail::trim(std::string_view(line).substr(0, eq));
        const auto val = detail::trim(std::string_view(line).substr(eq + 1));
        if (key == "lambda") cfg.lambda = detail::parse_double(val, "lambda");
        else if (key == "mu") cfg.mu = detail::parse_double(val, "mu");
        else if (key == "x0") cfg.x0 = detail::parse_int(val, "x0");
        else if (key == "n_series") cfg.n_series = static_cast<int>(detail::parse_int(val, "n_series"));
        else if (key == "n_timepoints") cfg.n_timepoints = static_cast<int>(detail::parse_int(val, "n_timepoints"));
        else if (key == "gamma_shape") cfg.gamma_shape = detail::parse_double(val, "gamma_shape");
        else if (key == "gamma_rate") cfg.gamma_rate = detail::parse_double(val, "gamma_rate");
        else if (key == "simulator") cfg.simulator = detail::simulator_from_name(val);
        else if (key == "tau_step") cfg.tau_step = detail::parse_double(val, "tau_step");
        else if (key == "M") cfg.M = static_cast<int>(detail::parse_int(val, "M"));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_int(val, "seed"));
        else if (key == "workers") cfg.workers = static_cast<int>(detail::parse_int(val, "workers"));
        else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& tok : detail::split_csv(val))
                if (!tok.empty()) cfg.methods.push_back(require_method(std::string(tok)));
        } else {
            throw IoError("unknown config key: " + std::string(key));
        }
    }
    cfg.validate();
    return cfg;
}

inline BenchConfig parse_bench_config(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return parse_bench_config(in);
}

// ============================================================
// Report emission: CSV plus an aligned text table
// ============================================================

inline constexpr const char* bench_csv_header =
    "lambda,mu,gamma_shape,x0,n_series,method,mae,mean_runtime_s,n_failed";

inline void write_bench_csv(std::ostream& out, std::span<const BenchReport> reports) {
    out << bench_csv_header << '\n';
    for (const auto& rep : reports) {
        const auto& c = rep.config;
        for (const auto& row : rep.rows) {
            out << detail::fmt_double(c.lambda) << ',' << detail::fmt_double(c.mu) << ','
                << detail::fmt_double(c.gamma_shape) << ',' << c.x0 << ',' << c.n_series << ','
                << method_name(row.method) << ',' << detail::fmt_double(row.mae) << ','
                << detail::fmt_double(row.mean_runtime_s) << ',' << row.n_failed << '\n';
        }
    }
}

inline void write_bench_text(std::ostream& out, std::span<const BenchReport> reports) {
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };
    for (const auto& rep : reports) {
        const auto& c = rep.config;
        out << "lambda=" << num(c.lambda) << " mu=" << num(c.mu)
            << " gamma_shape=" << num(c.gamma_shape) << " x0=" << c.x0
            << " n_series=" << c.n_series << " M=" << c.M << " simulator="
            << detail::simulator_name(c.simulator) << "\n";
        out << "  " << pad("method", 14) << pad("mae", 12) << pad("mean_runtime_s", 16)
            << "n_failed\n";
        for (const auto& row : rep.rows)
            out << "  " << pad(method_name(row.method), 14) << pad(num(row.mae), 12)
                << pad(num(row.mean_runtime_s), 16) << row.n_failed << "\n";
        out << "\n";
    }
}

inline void emit_report(std::span<const BenchReport> reports, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = detail::open_out(dir / "report.csv");
        write_bench_csv(out, reports);
    }
    {
        auto out = detail::open_out(dir / "report.txt");
        write_bench_text(out, reports);
    }
}

}  // namespace lbdp

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "types.hpp"

namespace lbdp {

namespace detail {

// shortest round-trippable decimal form
inline std::string fmt_double(double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, buf + n);
}

inline std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string();
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

inline double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw IoError(std::string("cannot parse ") + what + " from '" + std::string(s) + "'");
    return v;
}

inline std::optional<double> parse_opt(std::string_view s, const char* what) {
    if (s.empty()) return std::nullopt;
    return parse_double(s, what);
}

inline long long parse_int(std::string_view s, const char* what) {
    long long v = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw IoError(std::string("cannot parse ") + what + " from '" + std::string(s) + "'");
    return v;
}

// pull the next meaningful line: blank lines and '#' comments skipped
inline bool next_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        line.assign(t.begin(), t.end());
        return true;
    }
    return false;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

}  // namespace detail

// ============================================================
// Observation CSV: series_id,time,count
// ============================================================

struct ObservationSet {
    std::vector<std::string> ids;
    std::vector<ObservationSeries> series;
};

inline void write_observations(std::ostream& out, std::span<const std::string> ids,
                               std::span<const ObservationSeries> series) {
    if (ids.size() != series.size()) throw InvalidParams("ids and series must align");
    out << "series_id,time,count\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        for (std::size_t i = 0; i < ser.size(); ++i)
            out << ids[s] << ',' << detail::fmt_double(ser.times()[i]) << ','
                << detail::fmt_double(ser.counts()[i]) << '\n';
    }
}

inline ObservationSet read_observations(std::istream& in) {
    std::string line;
    struct Raw {
        std::vector<double> t, x;
    };
    std::vector<std::string> order;
    std::vector<Raw> groups;
    auto group_index = [&](std::string_view id) {
        for (std::size_t i = 0; i < order.size(); ++i)
            if (order[i] == id) return i;
        order.emplace_back(id);
        groups.emplace_back();
        return order.size() - 1;
    };
    bool first = true;
    while (detail::next_line(in, line)) {
        const auto f = detail::split_csv(line);
        if (first) {
            first = false;
            if (f.size() >= 3 && f[0] == "series_id" && f[1] == "time" && f[2] == "count")
                continue;
        }
        if (f.size() != 3) throw IoError("observation rows need 3 fields: " + line);
        auto& g = groups[group_index(f[0])];
        g.t.push_back(detail::parse_double(f[1], "time"));
        g.x.push_back(detail::parse_double(f[2], "count"));
    }
    ObservationSet out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& g = groups[i];
        // rows may arrive out of order; sort the pair by time
        std::vector<std::size_t> idx(g.t.size());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return g.t[a] < g.t[b]; });
        std::vector<double> t, x;
        t.reserve(idx.size());
        x.reserve(idx.size());
        for (auto k : idx) {
            t.push_back(g.t[k]);
            x.push_back(g.x[k]);
        }
        out.ids.push_back(order[i]);
        out.series.emplace_back(std::move(t), std::move(x));
    }
    return out;
}

inline void write_observations(const std::filesystem::path& path, std::span<const std::string> ids,
                               std::span<const ObservationSeries> series) {
    auto out = detail::open_out(path);
    write_observations(out, ids, series);
}

inline ObservationSet read_observations(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return read_observations(in);
}

// ============================================================
// Trajectory CSV: time,count
// ============================================================

inline void write_trajectory(std::ostream& out, const Trajectory& traj) {
    out << "time,count\n";
    for (std::size_t i = 0; i < traj.event_times.size(); ++i)
        out << detail::fmt_double(traj.event_times[i]) << ',' << traj.sizes[i] << '\n';
}

inline Trajectory read_trajectory(std::istream& in) {
    Trajectory traj;
    std::string line;
    bool first = true;
    while (detail::next_line(in, line)) {
        const auto f = detail::split_csv(line);
        if (first) {
            first = false;
            if (f.size() >= 2 && f[0] == "time" && f[1] == "count") continue;
        }
        if (f.size() != 2) throw IoError("trajectory rows need 2 fields: " + line);
        traj.event_times.push_back(detail::parse_double(f[0], "time"));
        traj.sizes.push_back(detail::parse_int(f[1], "count"));
    }
    if (traj.event_times.empty()) throw IoError("empty trajectory file");
    traj.horizon = traj.event_times.back();
    return traj;
}

inline void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
    auto out = detail::open_out(path);
    write_trajectory(out, traj);
}

inline Trajectory read_trajectory(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return read_trajectory(in);
}

// ============================================================
// Estimate CSV
// ============================================================

inline constexpr const char* estimate_csv_header =
    "method,alpha_hat,sigma2_hat,lambda_hat,mu_hat,converged,iterations,runtime_seconds";

inline void write_estimates(std::ostream& out, std::span<const EstimateResult> results) {
    out << estimate_csv_header << '\n';
    for (const auto& r : results) {
        out << method_name(r.method) << ',' << detail::fmt_opt(r.alpha_hat) << ','
            << detail::fmt_opt(r.sigma2_hat) << ',' << detail::fmt_opt(r.lambda_hat) << ','
            << detail::fmt_opt(r.mu_hat) << ',' << (r.converged ? 1 : 0) << ',' << r.iterations
            << ',' << detail::fmt_double(r.runtime_seconds) << '\n';
    }
}

inline std::vector<EstimateResult> read_estimates(std::istream& in) {
    std::vector<EstimateResult> out;
    std::string line;
    bool first = true;
    while (detail::next_line(in, line)) {
        const auto f = detail::split_csv(line);
        if (first) {
            first = false;
            if (!f.empty() && f[0] == "method") continue;
        }
        if (f.size() != 8) throw IoError("estimate rows need 8 fields: " + line);
        EstimateResult r;
        r.method = require_method(std::string(f[0]));
        r.alpha_hat = detail::parse_opt(f[1], "alpha_hat");
        r.sigma2_hat = detail::parse_opt(f[2], "sigma2_hat");
        r.lambda_hat = detail::parse_opt(f[3], "lambda_hat");
        r.mu_hat = detail::parse_opt(f[4], "mu_hat");
        r.converged = detail::parse_int(f[5], "converged") != 0;
        r.iterations = static_cast<int>(detail::parse_int(f[6], "iterations"));
        r.runtime_seconds = detail::parse_double(f[7], "runtime_seconds");
        out.push_back(std::move(r));
    }
    return out;
}

inline void write_estimates(const std::filesystem::path& path,
                            std::span<const EstimateResult> results) {
    auto out = detail::open_out(path);
    write_estimates(out, results);
}

inline std::vector<EstimateResult> read_estimates(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return read_estimates(in);
}

}  // namespace lbdp

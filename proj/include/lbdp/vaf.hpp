#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "estimate.hpp"
#include "io.hpp"
#include "random.hpp"
#include "types.hpp"

namespace lbdp {

struct VafRecord {
    std::string subject_id;
    std::string mutation;
    double time = 0.0;  // years
    double vaf = 0.0;
};

struct MutationSummary {
    std::string mutation;
    Method method = Method::approx_mle;
    double mean_alpha_pct = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_subjects = 0;
};

// Per-(subject, mutation) fit outcome; alpha_pct is the growth rate in
// percent per year when the fit produced one.
struct CohortFit {
    std::string subject_id;
    std::string mutation;
    EstimateResult result;
    std::optional<double> alpha_pct;
    bool skipped = false;
    std::string warning;
};

// Pseudo-count from a heterozygous VAF against a constant wild-type
// population. Default is the published inverse X = vaf/(1-vaf) * 2W;
// exact_inverse applies the algebraic inverse X = 2 vaf W / (1 - 2 vaf)
// of the forward map vaf = x / (2(x + W)).
inline double vaf_to_count(double vaf, double wildtype_pop = 200000.0,
                           bool exact_inverse = false) {
    if (!(wildtype_pop > 0.0)) throw InvalidParams("wildtype_pop must be positive");
    if (!(vaf >= 0.0)) throw OutOfRange("vaf must be nonnegative");
    if (exact_inverse) {
        if (vaf >= 0.5) throw OutOfRange("vaf must be below 0.5");
        return 2.0 * vaf * wildtype_pop / (1.0 - 2.0 * vaf);
    }
    if (vaf >= 1.0) throw OutOfRange("vaf must be below 1");
    return vaf / (1.0 - vaf) * 2.0 * wildtype_pop;
}

// Forward map: mutant count to heterozygous VAF.
inline double count_to_vaf(double x, double wildtype_pop = 200000.0) {
    if (!(x >= 0.0)) throw InvalidParams("count must be nonnegative");
    if (!(wildtype_pop > 0.0)) throw InvalidParams("wildtype_pop must be positive");
    return 0.5 * x / (x + wildtype_pop);
}

namespace detail {

// linear-interpolation quantile of sorted values
inline double quantile_sorted(std::span<const double> v, double p) {
    if (v.empty()) throw EmptyGroup("quantile of empty set");
    if (v.size() == 1) return v[0];
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

}  // namespace detail

// Fit one estimator per (subject, mutation) group. Groups keep their
// first-appearance order; rows within a group are sorted by time.
// Groups with fewer than two usable timepoints are skipped with a
// warning; leading zero counts carry no growth information and are
// trimmed, and an all-zero group takes the zero-root convention.
inline std::vector<CohortFit> fit_cohort(std::span<const VafRecord> records, Method method,
                                         bool exact_inverse = false,
                                         double wildtype_pop = 200000.0,
                                         const SolverConfig& cfg = {}) {
    struct Group {
        std::string subject, mutation;
        std::vector<double> t, v;
    };
    std::vector<Group> groups;
    auto find_group = [&](const VafRecord& r) -> Group& {
        for (auto& g : groups)
            if (g.subject == r.subject_id && g.mutation == r.mutation) return g;
        groups.push_back(Group{r.subject_id, r.mutation, {}, {}});
        return groups.back();
    };
    for (const auto& r : records) {
        auto& g = find_group(r);
        g.t.push_back(r.time);
        g.v.push_back(r.vaf);
    }

    std::vector<CohortFit> out;
    out.reserve(groups.size());
    for (auto& g : groups) {
        CohortFit fit;
        fit.subject_id = g.subject;
        fit.mutation = g.mutation;
        fit.result.method = method;

        std::vector<std::size_t> idx(g.t.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return g.t[a] < g.t[b]; });

        try {
            std::vector<double> times, counts;
            times.reserve(idx.size());
            counts.reserve(idx.size());
            for (auto i : idx) {
                times.push_back(g.t[i]);
                counts.push_back(vaf_to_count(g.v[i], wildtype_pop, exact_inverse));
            }
            // drop the leading zero-count stretch: no signal before the
            // clone is first seen
            std::size_t first = 0;
            while (first < counts.size() && counts[first] <= 0.0) ++first;
            times.erase(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(first));
            counts.erase(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(first));

            if (g.t.size() < 2) {
                fit.skipped = true;
                fit.warning = "fewer than two timepoints";
            } else if (counts.size() < 2) {
                // nothing (or one point) above zero: no observed growth
                fit.result.alpha_hat = 0.0;
                fit.result.converged = true;
                fit.alpha_pct = 0.0;
                if (first > 0) fit.warning = "at most one nonzero measurement";
            } else {
                ObservationSeries series(std::move(times), std::move(counts));
                switch (method) {
                    case Method::gw: fit.result = gw_estimate(series, cfg); break;
                    case Method::approx_mle: fit.result = approx_mle(series, cfg); break;
                    case Method::gaussian_mle: fit.result = gaussian_mle(series, cfg); break;
                    case Method::saddlepoint: fit.result = saddlepoint_mle(series, cfg); break;
                    default: throw InvalidParams("method not usable on cohorts");
                }
                if (fit.result.converged && fit.result.alpha_hat)
                    fit.alpha_pct = 100.0 * *fit.result.alpha_hat;
            }
        } catch (const Error& e) {
            fit.result.converged = false;
            fit.warning = e.what();
        }
        out.push_back(std::move(fit));
    }
    return out;
}

// Aggregate converged per-subject fits per mutation: mean growth rate
// in percent per year with 2.5%/97.5% empirical quantile bounds.
inline std::vector<MutationSummary> summarize(std::span<const CohortFit> fits) {
    std::vector<std::string> order;
    for (const auto& f : fits)
        if (std::find(order.begin(), order.end(), f.mutation) == order.end())
            order.push_back(f.mutation);

    std::vector<MutationSummary> out;
    out.reserve(order.size());
    for (const auto& mut : order) {
        std::vector<double> alphas;
        Method method = Method::approx_mle;
        for (const auto& f : fits) {
            if (f.mutation != mut || f.skipped || !f.alpha_pct) continue;
            if (!f.result.converged) continue;
            alphas.push_back(*f.alpha_pct);
            method = f.result.method;
        }
        if (alphas.empty()) throw EmptyGroup("no converged fits for mutation " + mut);
        std::sort(alphas.begin(), alphas.end());
        MutationSummary s;
        s.mutation = mut;
        s.method = method;
        s.n_subjects = static_cast<int>(alphas.size());
        double sum = 0.0;
        for (double a : alphas) sum += a;
        s.mean_alpha_pct = sum / static_cast<double>(alphas.size());
        s.ci_low = detail::quantile_sorted(alphas, 0.025);
        s.ci_high = detail::quantile_sorted(alphas, 0.975);
        out.push_back(std::move(s));
    }
    return out;
}

// Synthetic cohort for pipeline tests: per-subject pseudo-count paths
// following the Gaussian transition law at (alpha, sigma2), pushed
// through the forward VAF map. alpha is per year; times are in years.
inline std::vector<VafRecord> synthetic_cohort(int n_subjects, double alpha, double sigma2,
                                               std::span<const double> times, double x0,
                                               const std::string& mutation, std::uint64_t seed,
                                               double wildtype_pop = 200000.0) {
    if (n_subjects < 1) throw InvalidParams("n_subjects must be >= 1");
    if (times.size() < 2) throw InvalidParams("need at least two timepoints");
    if (!(x0 > 0.0)) throw InvalidParams("x0 must be positive");
    std::vector<VafRecord> out;
    out.reserve(static_cast<std::size_t>(n_subjects) * times.size());
    for (int s = 0; s < n_subjects; ++s) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
        double x = x0;
        char id[16];
        std::snprintf(id, sizeof id, "s%03d", s + 1);
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (i > 0) {
                const double dt = times[i] - times[i - 1];
                const double e = std::exp(alpha * dt);
                const double mean = x * e;
                const double var = sigma2 * x * e * std::expm1(alpha * dt);
                if (var > 0.0) {
                    std::normal_distribution<double> noise(mean, std::sqrt(var));
                    x = std::max(1.0, noise(rng));
                } else {
                    x = std::max(1.0, mean);
                }
            }
            out.push_back(VafRecord{id, mutation, times[i], count_to_vaf(x, wildtype_pop)});
        }
    }
    return out;
}

// ============================================================
// CSV: subject_id,mutation,time,vaf  /  summary rows
// ============================================================

inline void write_vaf_records(std::ostream& out, std::span<const VafRecord> records) {
    out << "subject_id,mutation,time,vaf\n";
    for (const auto& r : records)
        out << r.subject_id << ',' << r.mutation << ',' << detail::fmt_double(r.time) << ','
            << detail::fmt_double(r.vaf) << '\n';
}

inline std::vector<VafRecord> read_vaf_records(std::istream& in) {
    std::vector<VafRecord> out;
    std::string line;
    bool first = true;
    while (detail::next_line(in, line)) {
        const auto f = detail::split_csv(line);
        if (first) {
            first = false;
            if (f.size() >= 4 && f[0] == "subject_id" && f[1] == "mutation") continue;
        }
        if (f.size() != 4) throw IoError("vaf rows need 4 fields: " + line);
        VafRecord r;
        r.subject_id = std::string(f[0]);
        r.mutation = std::string(f[1]);
        r.time = detail::parse_double(f[2], "time");
        r.vaf = detail::parse_double(f[3], "vaf");
        out.push_back(std::move(r));
    }
    return out;
}

inline constexpr const char* vaf_summary_csv_header =
    "mutation,method,mean_alpha_pct,ci_low,ci_high,n_subjects";

inline void write_mutation_summaries(std::ostream& out,
                                     std::span<const MutationSummary> summaries) {
    out << vaf_summary_csv_header << '\n';
    for (const auto& s : summaries)
        out << s.mutation << ',' << method_name(s.method) << ','
            << detail::fmt_double(s.mean_alpha_pct) << ',' << detail::fmt_double(s.ci_low) << ','
            << detail::fmt_double(s.ci_high) << ',' << s.n_subjects << '\n';
}

inline std::vector<MutationSummary> read_mutation_summaries(std::istream& in) {
    std::vector<MutationSummary> out;
    std::string line;
    bool first = true;
    while (detail::next_line(in, line)) {
        const auto f = detail::split_csv(line);
        if (first) {
            first = false;
            if (!f.empty() && f[0] == "mutation") continue;
        }
        if (f.size() != 6) throw IoError("summary rows need 6 fields: " + line);
        MutationSummary s;
        s.mutation = std::string(f[0]);
        s.method = require_method(std::string(f[1]));
        s.mean_alpha_pct = detail::parse_double(f[2], "mean_alpha_pct");
        s.ci_low = detail::parse_double(f[3], "ci_low");
        s.ci_high = detail::parse_double(f[4], "ci_high");
        s.n_subjects = static_cast<int>(detail::parse_int(f[5], "n_subjects"));
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<VafRecord> read_vaf_records(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return read_vaf_records(in);
}

inline void write_mutation_summaries(const std::filesystem::path& path,
                                     std::span<const MutationSummary> summaries) {
    auto out = detail::open_out(path);
    write_mutation_summaries(out, summaries);
}

}  // namespace lbdp

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "lbdp/vaf.hpp"

using namespace lbdp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("vaf to pseudo-count conversions", "[vaf]") {
    // published inverse: vaf/(1-vaf) * 2W
    CHECK_THAT(vaf_to_count(0.1), WithinRel(44444.444444444445, 1e-14));
    // algebraic inverse of the forward map
    CHECK_THAT(vaf_to_count(0.1, 200000.0, true), WithinRel(50000.0, 1e-14));
    CHECK(vaf_to_count(0.0) == 0.0);
    CHECK(vaf_to_count(0.0, 200000.0, true) == 0.0);

    // the published inverse stays finite past 0.5; the exact one cannot
    CHECK_NOTHROW(vaf_to_count(0.6));
    CHECK_THROWS_AS(vaf_to_count(0.5, 200000.0, true), OutOfRange);
    CHECK_THROWS_AS(vaf_to_count(1.0), OutOfRange);
    CHECK_THROWS_AS(vaf_to_count(-0.01), OutOfRange);
    CHECK_THROWS_AS(vaf_to_count(0.1, 0.0), InvalidParams);
}

TEST_CASE("forward vaf map and its inverse", "[vaf]") {
    CHECK_THAT(count_to_vaf(50000.0), WithinRel(0.1, 1e-14));
    CHECK(count_to_vaf(0.0) == 0.0);
    CHECK_THROWS_AS(count_to_vaf(-1.0), InvalidParams);

    // exact inverse round-trips the forward map; the published one is biased
    for (double v : {0.01, 0.1, 0.3, 0.49}) {
        CHECK_THAT(count_to_vaf(vaf_to_count(v, 150000.0, true), 150000.0), WithinRel(v, 1e-12));
    }
    CHECK(count_to_vaf(vaf_to_count(0.1)) < 0.1);
}

TEST_CASE("interpolated quantiles", "[vaf]") {
    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK_THAT(detail::quantile_sorted(v, 0.025), WithinRel(1.075, 1e-13));
    CHECK_THAT(detail::quantile_sorted(v, 0.975), WithinRel(3.925, 1e-13));
    CHECK_THAT(detail::quantile_sorted(v, 0.5), WithinRel(2.5, 1e-13));
    CHECK(detail::quantile_sorted(v, 1.0) == 4.0);
    std::vector<double> one{7.0};
    CHECK(detail::quantile_sorted(one, 0.33) == 7.0);
    std::vector<double> none;
    CHECK_THROWS_AS(detail::quantile_sorted(none, 0.5), EmptyGroup);
}

TEST_CASE("cohort fitting groups by subject and mutation", "[vaf]") {
    std::vector<VafRecord> recs;
    // subject 1: exact 10%/year growth, rows deliberately out of time order
    for (int i : {2, 0, 1, 3}) {
        const double x = 10000.0 * std::exp(0.1 * i);
        recs.push_back({"s1", "DNMT3A", static_cast<double>(i), count_to_vaf(x)});
    }
    // same subject, second mutation: flat
    for (int i = 0; i < 3; ++i)
        recs.push_back({"s1", "TET2", static_cast<double>(i), count_to_vaf(8000.0)});
    // second subject, first mutation: decay
    for (int i = 0; i < 3; ++i) {
        const double x = 10000.0 * std::exp(-0.05 * i);
        recs.push_back({"s2", "DNMT3A", static_cast<double>(i), count_to_vaf(x)});
    }

    auto fits = fit_cohort(recs, Method::approx_mle, true);
    REQUIRE(fits.size() == 3);
    CHECK(fits[0].subject_id == "s1");
    CHECK(fits[0].mutation == "DNMT3A");
    CHECK(fits[1].mutation == "TET2");
    CHECK(fits[2].subject_id == "s2");

    REQUIRE(fits[0].alpha_pct);
    CHECK_THAT(*fits[0].alpha_pct, WithinAbs(10.0, 1e-7));
    REQUIRE(fits[1].alpha_pct);
    CHECK_THAT(*fits[1].alpha_pct, WithinAbs(0.0, 1e-12));
    REQUIRE(fits[2].alpha_pct);
    CHECK_THAT(*fits[2].alpha_pct, WithinAbs(-5.0, 1e-7));
}

TEST_CASE("cohort fitting edge conventions", "[vaf]") {
    std::vector<VafRecord> recs;
    recs.push_back({"only", "X", 0.0, 0.1});  // single measurement
    recs.push_back({"zeros", "X", 0.0, 0.0});
    recs.push_back({"zeros", "X", 1.0, 0.0});
    recs.push_back({"late", "X", 0.0, 0.0});
    recs.push_back({"late", "X", 1.0, count_to_vaf(10000.0)});
    recs.push_back({"late", "X", 2.0, count_to_vaf(10000.0 * std::exp(0.1))});
    recs.push_back({"late", "X", 3.0, count_to_vaf(10000.0 * std::exp(0.2))});

    auto fits = fit_cohort(recs, Method::approx_mle, true);
    REQUIRE(fits.size() == 3);

    CHECK(fits[0].skipped);
    CHECK_FALSE(fits[0].warning.empty());
    CHECK_FALSE(fits[0].alpha_pct);

    // no growth ever observed: zero by convention, flagged
    CHECK_FALSE(fits[1].skipped);
    REQUIRE(fits[1].alpha_pct);
    CHECK(*fits[1].alpha_pct == 0.0);
    CHECK(fits[1].result.converged);
    CHECK_FALSE(fits[1].warning.empty());

    // the leading zero is trimmed; the tail carries the 10%/year signal
    REQUIRE(fits[2].alpha_pct);
    CHECK_THAT(*fits[2].alpha_pct, WithinAbs(10.0, 1e-7));
}

TEST_CASE("cohort fitting surfaces estimator errors as warnings", "[vaf]") {
    std::vector<VafRecord> recs;
    recs.push_back({"s1", "X", 0.0, 0.05});
    recs.push_back({"s1", "X", 1.0, 0.06});
    auto fits = fit_cohort(recs, Method::generalized, true);
    REQUIRE(fits.size() == 1);
    CHECK_FALSE(fits[0].result.converged);
    CHECK_FALSE(fits[0].warning.empty());
    CHECK_FALSE(fits[0].alpha_pct);
}

TEST_CASE("mutation summaries aggregate converged fits", "[vaf]") {
    auto make_fit = [](const char* subj, const char* mut, double pct) {
        CohortFit f;
        f.subject_id = subj;
        f.mutation = mut;
        f.result.method = Method::approx_mle;
        f.result.converged = true;
        f.alpha_pct = pct;
        return f;
    };
    std::vector<CohortFit> fits;
    fits.push_back(make_fit("a", "DNMT3A", 1.0));
    fits.push_back(make_fit("b", "DNMT3A", 2.0));
    fits.push_back(make_fit("c", "DNMT3A", 3.0));
    fits.push_back(make_fit("d", "DNMT3A", 4.0));
    fits.push_back(make_fit("a", "TET2", 7.0));
    // excluded rows: skipped, failed, and missing alpha
    CohortFit sk = make_fit("e", "DNMT3A", 99.0);
    sk.skipped = true;
    fits.push_back(sk);
    CohortFit failed = make_fit("f", "DNMT3A", 99.0);
    failed.result.converged = false;
    fits.push_back(failed);

    auto sums = summarize(fits);
    REQUIRE(sums.size() == 2);
    CHECK(sums[0].mutation == "DNMT3A");
    CHECK(sums[0].n_subjects == 4);
    CHECK_THAT(sums[0].mean_alpha_pct, WithinRel(2.5, 1e-13));
    CHECK_THAT(sums[0].ci_low, WithinRel(1.075, 1e-13));
    CHECK_THAT(sums[0].ci_high, WithinRel(3.925, 1e-13));
    CHECK(sums[1].mutation == "TET2");
    CHECK(sums[1].n_subjects == 1);

    std::vector<CohortFit> only_failed{failed};
    CHECK_THROWS_AS(summarize(only_failed), EmptyGroup);
}

TEST_CASE("synthetic cohorts are reproducible and recoverable", "[vaf]") {
    std::vector<double> times{0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    auto recs = synthetic_cohort(8, 0.1, 2.0, times, 20000.0, "TET2", 5);
    REQUIRE(recs.size() == 8 * times.size());
    CHECK(recs[0].subject_id == "s001");
    CHECK(recs.back().subject_id == "s008");
    CHECK_THAT(recs[0].vaf, WithinRel(count_to_vaf(20000.0), 1e-14));

    auto again = synthetic_cohort(8, 0.1, 2.0, times, 20000.0, "TET2", 5);
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(recs[i].vaf == again[i].vaf);

    auto fits = fit_cohort(recs, Method::approx_mle, true);
    auto sums = summarize(fits);
    REQUIRE(sums.size() == 1);
    CHECK(sums[0].n_subjects == 8);
    CHECK(sums[0].mean_alpha_pct > 9.0);
    CHECK(sums[0].mean_alpha_pct < 11.0);

    // zero transition variance collapses onto the mean path exactly
    auto flat = synthetic_cohort(2, 0.1, 0.0, times, 5000.0, "ASXL1", 9);
    auto ffits = fit_cohort(flat, Method::approx_mle, true);
    CHECK_THAT(*ffits[0].alpha_pct, WithinAbs(10.0, 1e-7));

    CHECK_THROWS_AS(synthetic_cohort(0, 0.1, 2.0, times, 100.0, "m", 1), InvalidParams);
    std::vector<double> one{0.0};
    CHECK_THROWS_AS(synthetic_cohort(2, 0.1, 2.0, one, 100.0, "m", 1), InvalidParams);
    CHECK_THROWS_AS(synthetic_cohort(2, 0.1, 2.0, times, 0.0, "m", 1), InvalidParams);
}

TEST_CASE("vaf record csv round trip", "[vaf]") {
    std::vector<VafRecord> recs;
    recs.push_back({"s001", "DNMT3A", 0.0, 0.012345678901234567});
    recs.push_back({"s001", "DNMT3A", 1.5, 0.025});
    recs.push_back({"s002", "TET2", 0.0, 0.2});

    std::stringstream buf;
    write_vaf_records(buf, recs);
    auto back = read_vaf_records(buf);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].subject_id == recs[i].subject_id);
        CHECK(back[i].mutation == recs[i].mutation);
        CHECK(back[i].time == recs[i].time);
        CHECK(back[i].vaf == recs[i].vaf);
    }

    std::stringstream bad("s001,DNMT3A,0.0\n");
    CHECK_THROWS_AS(read_vaf_records(bad), IoError);
}

TEST_CASE("mutation summary csv round trip", "[vaf]") {
    MutationSummary s;
    s.mutation = "DNMT3A";
    s.method = Method::approx_mle;
    s.mean_alpha_pct = 9.876543210987654;
    s.ci_low = 8.1;
    s.ci_high = 11.9;
    s.n_subjects = 25;
    std::vector<MutationSummary> sums{s};

    std::stringstream buf;
    write_mutation_summaries(buf, sums);
    auto back = read_mutation_summaries(buf);
    REQUIRE(back.size() == 1);
    CHECK(back[0].mutation == "DNMT3A");
    CHECK(back[0].method == Method::approx_mle);
    CHECK(back[0].mean_alpha_pct == s.mean_alpha_pct);
    CHECK(back[0].ci_low == s.ci_low);
    CHECK(back[0].ci_high == s.ci_high);
    CHECK(back[0].n_subjects == 25);

    std::stringstream bad("X,bayes,1,0,2,3\n");
    CHECK_THROWS_AS(read_mutation_summaries(bad), InvalidParams);
}

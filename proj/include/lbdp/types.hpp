#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lbdp {

// ============================================================
// Errors
// ============================================================

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParams : public Error { public: using Error::Error; };
class CriticalProcess : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class DegenerateVariance : public Error { public: using Error::Error; };
class NotEquidistant : public Error { public: using Error::Error; };
class DegenerateData : public Error { public: using Error::Error; };
class ScheduleBeyondTrajectory : public Error { public: using Error::Error; };
class QuadratureFailure : public Error { public: using Error::Error; };
class OutOfBounds : public Error { public: using Error::Error; };
class OutOfRange : public Error { public: using Error::Error; };
class EmptyGroup : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

// ============================================================
// Parameterizations
// ============================================================

// Per-capita birth rate lambda and death rate mu of a linear
// birth-death process. Both nonnegative, not both zero.
struct RateParams {
    double lambda = 0.0;
    double mu = 0.0;

    RateParams(double lambda_, double mu_) : lambda(lambda_), mu(mu_) {
        if (!std::isfinite(lambda) || !std::isfinite(mu))
            throw InvalidParams("rates must be finite");
        if (lambda < 0.0 || mu < 0.0)
            throw InvalidParams("rates must be nonnegative");
        if (lambda + mu <= 0.0)
            throw InvalidParams("lambda + mu must be positive");
    }

    double alpha() const { return lambda - mu; }
};

// Growth-rate parameterization: alpha = lambda - mu and
// sigma2 = (lambda + mu) / (lambda - mu). sigma2 carries the sign
// of alpha and |sigma2| >= 1 whenever it comes from valid rates.
struct GrowthParams {
    double alpha = 0.0;
    double sigma2 = 0.0;
};

inline GrowthParams rates_to_growth(const RateParams& p) {
    const double a = p.lambda - p.mu;
    if (a == 0.0)
        throw CriticalProcess("lambda == mu: growth parameterization undefined");
    return GrowthParams{a, (p.lambda + p.mu) / a};
}

inline RateParams growth_to_rates(const GrowthParams& g) {
    if (!std::isfinite(g.alpha) || !std::isfinite(g.sigma2))
        throw InvalidParams("growth parameters must be finite");
    if (g.alpha == 0.0)
        throw InvalidParams("alpha must be nonzero");
    const double lambda = 0.5 * g.alpha * (g.sigma2 + 1.0);
    const double mu = 0.5 * g.alpha * (g.sigma2 - 1.0);
    if (lambda < 0.0 || mu < 0.0)
        throw InvalidParams("parameters map to negative rates");
    return RateParams(lambda, mu);
}

// ============================================================
// Data containers
// ============================================================

// One observed trajectory: counts at strictly increasing times.
// Counts are held as reals; estimators never assume integrality
// (pseudo-counts from allele-frequency data are fractional).
class ObservationSeries {
public:
    ObservationSeries(std::vector<double> times, std::vector<double> counts)
        : times_(std::move(times)), counts_(std::move(counts)) {
        if (times_.size() != counts_.size())
            throw InvalidParams("times and counts must have equal length");
        if (times_.size() < 2)
            throw InvalidParams("a series needs at least two observations");
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!std::isfinite(times_[i]) || !std::isfinite(counts_[i]))
                throw InvalidParams("times and counts must be finite");
            if (counts_[i] < 0.0)
                throw InvalidParams("counts must be nonnegative");
            if (i > 0 && times_[i] <= times_[i - 1])
                throw InvalidParams("times must be strictly increasing");
        }
        if (counts_.front() <= 0.0)
            throw InvalidParams("first count must be positive");
    }

    std::size_t size() const { return times_.size(); }
    std::size_t n_intervals() const { return times_.size() - 1; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& counts() const { return counts_; }
    double interval(std::size_t i) const { return times_[i + 1] - times_[i]; }

private:
    std::vector<double> times_;
    std::vector<double> counts_;
};

enum class SimMethod { exact, tau_leap };

// Raw simulated path: the state after each recorded event/step. sizes[k]
// holds the population from event_times[k] (inclusive) until the next
// entry; horizon is the simulated end time, which may exceed the last
// recorded event when the process went extinct or no event fell late.
struct Trajectory {
    std::vector<double> event_times;  // first entry is 0 (initial state)
    std::vector<std::int64_t> sizes;
    SimMethod method = SimMethod::exact;
    double horizon = 0.0;

    bool extinct() const { return !sizes.empty() && sizes.back() == 0; }
};

// ============================================================
// Estimation results
// ============================================================

enum class Method { gw, approx_mle, gaussian_mle, saddlepoint, generalized };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::gw: return "gw";
        case Method::approx_mle: return "approx";
        case Method::gaussian_mle: return "gaussian";
        case Method::saddlepoint: return "saddlepoint";
        case Method::generalized: return "generalized";
    }
    return "unknown";
}

inline std::optional<Method> method_from_name(const std::string& s) {
    if (s == "gw") return Method::gw;
    if (s == "approx") return Method::approx_mle;
    if (s == "gaussian") return Method::gaussian_mle;
    if (s == "saddlepoint") return Method::saddlepoint;
    if (s == "generalized") return Method::generalized;
    return std::nullopt;
}

inline Method require_method(const std::string& s) {
    if (auto m = method_from_name(s)) return *m;
    throw InvalidParams("unknown method name: " + s);
}

struct EstimateResult {
    Method method = Method::approx_mle;
    std::optional<double> alpha_hat;
    std::optional<double> sigma2_hat;
    std::optional<double> lambda_hat;
    std::optional<double> mu_hat;
    bool converged = false;
    int iterations = 0;
    double runtime_seconds = 0.0;
    int flagged_series = 0;        // series/intervals that needed special handling
    double residual_norm = 0.0;    // generalized estimator: |F(theta)| at the solution
    std::vector<double> theta;     // generalized estimator: full parameter vector
    std::string message;           // failure or warning detail
};

// Fill lambda_hat/mu_hat from (alpha_hat, sigma2_hat) when the map
// lands on valid nonnegative rates; leave them unset otherwise.
inline void derive_rates(EstimateResult& r) {
    if (!r.alpha_hat || !r.sigma2_hat) return;
    try {
        RateParams p = growth_to_rates(GrowthParams{*r.alpha_hat, *r.sigma2_hat});
        r.lambda_hat = p.lambda;
        r.mu_hat = p.mu;
    } catch (const Error&) {
        // estimates outside the admissible rate region: leave unset
    }
}

}  // namespace lbdp

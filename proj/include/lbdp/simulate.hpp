#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "random.hpp"
#include "types.hpp"

namespace lbdp {

// ============================================================
// Simulators
// ============================================================

// Exact event-by-event simulation: waiting times Exp((lambda+mu)X),
// each event a birth with probability lambda/(lambda+mu). Stops at
// extinction or t_max; the trajectory records the state after every
// event, starting with the initial state at time 0.
inline Trajectory gillespie(const RateParams& p, std::int64_t x0, double t_max, Rng& rng) {
    if (x0 < 0) throw InvalidParams("initial size must be nonnegative");
    if (!(t_max >= 0.0) || !std::isfinite(t_max))
        throw InvalidParams("horizon must be nonnegative and finite");

    Trajectory traj;
    traj.method = SimMethod::exact;
    traj.horizon = t_max;
    traj.event_times.push_back(0.0);
    traj.sizes.push_back(x0);

    const double total_rate = p.lambda + p.mu;
    const double p_birth = p.lambda / total_rate;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double t = 0.0;
    std::int64_t x = x0;
    while (x > 0) {
        std::exponential_distribution<double> wait(total_rate * static_cast<double>(x));
        t += wait(rng);
        if (t > t_max) break;
        x += (unif(rng) < p_birth) ? 1 : -1;
        traj.event_times.push_back(t);
        traj.sizes.push_back(x);
    }
    return traj;
}

inline Trajectory gillespie(const RateParams& p, std::int64_t x0, double t_max,
                            std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return gillespie(p, x0, t_max, rng);
}

// Tau-leaping with a fixed step: per step, births ~ Poisson(lambda X dt)
// and deaths ~ Poisson(mu X dt), the state clamped at zero and absorbed
// there. The final step is shortened so the grid lands exactly on t_max.
inline Trajectory tau_leap(const RateParams& p, std::int64_t x0, double t_max, double step,
                           Rng& rng) {
    if (x0 < 0) throw InvalidParams("initial size must be nonnegative");
    if (!(step > 0.0)) throw InvalidParams("step must be positive");
    if (!(t_max >= 0.0) || !std::isfinite(t_max))
        throw InvalidParams("horizon must be nonnegative and finite");

    Trajectory traj;
    traj.method = SimMethod::tau_leap;
    traj.horizon = t_max;
    traj.event_times.push_back(0.0);
    traj.sizes.push_back(x0);

    double t = 0.0;
    std::int64_t x = x0;
    while (t < t_max && x > 0) {
        const double dt = std::min(step, t_max - t);
        std::int64_t births = 0, deaths = 0;
        if (p.lambda > 0.0) {
            std::poisson_distribution<std::int64_t> d(p.lambda * static_cast<double>(x) * dt);
            births = d(rng);
        }
        if (p.mu > 0.0) {
            std::poisson_distribution<std::int64_t> d(p.mu * static_cast<double>(x) * dt);
            deaths = d(rng);
        }
        x = std::max<std::int64_t>(0, x + births - deaths);
        t += dt;
        traj.event_times.push_back(t);
        traj.sizes.push_back(x);
    }
    return traj;
}

inline Trajectory tau_leap(const RateParams& p, std::int64_t x0, double t_max, double step,
                           std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return tau_leap(p, x0, t_max, step, rng);
}

// ============================================================
// Observation schedules
// ============================================================

// n_points observation times starting at 0, with iid Gamma(shape, rate)
// intervals between consecutive points.
inline std::vector<double> sample_schedule(int n_points, double shape, double rate, Rng& rng) {
    if (n_points < 2) throw InvalidParams("a schedule needs at least two points");
    if (!(shape > 0.0) || !(rate > 0.0))
        throw InvalidParams("gamma interval parameters must be positive");
    std::gamma_distribution<double> gap(shape, 1.0 / rate);
    std::vector<double> times(static_cast<std::size_t>(n_points));
    times[0] = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        // tiny shapes can draw gaps at or below the resolution of the
        // running sum; redraw until the time strictly advances
        double g = gap(rng);
        while (!(times[i - 1] + g > times[i - 1])) g = gap(rng);
        times[i] = times[i - 1] + g;
    }
    return times;
}

inline std::vector<double> sample_schedule(int n_points, double shape, double rate,
                                           std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return sample_schedule(n_points, shape, rate, rng);
}

// Right-continuous evaluation of a trajectory at the given times: each
// observation is the state after the last event at or before it. Times
// must be strictly increasing and lie within [0, horizon]; an extinct
// trajectory is absorbed, so any later time is still answerable.
inline ObservationSeries observe(const Trajectory& traj, const std::vector<double>& times) {
    if (traj.event_times.empty()) throw InvalidParams("trajectory is empty");
    std::vector<double> counts(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double T = times[i];
        if (!(T >= 0.0))
            throw InvalidParams("observation times must be nonnegative");
        if (T > traj.horizon * (1.0 + 1e-12) && !traj.extinct())
            throw ScheduleBeyondTrajectory("observation time exceeds simulated horizon");
        auto it = std::upper_bound(traj.event_times.begin(), traj.event_times.end(), T);
        const std::size_t idx = static_cast<std::size_t>(it - traj.event_times.begin()) - 1;
        counts[i] = static_cast<double>(traj.sizes[idx]);
    }
    return ObservationSeries(times, counts);
}

}  // namespace lbdp

#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "seqtest/model.hpp"
#include "seqtest/rng.hpp"

namespace seqtest {

/// Interval in likelihood-ratio space. The upper bound may be the +inf
/// sentinel for pure lower-exit experiments; upper_closed selects (A,B]
/// over (A,B).
struct Interval {
    double lower;
    double upper;
    bool upper_closed = false;

    Interval(double a, double b, bool closed = false)
        : lower(a), upper(b), upper_closed(closed) {
        if (!(a > 0.0) || !(b > a))
            throw std::invalid_argument("Interval: requires 0 < lower < upper");
    }

    bool contains(double l) const {
        if (l <= lower) return false;
        return upper_closed ? l <= upper : l < upper;
    }
};

enum class ExitSide { Lower, Upper };

/// One simulated path of L under P0: first exit from the interval, with the
/// path integral of L accumulated in closed form segment by segment.
struct ExitRecord {
    double tau = 0.0;
    ExitSide side = ExitSide::Lower;
    double l_exit = 0.0;
    double int_l_dt = 0.0;
    std::int64_t n_jumps = 0;
};

inline constexpr std::int64_t kDefaultJumpCap = 10'000'000;

/// Event-driven first exit of L from the interval, starting at l0. Between
/// jumps L decays as l*exp(-(lambda1-lambda0)*dt); at each P0-jump (rate
/// lambda0) it is multiplied by lambda1/lambda0. The lower hit time is
/// solved analytically, so a lower exit lands on interval.lower exactly.
/// Segment integrals use (l_start - l_end)/(lambda1-lambda0).
///
/// If events_out is non-null, the absolute jump times consumed by the path
/// (including the jump that triggers an upper exit) are appended to it.
template <class Rng>
ExitRecord simulate_exit(const Model& m, const Interval& iv, double l0, Rng& rng,
                         std::int64_t max_jumps = kDefaultJumpCap,
                         std::vector<double>* events_out = nullptr) {
    if (!iv.contains(l0))
        throw std::invalid_argument("simulate_exit: l0 outside the interval");

    const double mu = m.rate_gap();
    const double lr = m.log_jump_ratio();
    const double inv_ratio = m.lambda0 / m.lambda1;

    double t = 0.0;
    double l = l0;
    double integral = 0.0;
    std::int64_t n = 0;

    for (;;) {
        const double t_low = std::log(l / iv.lower) / mu;
        const double e = rng.next_exponential(m.lambda0);
        if (e >= t_low) {
            integral += (l - iv.lower) / mu;
            return {t + t_low, ExitSide::Lower, iv.lower, integral, n};
        }
        t += e;
        ++n;
        const double l_post = std::exp(static_cast<double>(n) * lr - mu * t);
        integral += (l - l_post * inv_ratio) / mu;
        l = l_post;
        if (events_out) events_out->push_back(t);
        if (!(iv.upper_closed ? l <= iv.upper : l < iv.upper))
            return {t, ExitSide::Upper, l, integral, n};
        if (n >= max_jumps)
            throw std::runtime_error("simulate_exit: jump cap reached without exit");
    }
}

/// Fixed-horizon variant: value of L at time T under P0, no stopping.
template <class Rng>
double simulate_l_at(const Model& m, double horizon, Rng& rng) {
    double t = 0.0;
    std::int64_t n = 0;
    for (;;) {
        t += rng.next_exponential(m.lambda0);
        if (t > horizon) break;
        ++n;
    }
    return likelihood(m, horizon, n);
}

struct ExitFunctionals {
    double p_lower = 0.0;
    double se_p_lower = 0.0;
    double mean_int_l_minus_1 = 0.0;  // E0 of int_0^tau (L_t - 1) dt
    double se_int_l_minus_1 = 0.0;
    double mean_tau = 0.0;
    double se_tau = 0.0;
    std::int64_t n_paths = 0;
};

/// Simulates n_paths exits with per-path substreams indexed 0..n_paths-1.
/// Deterministic function of (seed, n_paths, inputs) regardless of the
/// number of worker threads.
std::vector<ExitRecord> collect_exits(const Model& m, const Interval& iv, double l0,
                                      std::int64_t n_paths, std::uint64_t seed,
                                      int threads = 0);

/// Sample means and standard errors of the exit functionals; reduction runs
/// in path-index order over the collected records.
ExitFunctionals estimate_exit_functionals(const Model& m, const Interval& iv,
                                          double l0, std::int64_t n_paths,
                                          std::uint64_t seed, int threads = 0);

ExitFunctionals reduce_exit_functionals(std::span<const ExitRecord> records);

/// CSV dump, header `path_id,tau,side,l_exit,int_l_dt,n_jumps`.
void write_paths_csv(std::ostream& os, std::span<const ExitRecord> records);

}  // namespace seqtest

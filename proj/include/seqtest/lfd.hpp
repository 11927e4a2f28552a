#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "seqtest/boundary.hpp"
#include "seqtest/fode.hpp"
#include "seqtest/model.hpp"
#include "seqtest/pathsim.hpp"

namespace seqtest {

/// Monte Carlo estimate of the criticality function
///   h(phi0) = (a*alpha*/phi0 + b) P0(lower exit) - b + E0 int (L_t - 1) dt
/// over exits of L from (alpha*/phi0, beta*/phi0) started at 1.
struct HEstimate {
    double phi0 = 0.0;
    double h = 0.0;
    double se = 0.0;
    double p_lower = 0.0;
    double mean_int = 0.0;  // E0 int (L_t - 1) dt
    std::int64_t n_paths = 0;
};

struct GammaEstimate {
    double value = 0.0;
    double se = 0.0;
};

struct JbarEstimate {
    double value = 0.0;
    double se = 0.0;
};

struct SaddlePoint {
    double psi = 0.0;
    double jbar = 0.0;
    double se = 0.0;
};

struct LfdConfig {
    std::uint64_t seed = 20240901;
    std::int64_t n_paths = 1'000'000;       // gamma* and bisection h evaluations
    std::int64_t saddle_paths = 100'000;    // per saddle-sweep point
    double phi_tol = 1e-3;                  // bisection bracket width target
    double bracket_inset = 1e-3;            // relative inset from alpha*, beta*
    int prescan_points = 32;
    int saddle_points = 50;
    DpConfig dp;
    FodeConfig fode;
    int threads = 0;
};

struct LfdReport {
    Regime regime = Regime::Trivial;
    std::optional<Boundaries> boundaries;
    double gamma_fode = 0.0;
    GammaEstimate gamma_mc;
    bool existence_flagged = false;  // gamma* >= 0: sufficient condition fails
    double phi0 = 0.0;
    HEstimate h_at_phi0;             // fresh-seed confirmation at the root
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    std::vector<HEstimate> prescan;      // coarse scan, records observed sign changes
    std::vector<HEstimate> evaluations;  // bisection sequence (common random numbers)
    std::vector<SaddlePoint> saddle_curve;
};

HEstimate estimate_h(const Model& m, const Costs& c, const Boundaries& bd,
                     double phi0, std::int64_t n_paths, std::uint64_t seed,
                     int threads = 0);

/// gamma* via the Dynkin identity on the interval (ratio, 1] from l0 = 1:
///   (a*ratio + b) P0(lower exit) - b + E0 int (L_t - 1) dt.
GammaEstimate gamma_mc(const Model& m, const Costs& c, double ratio,
                       std::int64_t n_paths, std::uint64_t seed, int threads = 0);

/// J-bar(psi; tau*(phi0)) evaluated per path in closed form from the exit
/// functionals: (tau + psi*int_l_dt + min(b, a*psi*l_exit)) / (1+psi).
JbarEstimate estimate_jbar(const Model& m, const Costs& c, const Boundaries& bd,
                           double phi0, double psi, std::int64_t n_paths,
                           std::uint64_t seed, int threads = 0);

/// Same, reusing already-simulated exit records (common random numbers
/// across psi).
JbarEstimate estimate_jbar_from(std::span<const ExitRecord> records, const Costs& c,
                                double psi);

/// J-bar(psi; 0) = min(b, a*psi)/(1+psi), the trivial-regime value.
inline double jbar_at_zero(const Costs& c, double psi) {
    return std::min(c.b, c.a * psi) / (1.0 + psi);
}

/// Full pipeline: classify, solve boundaries, compute gamma* both ways,
/// bisect h to the least favorable prior odds with common random numbers,
/// then sweep J-bar over a psi grid to verify the saddle point.
LfdReport find_lfd(const Model& m, const Costs& c, const LfdConfig& cfg = {});

/// CSV dump of the saddle sweep, header `psi,jbar,se`.
void write_saddle_csv(std::ostream& os, std::span<const SaddlePoint> curve);

}  // namespace seqtest

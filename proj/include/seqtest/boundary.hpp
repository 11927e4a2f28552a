#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "seqtest/model.hpp"

namespace seqtest {

/// Optimal stopping thresholds in posterior-odds space,
/// 0 < alpha_star < b/a < beta_star in the non-trivial regime.
struct Boundaries {
    double alpha_star;
    double beta_star;

    double ratio() const { return alpha_star / beta_star; }
};

/// Knobs for the value-iteration solver. Zeros mean "derive the default
/// from the model and costs".
struct DpConfig {
    std::int64_t grid_points = 4001;
    double phi_min = 0.0;   // default: (b/a)/200
    double phi_max = 0.0;   // default: (b/a)*(lambda1/lambda0)*10
    double dt = 0.0;        // default: 1e-4/(lambda1-lambda0)
    double tol = 1e-9;      // sup-norm change per sweep
    std::int64_t max_iters = 4'000'000;
    double contact_tol = 1e-6;
};

/// Converged value function V(phi) = inf_tau E0[int (1+Psi)dt + (a Psi)^b]
/// on a log-uniform grid, with the stopping gain g(phi) = min(a phi, b).
struct ValueGrid {
    std::vector<double> phis;    // ascending, log-uniform
    std::vector<double> values;  // V(phi)
    std::vector<double> gains;   // g(phi)
    double cost_a = 0.0;
    double cost_b = 0.0;
    double threshold = 0.0;      // b/a
    std::int64_t iterations = 0;
    double final_delta = 0.0;
    bool monotone_sweeps = true;

    double value_at(double phi) const;  // linear interpolation in log phi, g outside
    double gain_at(double phi) const;
};

/// Value iteration from V0 = g with the explicit one-step operator
///   V(phi) <- min{ g(phi), (1+phi) dt + (1 - lambda0 dt) V(phi e^{-mu dt})
///                                      + lambda0 dt V(phi lambda1/lambda0) }.
/// Queries outside the grid use g. Sweeps are monotone nonincreasing.
ValueGrid solve_value(const Model& m, const Costs& c, const DpConfig& cfg = {});

/// Contact-set extraction: the continuation region is where g - V exceeds
/// contact_tol; endpoints are refined by linear interpolation of g - V.
Boundaries extract_boundaries(const ValueGrid& grid, double contact_tol = 1e-6);

/// CSV dump, header `phi,value,gain`.
void write_value_grid_csv(std::ostream& os, const ValueGrid& grid);

}  // namespace seqtest

#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "seqtest/model.hpp"

namespace seqtest {

struct FodeConfig {
    std::int64_t steps = 100'000;  // total RK4 steps, uniform in log phi
};

/// Gridded solutions of the two advanced-argument ODEs on [ratio, 1],
///   (lambda0-lambda1) phi f0' + lambda0 [f0(lambda1 phi/lambda0) - f0(phi)] = 0
///   (lambda0-lambda1) phi f1' + lambda0 [f1(...) - f1(phi)] + (phi - 1) = 0
/// with f0(1) = 1, f1(1) = 0 and tail values f0 = 0, f1 = -b strictly above 1.
/// gamma_star = (a*ratio - f1(ratio)) / f0(ratio).
struct FodeSolution {
    std::vector<double> phi;  // descending from 1 to ratio
    std::vector<double> f0;
    std::vector<double> f1;
    double ratio = 0.0;
    double gamma_star = 0.0;

    /// Linear interpolation in log phi; phi must lie in [ratio, 1].
    double f0_at(double phi_query) const;
    double f1_at(double phi_query) const;
};

/// Backward integration from phi = 1 down to phi = ratio. The advanced
/// argument lambda1*phi/lambda0 reads tail values above 1 and the
/// already-integrated grid below; a grid point is placed exactly at the
/// kink phi = lambda0/lambda1.
FodeSolution solve_fode(const Model& m, const Costs& c, double ratio,
                        const FodeConfig& cfg = {});

double gamma_from_fode(const FodeSolution& sol, const Costs& c, double ratio);

/// CSV dump, header `phi,f0,f1`.
void write_fode_csv(std::ostream& os, const FodeSolution& sol);

}  // namespace seqtest

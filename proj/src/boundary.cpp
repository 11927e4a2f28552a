#include "seqtest/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace seqtest {

namespace {

double gain(double a, double b, double phi) { return std::min(a * phi, b); }

}  // namespace

double ValueGrid::gain_at(double phi) const { return gain(cost_a, cost_b, phi); }

double ValueGrid::value_at(double phi) const {
    if (phi <= phis.front() || phi >= phis.back()) return gain_at(phi);
    const double x0 = std::log(phis.front());
    const double h = std::log(phis[1]) - x0;
    const double x = (std::log(phi) - x0) / h;
    const auto i = static_cast<std::size_t>(x);
    const double f = x - static_cast<double>(i);
    return values[i] * (1.0 - f) + values[i + 1] * f;
}

ValueGrid solve_value(const Model& m, const Costs& c, const DpConfig& cfg) {
    if (cfg.grid_points < 2)
        throw std::invalid_argument("solve_value: grid_points >= 2 required");
    if (cfg.tol <= 0.0) throw std::invalid_argument("solve_value: tol > 0 required");

    const double mu = m.rate_gap();
    const double thr = c.threshold();
    const double dt = cfg.dt > 0.0 ? cfg.dt : 1e-4 / mu;
    const double phi_min = cfg.phi_min > 0.0 ? cfg.phi_min : thr / 200.0;
    const double phi_max = cfg.phi_max > 0.0 ? cfg.phi_max : thr * m.jump_ratio() * 10.0;
    if (!(phi_min < phi_max))
        throw std::invalid_argument("solve_value: phi_min < phi_max required");
    if (m.lambda0 * dt >= 1.0)
        throw std::invalid_argument(
            "solve_value: lambda0*dt >= 1 gives a negative probability weight");

    const std::int64_t n = cfg.grid_points;
    const double x_min = std::log(phi_min);
    const double h = (std::log(phi_max) - x_min) / static_cast<double>(n - 1);

    ValueGrid grid;
    grid.cost_a = c.a;
    grid.cost_b = c.b;
    grid.threshold = thr;
    grid.phis.resize(static_cast<std::size_t>(n));
    grid.gains.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double phi = std::exp(x_min + h * static_cast<double>(i));
        grid.phis[static_cast<std::size_t>(i)] = phi;
        grid.gains[static_cast<std::size_t>(i)] = gain(c.a, c.b, phi);
    }

    // Log-uniform grid: the decay e^{-mu dt} and the jump factor
    // lambda1/lambda0 are constant index shifts with fixed interpolation
    // weights.
    const double d_shift = mu * dt / h;
    const auto kd = static_cast<std::int64_t>(std::ceil(d_shift));
    const double fd = static_cast<double>(kd) - d_shift;  // weight on V[i-kd+1]
    const double u_shift = m.log_jump_ratio() / h;
    const auto ku = static_cast<std::int64_t>(std::floor(u_shift));
    const double fu = u_shift - static_cast<double>(ku);  // weight on V[i+ku+1]

    const double w_stay = 1.0 - m.lambda0 * dt;
    const double w_jump = m.lambda0 * dt;
    const double decay = std::exp(-mu * dt);
    const double ratio = m.jump_ratio();

    std::vector<double> run_cost(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        run_cost[static_cast<std::size_t>(i)] =
            (1.0 + grid.phis[static_cast<std::size_t>(i)]) * dt;

    // Out-of-grid targets evaluate the gain at the exact shifted phi.
    std::vector<double> decay_tail(static_cast<std::size_t>(std::min(kd, n)));
    for (std::size_t i = 0; i < decay_tail.size(); ++i)
        decay_tail[i] = gain(c.a, c.b, grid.phis[i] * decay);
    std::vector<double> jump_tail(static_cast<std::size_t>(n));
    for (std::int64_t i = std::max<std::int64_t>(0, n - 1 - ku); i < n; ++i)
        jump_tail[static_cast<std::size_t>(i)] =
            gain(c.a, c.b, grid.phis[static_cast<std::size_t>(i)] * ratio);

    std::vector<double> v = grid.gains;
    std::vector<double> v_new(static_cast<std::size_t>(n));

    const std::int64_t lo = std::min(kd, n);
    const std::int64_t hi = std::max<std::int64_t>(lo, n - 1 - ku);

    std::int64_t iter = 0;
    double delta = 0.0;
    bool monotone = true;
    for (;;) {
        ++iter;
        delta = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            double down;
            if (i < lo) {
                down = decay_tail[si];
            } else {
                const auto j = static_cast<std::size_t>(i - kd);
                down = v[j] * (1.0 - fd) + v[j + 1] * fd;
            }
            double up;
            if (i >= hi) {
                up = jump_tail[si];
            } else {
                const auto j = static_cast<std::size_t>(i + ku);
                up = v[j] * (1.0 - fu) + v[j + 1] * fu;
            }
            const double cont = run_cost[si] + w_stay * down + w_jump * up;
            const double val = std::min(grid.gains[si], cont);
            if (val > v[si] + 1e-14) monotone = false;
            const double change = std::abs(val - v[si]);
            if (change > delta) delta = change;
            v_new[si] = val;
        }
        v.swap(v_new);
        if (delta < cfg.tol) break;
        if (iter >= cfg.max_iters)
            throw std::runtime_error(
                "solve_value: max_iters reached, last sup-norm delta " +
                std::to_string(delta));
    }

    grid.values = std::move(v);
    grid.iterations = iter;
    grid.final_delta = delta;
    grid.monotone_sweeps = monotone;
    return grid;
}

Boundaries extract_boundaries(const ValueGrid& grid, double contact_tol) {
    const std::size_t n = grid.phis.size();
    const double thr = grid.threshold;

    std::size_t pivot = 0;
    while (pivot + 1 < n && grid.phis[pivot + 1] < thr) ++pivot;

    const auto slack = [&](std::size_t i) { return grid.gains[i] - grid.values[i]; };

    const auto refine = [&](std::size_t contact, std::size_t inner) {
        const double xi = std::log(grid.phis[contact]);
        const double xj = std::log(grid.phis[inner]);
        const double di = slack(contact);
        const double dj = slack(inner);
        if (dj <= di) return grid.phis[contact];
        return std::exp(xi - di * (xj - xi) / (dj - di));
    };

    if (slack(pivot) <= contact_tol || pivot + 1 >= n || slack(pivot + 1) <= contact_tol)
        throw std::runtime_error(
            "extract_boundaries: degenerate continuation region "
            "(trivial regime or grid too coarse)");

    // Lower boundary: walk down from the threshold to the first contact point.
    std::size_t i = pivot;
    while (slack(i) > contact_tol) {
        if (i == 0)
            throw std::runtime_error(
                "extract_boundaries: no lower contact found on the grid");
        --i;
    }
    const double alpha = refine(i, i + 1);

    // Upper boundary, symmetric.
    std::size_t j = pivot + 1;
    while (slack(j) > contact_tol) {
        if (j + 1 == n)
            throw std::runtime_error(
                "extract_boundaries: no upper contact found on the grid");
        ++j;
    }
    const double beta = refine(j, j - 1);

    if (!(0.0 < alpha && alpha < thr && thr < beta))
        throw std::runtime_error("extract_boundaries: boundary ordering violated");
    return {alpha, beta};
}

void write_value_grid_csv(std::ostream& os, const ValueGrid& grid) {
    os << "phi,value,gain\n";
    char buf[160];
    for (std::size_t i = 0; i < grid.phis.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", grid.phis[i],
                      grid.values[i], grid.gains[i]);
        os << buf;
    }
}

}  // namespace seqtest

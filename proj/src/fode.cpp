#include "seqtest/fode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace seqtest {

namespace {

// Piecewise log-uniform grid in u = log phi, descending from 0. Segment A
// covers [log kink, 0] where the advanced argument is above 1 (tail
// values); segment B covers [log ratio, log kink] where it reads back into
// the grid.
struct Integrator {
    double lambda0, mu, b;
    double log_rho;  // log(lambda1/lambda0)

    std::vector<double> us;  // descending, us[0] = 0
    std::vector<double> f0s;
    std::vector<double> f1s;
    std::size_t n_a = 0;  // points 0..n_a are segment A
    double h_a = 0.0, h_b = 0.0;

    double lookup(const std::vector<double>& ys, double u) const {
        double t;
        std::size_t base;
        if (u >= us[n_a]) {
            t = -u / h_a;
            base = 0;
            if (t < 0.0) t = 0.0;
            if (t > static_cast<double>(n_a)) t = static_cast<double>(n_a);
        } else {
            t = (us[n_a] - u) / h_b;
            base = n_a;
            const double cap = static_cast<double>(ys.size() - 1 - n_a);
            if (t < 0.0) t = 0.0;
            if (t > cap) t = cap;
        }
        auto i = static_cast<std::size_t>(t);
        if (base + i + 1 >= ys.size()) i = ys.size() - 2 - base;
        const double f = t - static_cast<double>(i);
        return ys[base + i] * (1.0 - f) + ys[base + i + 1] * f;
    }

    // Derivatives in u = log phi. Segment A: constant advanced tails.
    double d0_tail(double y0) const { return -lambda0 * y0 / mu; }
    double d1_tail(double u, double y1) const {
        return (lambda0 * (-b - y1) + (std::exp(u) - 1.0)) / mu;
    }
    // Segment B: advanced values interpolated from the grid built so far.
    double d0_grid(double u, double y0) const {
        return lambda0 * (lookup(f0s, u + log_rho) - y0) / mu;
    }
    double d1_grid(double u, double y1) const {
        return (lambda0 * (lookup(f1s, u + log_rho) - y1) + (std::exp(u) - 1.0)) / mu;
    }

    template <class D0, class D1>
    void step(double u, double s, D0&& d0, D1&& d1) {
        const double y0 = f0s.back();
        const double y1 = f1s.back();
        const double k1_0 = d0(u, y0);
        const double k1_1 = d1(u, y1);
        const double k2_0 = d0(u + s / 2, y0 + s / 2 * k1_0);
        const double k2_1 = d1(u + s / 2, y1 + s / 2 * k1_1);
        const double k3_0 = d0(u + s / 2, y0 + s / 2 * k2_0);
        const double k3_1 = d1(u + s / 2, y1 + s / 2 * k2_1);
        const double k4_0 = d0(u + s, y0 + s * k3_0);
        const double k4_1 = d1(u + s, y1 + s * k3_1);
        us.push_back(u + s);
        f0s.push_back(y0 + s / 6 * (k1_0 + 2 * k2_0 + 2 * k3_0 + k4_0));
        f1s.push_back(y1 + s / 6 * (k1_1 + 2 * k2_1 + 2 * k3_1 + k4_1));
    }
};

}  // namespace

FodeSolution solve_fode(const Model& m, const Costs& c, double ratio,
                        const FodeConfig& cfg) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("solve_fode: ratio must lie in (0, 1)");
    if (cfg.steps < 4) throw std::invalid_argument("solve_fode: steps >= 4 required");

    Integrator in;
    in.lambda0 = m.lambda0;
    in.mu = m.rate_gap();
    in.b = c.b;
    in.log_rho = m.log_jump_ratio();

    const double u_end = std::log(ratio);
    const double u_kink = -in.log_rho;  // log(lambda0/lambda1)
    const bool two_segments = u_end < u_kink;

    std::int64_t n_a, n_b;
    double u_mid;
    if (two_segments) {
        const double span_a = -u_kink;
        const double span_b = u_kink - u_end;
        n_a = std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::llround(
                static_cast<double>(cfg.steps) * span_a / (span_a + span_b))),
            2, cfg.steps - 2);
        n_b = cfg.steps - n_a;
        u_mid = u_kink;
    } else {
        n_a = cfg.steps;
        n_b = 0;
        u_mid = u_end;
    }

    in.h_a = -u_mid / static_cast<double>(n_a);
    in.us.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    in.f0s.reserve(in.us.capacity());
    in.f1s.reserve(in.us.capacity());
    in.us.push_back(0.0);
    in.f0s.push_back(1.0);
    in.f1s.push_back(0.0);

    for (std::int64_t i = 0; i < n_a; ++i) {
        const double u = -in.h_a * static_cast<double>(i);
        in.step(u, -in.h_a,
                [&](double, double y) { return in.d0_tail(y); },
                [&](double uu, double y) { return in.d1_tail(uu, y); });
    }
    in.us.back() = u_mid;  // pin the kink point exactly
    in.n_a = in.us.size() - 1;

    if (two_segments) {
        in.h_b = (u_mid - u_end) / static_cast<double>(n_b);
        for (std::int64_t i = 0; i < n_b; ++i) {
            const double u = u_mid - in.h_b * static_cast<double>(i);
            in.step(u, -in.h_b,
                    [&](double uu, double y) { return in.d0_grid(uu, y); },
                    [&](double uu, double y) { return in.d1_grid(uu, y); });
        }
        in.us.back() = u_end;
    }

    FodeSolution sol;
    sol.ratio = ratio;
    sol.phi.resize(in.us.size());
    for (std::size_t i = 0; i < in.us.size(); ++i) sol.phi[i] = std::exp(in.us[i]);
    sol.phi.front() = 1.0;
    sol.phi.back() = ratio;
    sol.f0 = std::move(in.f0s);
    sol.f1 = std::move(in.f1s);

    // The solutions are strictly decreasing in phi; values must strictly
    // increase along the descending grid.
    for (std::size_t i = 1; i < sol.f0.size(); ++i) {
        if (!(sol.f0[i] > sol.f0[i - 1]) || !(sol.f1[i] > sol.f1[i - 1]))
            throw std::runtime_error(
                "solve_fode: non-monotone solution detected (step size too large)");
    }

    sol.gamma_star = gamma_from_fode(sol, c, ratio);
    return sol;
}

double gamma_from_fode(const FodeSolution& sol, const Costs& c, double ratio) {
    const double f0_end = sol.f0.back();
    const double f1_end = sol.f1.back();
    if (f0_end < 1.0)
        throw std::runtime_error(
            "gamma_from_fode: f0(ratio) < 1 violates the monotone bound");
    return (c.a * ratio - f1_end) / f0_end;
}

namespace {
double interp_log(const std::vector<double>& phis, const std::vector<double>& ys,
                  double phi_query) {
    if (!(phi_query >= phis.back() && phi_query <= phis.front()))
        throw std::invalid_argument("FodeSolution: query outside [ratio, 1]");
    // Descending grid; binary search for the bracketing pair.
    auto it = std::lower_bound(phis.begin(), phis.end(), phi_query,
                               [](double a, double b) { return a > b; });
    if (it == phis.begin()) return ys.front();
    const auto j = static_cast<std::size_t>(it - phis.begin());
    const std::size_t i = j - 1;
    if (j == phis.size()) return ys.back();
    const double x0 = std::log(phis[i]);
    const double x1 = std::log(phis[j]);
    const double f = (std::log(phi_query) - x0) / (x1 - x0);
    return ys[i] * (1.0 - f) + ys[j] * f;
}
}  // namespace

double FodeSolution::f0_at(double phi_query) const {
    return interp_log(phi, f0, phi_query);
}

double FodeSolution::f1_at(double phi_query) const {
    return interp_log(phi, f1, phi_query);
}

void write_fode_csv(std::ostream& os, const FodeSolution& sol) {
    os << "phi,f0,f1\n";
    char buf[160];
    for (std::size_t i = 0; i < sol.phi.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", sol.phi[i], sol.f0[i],
                      sol.f1[i]);
        os << buf;
    }
}

}  // namespace seqtest

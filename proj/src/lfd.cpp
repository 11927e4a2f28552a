#include "seqtest/lfd.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace seqtest {

namespace {

// Mean and standard error of the per-path functional
// y = weight*I(lower exit) - b + (int_l_dt - tau).
struct Reduced {
    double p_lower;
    double mean_int;
    double mean_y;
    double se_y;
};

Reduced reduce_h_functional(std::span<const ExitRecord> records, double weight,
                            double b) {
    double sum_low = 0.0, sum_int = 0.0, sum_y = 0.0, sum_y2 = 0.0;
    for (const ExitRecord& r : records) {
        const double low = r.side == ExitSide::Lower ? 1.0 : 0.0;
        const double g = r.int_l_dt - r.tau;
        const double y = weight * low - b + g;
        sum_low += low;
        sum_int += g;
        sum_y += y;
        sum_y2 += y * y;
    }
    const double n = static_cast<double>(records.size());
    Reduced out;
    out.p_lower = sum_low / n;
    out.mean_int = sum_int / n;
    out.mean_y = sum_y / n;
    const double var = n > 1.0 ? (sum_y2 - sum_y * sum_y / n) / (n - 1.0) : 0.0;
    out.se_y = std::sqrt(std::max(var, 0.0) / n);
    return out;
}

}  // namespace

HEstimate estimate_h(const Model& m, const Costs& c, const Boundaries& bd,
                     double phi0, std::int64_t n_paths, std::uint64_t seed,
                     int threads) {
    if (!(phi0 > bd.alpha_star && phi0 < bd.beta_star))
        throw std::invalid_argument(
            "estimate_h: phi0 must lie strictly inside (alpha*, beta*)");
    const Interval iv(bd.alpha_star / phi0, bd.beta_star / phi0, /*closed=*/false);
    const auto records = collect_exits(m, iv, 1.0, n_paths, seed, threads);
    const double weight = c.a * bd.alpha_star / phi0 + c.b;
    const Reduced red = reduce_h_functional(records, weight, c.b);

    HEstimate est;
    est.phi0 = phi0;
    est.p_lower = red.p_lower;
    est.mean_int = red.mean_int;
    est.h = weight * red.p_lower - c.b + red.mean_int;
    est.se = red.se_y;
    est.n_paths = n_paths;
    return est;
}

GammaEstimate gamma_mc(const Model& m, const Costs& c, double ratio,
                       std::int64_t n_paths, std::uint64_t seed, int threads) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("gamma_mc: ratio must lie in (0, 1)");
    const Interval iv(ratio, 1.0, /*closed=*/true);
    const auto records = collect_exits(m, iv, 1.0, n_paths, seed, threads);
    const double weight = c.a * ratio + c.b;
    const Reduced red = reduce_h_functional(records, weight, c.b);
    return {weight * red.p_lower - c.b + red.mean_int, red.se_y};
}

JbarEstimate estimate_jbar_from(std::span<const ExitRecord> records, const Costs& c,
                                double psi) {
    if (!(psi > 0.0)) throw std::invalid_argument("estimate_jbar: psi > 0 required");
    double sum = 0.0, sum2 = 0.0;
    for (const ExitRecord& r : records) {
        const double v =
            (r.tau + psi * r.int_l_dt + std::min(c.b, c.a * psi * r.l_exit)) /
            (1.0 + psi);
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(records.size());
    const double mean = sum / n;
    const double var = n > 1.0 ? (sum2 - sum * sum / n) / (n - 1.0) : 0.0;
    return {mean, std::sqrt(std::max(var, 0.0) / n)};
}

JbarEstimate estimate_jbar(const Model& m, const Costs& c, const Boundaries& bd,
                           double phi0, double psi, std::int64_t n_paths,
                           std::uint64_t seed, int threads) {
    if (!(phi0 > bd.alpha_star && phi0 < bd.beta_star))
        throw std::invalid_argument(
            "estimate_jbar: phi0 must lie strictly inside (alpha*, beta*)");
    const Interval iv(bd.alpha_star / phi0, bd.beta_star / phi0, /*closed=*/false);
    const auto records = collect_exits(m, iv, 1.0, n_paths, seed, threads);
    return estimate_jbar_from(records, c, psi);
}

LfdReport find_lfd(const Model& m, const Costs& c, const LfdConfig& cfg) {
    LfdReport report;
    report.regime = classify_regime(m, c);

    if (report.regime == Regime::Trivial) {
        // tau* = 0 for every prior; the least favorable odds are b/a exactly.
        report.phi0 = c.threshold();
        const double lo = c.threshold() / 4.0;
        const double hi = c.threshold() * 4.0;
        const int k = std::max(cfg.saddle_points, 2);
        const double step = std::log(hi / lo) / static_cast<double>(k - 1);
        for (int i = 0; i < k; ++i) {
            const double psi = lo * std::exp(step * static_cast<double>(i));
            report.saddle_curve.push_back({psi, jbar_at_zero(c, psi), 0.0});
        }
        return report;
    }

    const ValueGrid grid = solve_value(m, c, cfg.dp);
    const Boundaries bd = extract_boundaries(grid, cfg.dp.contact_tol);
    report.boundaries = bd;

    const double ratio = bd.ratio();
    const FodeSolution fode = solve_fode(m, c, ratio, cfg.fode);
    report.gamma_fode = fode.gamma_star;
    report.gamma_mc = gamma_mc(m, c, ratio, cfg.n_paths, cfg.seed, cfg.threads);

    if (report.gamma_mc.value > 3.0 * report.gamma_mc.se) {
        // gamma* >= 0: the sufficient condition for existence fails.
        report.existence_flagged = true;
        report.phi0 = std::numeric_limits<double>::quiet_NaN();
        return report;
    }

    const double lo0 = bd.alpha_star * (1.0 + cfg.bracket_inset);
    const double hi0 = bd.beta_star * (1.0 - cfg.bracket_inset);

    // All h evaluations during the search share one seed (common random
    // numbers), so the estimated h is a deterministic function of phi.
    const std::uint64_t crn_seed = cfg.seed + 1;

    if (cfg.prescan_points > 1) {
        const double step =
            std::log(hi0 / lo0) / static_cast<double>(cfg.prescan_points - 1);
        for (int i = 0; i < cfg.prescan_points; ++i) {
            const double phi = lo0 * std::exp(step * static_cast<double>(i));
            report.prescan.push_back(
                estimate_h(m, c, bd, phi, cfg.n_paths, crn_seed, cfg.threads));
        }
    }

    double lo = lo0, hi = hi0;
    HEstimate h_lo = estimate_h(m, c, bd, lo, cfg.n_paths, crn_seed, cfg.threads);
    HEstimate h_hi = estimate_h(m, c, bd, hi, cfg.n_paths, crn_seed, cfg.threads);
    report.evaluations.push_back(h_lo);
    report.evaluations.push_back(h_hi);
    if (!(h_lo.h > 0.0 && h_hi.h < 0.0))
        throw std::runtime_error(
            "find_lfd: no sign change across the bracket despite gamma* < 0 "
            "(h(" + std::to_string(lo) + ") = " + std::to_string(h_lo.h) +
            ", h(" + std::to_string(hi) + ") = " + std::to_string(h_hi.h) +
            "); increase n_paths");

    double root = 0.5 * (lo + hi);
    while (hi - lo >= cfg.phi_tol) {
        const double mid = 0.5 * (lo + hi);
        const HEstimate h_mid =
            estimate_h(m, c, bd, mid, cfg.n_paths, crn_seed, cfg.threads);
        report.evaluations.push_back(h_mid);
        root = mid;
        if (std::abs(h_mid.h) < 2.0 * h_mid.se) break;
        if (h_mid.h > 0.0)
            lo = mid;
        else
            hi = mid;
        root = 0.5 * (lo + hi);
    }
    report.bracket_lo = lo;
    report.bracket_hi = hi;
    report.phi0 = root;

    // Fresh seed for the confirmation estimate at the root.
    report.h_at_phi0 =
        estimate_h(m, c, bd, root, cfg.n_paths, cfg.seed + 2, cfg.threads);

    // Saddle sweep: one set of exit records at phi0, reused across psi.
    const Interval iv(bd.alpha_star / root, bd.beta_star / root, false);
    const auto records =
        collect_exits(m, iv, 1.0, cfg.saddle_paths, cfg.seed + 3, cfg.threads);
    const double psi_lo = bd.alpha_star / 4.0;
    const double psi_hi = bd.beta_star * 4.0;
    const int k = std::max(cfg.saddle_points, 2);
    const double step = std::log(psi_hi / psi_lo) / static_cast<double>(k - 1);
    for (int i = 0; i < k; ++i) {
        const double psi = psi_lo * std::exp(step * static_cast<double>(i));
        const JbarEstimate jb = estimate_jbar_from(records, c, psi);
        report.saddle_curve.push_back({psi, jb.value, jb.se});
    }
    return report;
}

void write_saddle_csv(std::ostream& os, std::span<const SaddlePoint> curve) {
    os << "psi,jbar,se\n";
    char buf[160];
    for (const SaddlePoint& p : curve) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.psi, p.jbar, p.se);
        os << buf;
    }
}

}  // namespace seqtest

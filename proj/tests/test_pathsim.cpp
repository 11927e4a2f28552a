#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "seqtest/fode.hpp"
#include "seqtest/pathsim.hpp"

using namespace seqtest;

namespace {

// Replays a fixed script of exponential variates, for hand-checkable paths.
struct ScriptRng {
    std::vector<double> values;
    std::size_t i = 0;
    double next_exponential(double) { return values.at(i++); }
};

}  // namespace

TEST_CASE("no jump before the analytic deadline gives an exact lower exit") {
    const Model m(1.0, 5.0);
    const Interval iv(0.5, 2.0);
    ScriptRng rng{{10.0}};  // first arrival far beyond the lower-hit time
    const ExitRecord r = simulate_exit(m, iv, 1.0, rng);
    CHECK(r.side == ExitSide::Lower);
    CHECK(r.tau == doctest::Approx(std::log(2.0) / 4.0).epsilon(1e-15));
    CHECK(r.l_exit == 0.5);  // bit-exact: the hit lands on the bound itself
    CHECK(r.int_l_dt == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(r.n_jumps == 0);
}

TEST_CASE("an early jump pushes L through the upper bound") {
    const Model m(1.0, 5.0);
    const Interval iv(0.5, 2.0);
    ScriptRng rng{{0.05}};
    const ExitRecord r = simulate_exit(m, iv, 1.0, rng);
    CHECK(r.side == ExitSide::Upper);
    CHECK(r.tau == 0.05);
    CHECK(r.l_exit == doctest::Approx(5.0 * std::exp(-0.2)).epsilon(1e-14));
    CHECK(r.int_l_dt ==
          doctest::Approx((1.0 - std::exp(-0.2)) / 4.0).epsilon(1e-14));
    CHECK(r.n_jumps == 1);
}

TEST_CASE("degenerate interval: lower bound near l0 gives tau, integral near 0") {
    const Model m(1.0, 5.0);
    const Interval iv(1.0 - 1e-9, 2.0);
    ScriptRng rng{{10.0}};
    const ExitRecord r = simulate_exit(m, iv, 1.0, rng);
    CHECK(r.side == ExitSide::Lower);
    CHECK(r.tau < 1e-9);
    CHECK(r.int_l_dt < 1e-9);
}

TEST_CASE("l0 outside the interval is rejected") {
    const Model m(1.0, 5.0);
    ScriptRng rng{{1.0}};
    CHECK_THROWS_AS(simulate_exit(m, Interval(0.5, 2.0), 0.4, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_exit(m, Interval(0.5, 2.0), 2.0, rng),
                    std::invalid_argument);
    // Closed upper endpoint admits l0 = upper.
    ScriptRng rng2{{10.0}};
    CHECK_NOTHROW(simulate_exit(m, Interval(0.5, 2.0, true), 2.0, rng2));
    CHECK_THROWS_AS(Interval(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Interval(2.0, 1.0), std::invalid_argument);
}

TEST_CASE("jump cap raises a diagnostic") {
    const Model m(1.0, 5.0);
    const Interval iv(1e-300, std::numeric_limits<double>::infinity());
    RngStream rng(1, 0);
    CHECK_THROWS_AS(simulate_exit(m, iv, 1.0, rng, /*max_jumps=*/3),
                    std::runtime_error);
}

TEST_CASE("infinite upper bound makes every exit a lower exit") {
    const Model m(1.0, 5.0);
    const Interval iv(0.5, std::numeric_limits<double>::infinity());
    const ExitFunctionals f = estimate_exit_functionals(m, iv, 1.0, 2000, 42);
    CHECK(f.p_lower == 1.0);
    CHECK(f.se_p_lower == 0.0);
    CHECK(f.n_paths == 2000);
}

TEST_CASE("lower exits land on the bound bit-for-bit; upper exits match the "
          "closed form within 10 ulp") {
    const Model m(1.0, 5.0);
    const Interval iv(0.3, 2.5);
    const auto records = collect_exits(m, iv, 1.0, 5000, 20240901);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const ExitRecord& r = records[i];
        CHECK(r.tau >= 0.0);
        CHECK(r.int_l_dt >= 0.0);
        if (r.side == ExitSide::Lower) {
            REQUIRE(r.l_exit == 0.3);  // exact: analytic hit time
        } else {
            REQUIRE(r.l_exit >= 2.5);
            const double recomputed = likelihood(m, r.tau, r.n_jumps);
            const double ulp =
                std::nextafter(recomputed, std::numeric_limits<double>::infinity()) -
                recomputed;
            REQUIRE(std::fabs(r.l_exit - recomputed) <= 10.0 * ulp);
        }
    }
}

TEST_CASE("collect_exits is deterministic in (seed, n_paths) across thread counts") {
    const Model m(1.0, 5.0);
    const Interval iv(0.3, 2.5);
    const auto a = collect_exits(m, iv, 1.0, 20000, 7, /*threads=*/1);
    const auto b = collect_exits(m, iv, 1.0, 20000, 7, /*threads=*/4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].tau == b[i].tau);
        REQUIRE(a[i].side == b[i].side);
        REQUIRE(a[i].l_exit == b[i].l_exit);
        REQUIRE(a[i].int_l_dt == b[i].int_l_dt);
        REQUIRE(a[i].n_jumps == b[i].n_jumps);
    }
}

TEST_CASE("RngStream substreams are reproducible in isolation") {
    RngStream a(123, 45), b(123, 45), c(123, 46);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const double ua = a.next_uniform();
        const double ub = b.next_uniform();
        const double uc = c.next_uniform();
        all_equal = all_equal && ua == ub;
        any_diff = any_diff || ua != uc;
        CHECK(ua > 0.0);
        CHECK(ua <= 1.0);
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("fixed-horizon mean of L_T is 1 within 3 standard errors (martingale)") {
    const Model m(1.0, 5.0);
    const std::int64_t n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        RngStream rng(20240901, static_cast<std::uint64_t>(i));
        const double l = simulate_l_at(m, 1.0, rng);
        sum += l;
        sum2 += l * l;
    }
    const double mean = sum / static_cast<double>(n);
    const double var =
        (sum2 - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1);
    const double se = std::sqrt(var / static_cast<double>(n));
    CHECK(std::fabs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("Dynkin identity p_lower * f0(r) = 1 on (r, 1] without any solver") {
    const Model m(1.0, 5.0);
    for (double r : {0.2, 0.124}) {
        const Interval iv(r, 1.0, /*closed=*/true);
        const ExitFunctionals f = estimate_exit_functionals(m, iv, 1.0, 200000, 11);
        const FodeSolution sol = solve_fode(m, Costs(2.0, 2.0), r);
        const double f0r = sol.f0.back();
        CHECK(std::fabs(f.p_lower * f0r - 1.0) <= 3.0 * f.se_p_lower * f0r);
    }
}

TEST_CASE("paths CSV header and row shape") {
    const Model m(1.0, 5.0);
    const auto records = collect_exits(m, Interval(0.5, 2.0), 1.0, 3, 1);
    std::ostringstream os;
    write_paths_csv(os, records);
    const std::string out = os.str();
    CHECK(out.rfind("path_id,tau,side,l_exit,int_l_dt,n_jumps\n", 0) == 0);
    CHECK(std::count(out.begin(), out.end(), '\n') == 4);
    CHECK(out.find(",lower,") != std::string::npos);
}

TEST_CASE("events_out collects the absolute jump times driving the path") {
    const Model m(1.0, 5.0);
    const Interval iv(0.3, 2.5);
    RngStream rng(99, 5);
    std::vector<double> events;
    const ExitRecord r = simulate_exit(m, iv, 1.0, rng, kDefaultJumpCap, &events);
    CHECK(static_cast<std::int64_t>(events.size()) == r.n_jumps);
    for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i] > events[i - 1]);
    if (r.side == ExitSide::Upper) {
        REQUIRE(!events.empty());
        CHECK(events.back() == r.tau);
    }
}

#include "seqtest/pathsim.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

namespace seqtest {

namespace {
constexpr std::int64_t kChunk = 8192;
}

std::vector<ExitRecord> collect_exits(const Model& m, const Interval& iv, double l0,
                                      std::int64_t n_paths, std::uint64_t seed,
                                      int threads) {
    if (n_paths < 1) throw std::invalid_argument("collect_exits: n_paths >= 1");
    std::vector<ExitRecord> records(static_cast<std::size_t>(n_paths));

    const std::int64_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    if (threads <= 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (threads > n_chunks) threads = static_cast<int>(n_chunks);

    std::atomic<std::int64_t> next_chunk{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            const std::int64_t begin = c * kChunk;
            const std::int64_t end = std::min(begin + kChunk, n_paths);
            for (std::int64_t i = begin; i < end; ++i) {
                RngStream rng(seed, static_cast<std::uint64_t>(i));
                records[static_cast<std::size_t>(i)] = simulate_exit(m, iv, l0, rng);
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return records;
}

ExitFunctionals reduce_exit_functionals(std::span<const ExitRecord> records) {
    const std::int64_t n = static_cast<std::int64_t>(records.size());
    if (n < 1) throw std::invalid_argument("reduce_exit_functionals: empty sample");

    double sum_low = 0.0;
    double sum_int = 0.0, sum_int2 = 0.0;
    double sum_tau = 0.0, sum_tau2 = 0.0;
    for (const ExitRecord& r : records) {
        const double low = r.side == ExitSide::Lower ? 1.0 : 0.0;
        const double y = r.int_l_dt - r.tau;  // int (L_t - 1) dt
        sum_low += low;
        sum_int += y;
        sum_int2 += y * y;
        sum_tau += r.tau;
        sum_tau2 += r.tau * r.tau;
    }
    const double dn = static_cast<double>(n);
    ExitFunctionals f;
    f.n_paths = n;
    f.p_lower = sum_low / dn;
    f.mean_int_l_minus_1 = sum_int / dn;
    f.mean_tau = sum_tau / dn;
    if (n > 1) {
        const double var_low = f.p_lower * (1.0 - f.p_lower) * dn / (dn - 1.0);
        const double var_int = (sum_int2 - dn * f.mean_int_l_minus_1 * f.mean_int_l_minus_1) / (dn - 1.0);
        const double var_tau = (sum_tau2 - dn * f.mean_tau * f.mean_tau) / (dn - 1.0);
        f.se_p_lower = std::sqrt(std::max(var_low, 0.0) / dn);
        f.se_int_l_minus_1 = std::sqrt(std::max(var_int, 0.0) / dn);
        f.se_tau = std::sqrt(std::max(var_tau, 0.0) / dn);
    }
    return f;
}

ExitFunctionals estimate_exit_functionals(const Model& m, const Interval& iv,
                                          double l0, std::int64_t n_paths,
                                          std::uint64_t seed, int threads) {
    const std::vector<ExitRecord> records = collect_exits(m, iv, l0, n_paths, seed, threads);
    return reduce_exit_functionals(records);
}

void write_paths_csv(std::ostream& os, std::span<const ExitRecord> records) {
    os << "path_id,tau,side,l_exit,int_l_dt,n_jumps\n";
    char buf[160];
    std::int64_t id = 0;
    for (const ExitRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%s,%.17g,%.17g,%lld\n",
                      static_cast<long long>(id++), r.tau,
                      r.side == ExitSide::Lower ? "lower" : "upper", r.l_exit,
                      r.int_l_dt, static_cast<long long>(r.n_jumps));
        os << buf;
    }
}

}  // namespace seqtest

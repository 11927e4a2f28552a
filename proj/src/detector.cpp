#include "seqtest/detector.hpp"

#include <cmath>

namespace seqtest {

DetectionOutcome detect(const Model& m, const Boundaries& bd, const PriorOdds& prior,
                        std::span<const double> events, double horizon) {
    const double psi0 = prior.psi;

    if (!(psi0 > bd.alpha_star && psi0 < bd.beta_star)) {
        DetectionOutcome out;
        out.stopped_at = 0.0;
        out.psi_at_stop = psi0;
        out.exit_side = psi0 <= bd.alpha_star ? ExitSide::Lower : ExitSide::Upper;
        out.decision = out.exit_side == ExitSide::Lower ? Decision::AcceptH0
                                                        : Decision::AcceptH1;
        out.stopped_at_start = true;
        return out;
    }

    const double mu = m.rate_gap();
    const double lr = m.log_jump_ratio();
    const double lower_l = bd.alpha_star / psi0;
    const double upper_l = bd.beta_star / psi0;

    double t = 0.0;
    double l = 1.0;
    std::int64_t n = 0;

    for (const double te : events) {
        if (!(te >= 0.0) || (n > 0 && !(te > t)))
            throw std::invalid_argument(
                "detect: event timestamps must be nonnegative and strictly "
                "increasing");
        const double t_hit = t + std::log(l / lower_l) / mu;
        if (t_hit <= te) {
            return {t_hit, Decision::AcceptH0, bd.alpha_star, ExitSide::Lower, n,
                    false};
        }
        ++n;
        t = te;
        l = std::exp(static_cast<double>(n) * lr - mu * t);
        if (l >= upper_l) {
            return {te, Decision::AcceptH1, psi0 * l, ExitSide::Upper, n, false};
        }
    }

    const double t_hit = t + std::log(l / lower_l) / mu;
    if (t_hit <= horizon) {
        return {t_hit, Decision::AcceptH0, bd.alpha_star, ExitSide::Lower, n, false};
    }

    LikelihoodState state;
    state.t = horizon;
    state.n = n;
    state.l = std::exp(static_cast<double>(n) * lr - mu * horizon);
    const Posterior post = posterior(prior, state.l);
    state.psi_t = post.psi_t;
    state.pi_t = post.pi_t;
    throw UndecidedError(horizon, state);
}

}  // namespace seqtest

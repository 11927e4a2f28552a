#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace seqtest {

/// Two-point hypothesis on the intensity of an observed Poisson process:
/// H0: rate = lambda0, H1: rate = lambda1, with lambda1 > lambda0 > 0.
struct Model {
    double lambda0;
    double lambda1;

    Model(double l0, double l1) : lambda0(l0), lambda1(l1) {
        if (!(l0 > 0.0) || !(l1 > l0))
            throw std::invalid_argument("Model: requires lambda1 > lambda0 > 0");
    }

    double rate_gap() const { return lambda1 - lambda0; }
    double jump_ratio() const { return lambda1 / lambda0; }
    double log_jump_ratio() const { return std::log(lambda1 / lambda0); }
};

/// Costs of the two kinds of wrong terminal decision.
struct Costs {
    double a;  // cost of accepting H0 when H1 is true
    double b;  // cost of accepting H1 when H0 is true

    Costs(double a_, double b_) : a(a_), b(b_) {
        if (!(a_ > 0.0) || !(b_ > 0.0))
            throw std::invalid_argument("Costs: requires a > 0 and b > 0");
    }

    /// Posterior-odds decision threshold b/a.
    double threshold() const { return b / a; }
};

/// Prior odds psi = pi / (1 - pi) for the prior probability pi of H1.
struct PriorOdds {
    double psi;

    explicit PriorOdds(double psi_) : psi(psi_) {
        if (!(psi_ > 0.0)) throw std::invalid_argument("PriorOdds: requires psi > 0");
    }

    double pi() const { return psi / (1.0 + psi); }
};

enum class Regime { Trivial, NonTrivial };
enum class Decision { AcceptH0, AcceptH1 };

/// Snapshot of the likelihood-ratio / posterior state at elapsed time t
/// after n observed events.
struct LikelihoodState {
    double t = 0.0;
    std::int64_t n = 0;
    double l = 1.0;      // likelihood ratio L_t
    double psi_t = 0.0;  // posterior odds psi * L_t
    double pi_t = 0.0;   // posterior probability
};

/// Immediate stopping is optimal for every prior when the intensity gap is
/// no larger than 1/a + 1/b.
inline Regime classify_regime(const Model& m, const Costs& c) {
    return m.rate_gap() <= 1.0 / c.a + 1.0 / c.b ? Regime::Trivial
                                                 : Regime::NonTrivial;
}

inline double log_likelihood(const Model& m, double t, std::int64_t n) {
    return static_cast<double>(n) * m.log_jump_ratio() - m.rate_gap() * t;
}

/// Likelihood ratio L_t = exp(n*log(lambda1/lambda0) - (lambda1-lambda0)*t).
inline double likelihood(const Model& m, double t, std::int64_t n) {
    return std::exp(log_likelihood(m, t, n));
}

struct Posterior {
    double psi_t;
    double pi_t;
};

inline Posterior posterior(const PriorOdds& prior, double l) {
    if (!(l > 0.0)) throw std::invalid_argument("posterior: requires l > 0");
    const double psi_t = prior.psi * l;
    return {psi_t, psi_t / (1.0 + psi_t)};
}

/// Terminal decision at the stopping time. Ties at psi = b/a resolve to H0.
inline Decision decide(const Costs& c, double psi_at_stop) {
    if (!(psi_at_stop >= 0.0))
        throw std::invalid_argument("decide: requires psi_at_stop >= 0");
    return psi_at_stop > c.threshold() ? Decision::AcceptH1 : Decision::AcceptH0;
}

}  // namespace seqtest

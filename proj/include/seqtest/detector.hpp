#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "seqtest/boundary.hpp"
#include "seqtest/model.hpp"
#include "seqtest/pathsim.hpp"

namespace seqtest {

struct DetectionOutcome {
    double stopped_at = 0.0;
    Decision decision = Decision::AcceptH0;
    double psi_at_stop = 0.0;
    ExitSide exit_side = ExitSide::Lower;
    std::int64_t events_consumed = 0;
    bool stopped_at_start = false;  // prior already outside (alpha*, beta*)
};

/// Raised when the observation record ends before the posterior odds leave
/// (alpha*, beta*). Carries the live state at the horizon.
class UndecidedError : public std::runtime_error {
public:
    UndecidedError(double at, LikelihoodState state)
        : std::runtime_error("undecided; stream ended at t = " + std::to_string(at)),
          at_(at),
          state_(state) {}

    double at() const { return at_; }
    const LikelihoodState& state() const { return state_; }

private:
    double at_;
    LikelihoodState state_;
};

/// Online sequential test over a strictly increasing stream of event
/// timestamps. Between events the posterior odds decay deterministically;
/// a lower exit is emitted at its exact analytic time. At each event the
/// odds are multiplied by lambda1/lambda0 and an upper exit fires when they
/// reach beta*. `horizon` is the end of the observation record: with no
/// more events and the analytic lower-hit time beyond it, the test is
/// undecided. The default horizon treats the stream as silence forever.
DetectionOutcome detect(const Model& m, const Boundaries& bd, const PriorOdds& prior,
                        std::span<const double> events,
                        double horizon = std::numeric_limits<double>::infinity());

}  // namespace seqtest

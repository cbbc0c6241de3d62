#pragma once

// Native (legacy) AGC: window comparator on the wideband detector, one gain
// step per iteration, frozen at sync.

#include <optional>
#include <stdexcept>

#include "agcml/rxsim.hpp"

namespace agcml {

class AgcFrozenError : public std::logic_error {
public:
    AgcFrozenError() : std::logic_error("agc_step called on a frozen AGC state") {}
};

struct AgcConfig {
    double window_low_dbm = -20.0;   // post-gain target window
    double window_high_dbm = -12.0;
    /// Gain steps available between radio wake-up and sync. Used by the
    /// functional-mode replay only; characterisation runs converge fully.
    int preamble_step_budget = 3;

    void validate(const GainTable& table) const;
};

class AgcState {
public:
    /// Warm-up: the index starts at the (clamped) upper limit.
    static AgcState warm_up(GainIndex upper_limit, const AgcConfig& cfg, const GainTable& table);

    GainIndex current_index() const { return current_; }
    GainIndex upper_limit() const { return upper_; }
    bool frozen() const { return frozen_; }
    int step_count() const { return steps_; }
    double window_low_dbm() const { return low_; }
    double window_high_dbm() const { return high_; }

    AgcState frozen_copy() const;
    AgcState reset(GainIndex upper_limit, const GainTable& table) const;

private:
    friend AgcState agc_step(const AgcState&, double, const GainTable&);
    AgcState() = default;

    GainIndex current_ = 0;
    GainIndex upper_ = 0;
    bool frozen_ = false;
    int steps_ = 0;
    double low_ = -20.0;
    double high_ = -12.0;
};

/// One comparator decision. Throws AgcFrozenError on a frozen state.
AgcState agc_step(const AgcState& state, double measured_wideband_dbm, const GainTable& table);

/// Converges on the preamble-phase wideband power starting from the upper
/// limit, then freezes. With no step budget the loop runs to its fixed point.
GainIndex run_preamble_agc(const PacketScenario& scn, GainIndex upper_limit, const GainTable& table,
                           const LinkBudget& budget, const AgcConfig& cfg,
                           std::optional<int> step_budget = std::nullopt);

}  // namespace agcml

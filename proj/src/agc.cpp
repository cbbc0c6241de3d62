#include "agcml/agc.hpp"

#include <algorithm>

namespace agcml {

void AgcConfig::validate(const GainTable& table) const {
    if (!(window_low_dbm < window_high_dbm)) throw UsageError("agc: window low must be < high");
    // A step wider than the window lets the comparator oscillate forever.
    for (int i = 1; i < table.size(); ++i) {
        if (table.gain_db(i) - table.gain_db(i - 1) >= window_high_dbm - window_low_dbm)
            throw UsageError("agc: gain step not smaller than the target window");
    }
    if (preamble_step_budget < 0) throw UsageError("agc: preamble_step_budget < 0");
}

AgcState AgcState::warm_up(GainIndex upper_limit, const AgcConfig& cfg, const GainTable& table) {
    AgcState s;
    s.upper_ = std::clamp(upper_limit, 0, table.max_index());
    s.current_ = s.upper_;
    s.low_ = cfg.window_low_dbm;
    s.high_ = cfg.window_high_dbm;
    return s;
}

AgcState AgcState::frozen_copy() const {
    AgcState s = *this;
    s.frozen_ = true;
    return s;
}

AgcState AgcState::reset(GainIndex upper_limit, const GainTable& table) const {
    AgcState s = *this;
    s.upper_ = std::clamp(upper_limit, 0, table.max_index());
    s.current_ = s.upper_;
    s.frozen_ = false;
    s.steps_ = 0;
    return s;
}

AgcState agc_step(const AgcState& state, double measured_wideband_dbm, const GainTable& table) {
    if (state.frozen_) throw AgcFrozenError();
    AgcState next = state;
    const double post_gain = measured_wideband_dbm + table.gain_db(state.current_);
    if (post_gain > state.high_) {
        next.current_ = std::max(0, state.current_ - 1);
    } else if (post_gain < state.low_) {
        next.current_ = std::min(state.upper_, state.current_ + 1);
    }
    ++next.steps_;
    return next;
}

GainIndex run_preamble_agc(const PacketScenario& scn, GainIndex upper_limit, const GainTable& table,
                           const LinkBudget& budget, const AgcConfig& cfg,
                           std::optional<int> step_budget) {
    if (!table.valid_index(upper_limit))
        throw UsageError("run_preamble_agc: upper limit " + std::to_string(upper_limit) +
                         " out of range");
    const double measured =
        effective_snr(scn, upper_limit, Phase::Preamble, budget, table).wideband_dbm;
    // The loop is monotone on a static input, so G steps always reach the fixed point.
    const int limit = step_budget ? std::max(0, *step_budget) : table.size();
    AgcState state = AgcState::warm_up(upper_limit, cfg, table);
    while (state.step_count() < limit) {
        AgcState next = agc_step(state, measured, table);
        const bool moved = next.current_index() != state.current_index();
        state = next;
        if (!moved) break;
    }
    return state.frozen_copy().current_index();
}

}  // namespace agcml

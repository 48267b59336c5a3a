#pragma once

#include "exitsim/types.hpp"

namespace exitsim {

// Production configuration the study started from: 25% stop-loss, 3%
// trailing activation, 2% trailing distance, 5% partial take-profit
// threshold at 50%, 24-hour stale close.
inline ExitConfig baseline_config() {
    return ExitConfig{0.25, 0.03, 0.02, 0.05, 0.50, 24.0};
}

// Recommended deployable default: 10% stop-loss, 3% trailing activation,
// 5% trailing distance, 10% partial take-profit threshold at 75%, 48-hour
// stale close.
inline ExitConfig recommended_config() {
    return ExitConfig{0.10, 0.03, 0.05, 0.10, 0.75, 48.0};
}

// Strongest observed overlay refinement: 1.0x ATR stop, 2.0x ATR
// take-profit, sizing cut to 0.25 after 2 consecutive losses.
inline OverlayConfig recommended_overlay() {
    return OverlayConfig{1.0, 2.0, 2, 0.25, 14};
}

}  // namespace exitsim

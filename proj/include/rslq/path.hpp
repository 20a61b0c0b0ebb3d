#pragma once

#include <limits>
#include <vector>

namespace rslq {

/// Sentinel for "the jump never arrives before T".
inline constexpr double kNoJump = std::numeric_limits<double>::infinity();

/// Right-continuous step trajectory of the modulating chain on [0, T].
struct RegimePath {
    std::vector<double> epochs;  // switch times, strictly increasing, epochs[0] = 0
    std::vector<int> states;     // regime (1-based) on [epochs[k], epochs[k+1])
    double T = 0.0;

    int state_at(double t) const {
        // last epoch <= t
        size_t lo = 0, hi = epochs.size();
        while (hi - lo > 1) {
            size_t mid = (lo + hi) / 2;
            if (epochs[mid] <= t) lo = mid; else hi = mid;
        }
        return states[lo];
    }
};

}  // namespace rslq

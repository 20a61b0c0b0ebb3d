#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "rslq/errors.hpp"

namespace rslq {

/// Uniform time grid 0 = t_0 < t_1 < ... < t_{n_steps} = T.
///
/// Coefficient functions are piecewise constant on the grid with the
/// left-continuous convention: the value on (t_k, t_{k+1}] is the slice-k
/// value (0-based), and the value at t = 0 is the slice-0 value.
struct TimeGrid {
    double T = 1.0;
    int n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double horizon, int steps) : T(horizon), n_steps(steps) {
        if (!(T > 0.0) || n_steps < 1)
            throw InvalidModelError("time grid requires T > 0 and n_steps >= 1");
    }

    double dt() const { return T / n_steps; }
    int n_nodes() const { return n_steps + 1; }
    double node(int k) const { return (k == n_steps) ? T : k * dt(); }

    /// Slice index for time t under the left-continuous convention.
    /// t in (t_k, t_{k+1}] maps to k; t = 0 maps to 0.
    int slice_index(double t) const {
        if (t < 0.0 || t > T * (1.0 + 1e-12))
            throw std::out_of_range("time outside [0, T]");
        if (t <= 0.0) return 0;
        // ceil(t/dt) - 1 with a relative guard so exact nodes land on the
        // preceding slice.
        double pos = t / dt();
        int k = static_cast<int>(std::ceil(pos - 1e-9)) - 1;
        if (k < 0) k = 0;
        if (k >= n_steps) k = n_steps - 1;
        return k;
    }

    std::vector<double> nodes() const {
        std::vector<double> out(n_nodes());
        for (int k = 0; k < n_nodes(); ++k) out[k] = node(k);
        return out;
    }
};

/// A scalar function of time known at the grid nodes, t_0..t_{n_steps}.
/// Evaluation between nodes is linear interpolation; used for solved
/// grids (P, K, h, ...) which are continuous in time.
struct GridFn {
    TimeGrid grid;
    std::vector<double> values;  // size grid.n_nodes()

    double at_node(int k) const { return values[static_cast<size_t>(k)]; }

    double operator()(double t) const {
        if (t <= 0.0) return values.front();
        if (t >= grid.T) return values.back();
        double pos = t / grid.dt();
        int k = static_cast<int>(pos);
        if (k >= grid.n_steps) k = grid.n_steps - 1;
        double w = pos - k;
        return (1.0 - w) * values[static_cast<size_t>(k)] +
               w * values[static_cast<size_t>(k) + 1];
    }
};

}  // namespace rslq

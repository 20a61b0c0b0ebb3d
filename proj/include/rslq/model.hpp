#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "rslq/errors.hpp"
#include "rslq/grid.hpp"

namespace rslq {

/// Generator of the modulating Markov chain: q_ij >= 0 off the diagonal,
/// rows sum to zero.
struct MarkovGenerator {
    int ell = 1;
    Eigen::MatrixXd q;  // ell x ell, rates in 1/time

    static MarkovGenerator single() {
        MarkovGenerator g;
        g.ell = 1;
        g.q = Eigen::MatrixXd::Zero(1, 1);
        return g;
    }

    static MarkovGenerator from_rows(int ell, const std::vector<double>& row_major) {
        MarkovGenerator g;
        g.ell = ell;
        g.q = Eigen::MatrixXd::Zero(ell, ell);
        for (int i = 0; i < ell; ++i)
            for (int j = 0; j < ell; ++j)
                g.q(i, j) = row_major[static_cast<size_t>(i) * ell + j];
        return g;
    }
};

/// Per-regime coefficient grids. Every entry is piecewise constant on the
/// time grid: slot k (0-based) is the value on (t_k, t_{k+1}], and the value
/// at t = 0 is slot 0. All vectors have length n_steps.
struct RegimeCoefficients {
    std::vector<double> A;             // drift rate
    std::vector<Eigen::VectorXd> B;    // m, control drift loading
    std::vector<Eigen::VectorXd> C;    // n, state diffusion loading
    std::vector<Eigen::MatrixXd> D;    // n x m, control diffusion loading
    std::vector<double> E;             // state jump loading
    std::vector<Eigen::VectorXd> F;    // m, control jump loading
    std::vector<double> Q;             // running state weight
    std::vector<Eigen::MatrixXd> R;    // m x m symmetric, running control weight
    std::vector<double> G_a;           // terminal weight if the jump lands at t
    std::vector<double> lambda;        // jump intensity
    double G_b = 0.0;                  // terminal weight when no jump before T

    /// All-constant coefficients, replicated across the grid.
    static RegimeCoefficients constant(int m, int n, int n_steps);
};

/// Values of all coefficients at a fixed (t, regime).
struct CoefficientSlice {
    double A = 0.0, E = 0.0, Q = 0.0, G_a = 0.0, lambda = 0.0, G_b = 0.0;
    Eigen::VectorXd B, C, F;
    Eigen::MatrixXd D, R;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string joined() const;
};

/// Which coefficient-positivity case certifies the solve, and with what
/// constant.
enum class CaseKind { None, Standard, SingularI, SingularII, SingularIIPrime };

const char* to_string(CaseKind k);

struct AssumptionCase {
    CaseKind kind = CaseKind::None;          // strongest satisfied case
    double delta = 0.0;                      // certified constant for `kind`
    std::map<CaseKind, double> satisfied;    // every satisfied case with its delta

    bool holds(CaseKind k) const { return satisfied.count(k) > 0; }
    double delta_for(CaseKind k) const { return satisfied.at(k); }
};

/// Complete problem data: scalar state, m-dimensional control, n-dimensional
/// Brownian motion, ell regimes, horizon [0, T ^ tau]. Immutable after
/// construction; share freely across threads.
struct RegimeModel {
    int m = 1;
    int n = 1;
    int ell = 1;
    TimeGrid grid;
    MarkovGenerator generator;
    std::vector<RegimeCoefficients> regimes;  // size ell
    double x0 = 0.0;
    int i0 = 1;  // initial regime, 1-based

    /// Coefficients of regime i (1-based, as in the problem statement).
    const RegimeCoefficients& coeffs(int i) const {
        if (i < 1 || i > ell) throw std::out_of_range("regime index outside 1..ell");
        return regimes[static_cast<size_t>(i) - 1];
    }

    /// Piecewise-constant evaluation at (t, i); left-continuous in t.
    CoefficientSlice eval(double t, int i) const;

    /// Slice values by interval index (0-based), regime 1-based.
    CoefficientSlice slice(int k, int i) const;
};

/// Report every violated structural invariant; empty report iff well-formed.
ValidationReport validate(const RegimeModel& model);

/// Certify the coefficient-positivity cases. Requires a valid model.
/// Returns kind = None (with empty `satisfied`) when no case holds.
AssumptionCase classify_case(const RegimeModel& model);

/// Convenience builder for models with constant-in-time coefficients.
struct ConstantRegimeSpec {
    double A = 0.0, E = 0.0, Q = 0.0, G_b = 1.0, G_a = 1.0, lambda = 0.0;
    Eigen::VectorXd B, C, F;  // sized on build if empty
    Eigen::MatrixXd D, R;
};

RegimeModel make_constant_model(const TimeGrid& grid, const MarkovGenerator& gen,
                                int m, int n,
                                const std::vector<ConstantRegimeSpec>& specs,
                                double x0, int i0);

}  // namespace rslq

#include "rslq/model.hpp"

#include <cmath>
#include <sstream>

#include "rslq/matutil.hpp"

namespace rslq {

namespace {

bool all_finite(const Eigen::MatrixXd& M) { return M.allFinite(); }

template <typename T>
bool grid_sized(const std::vector<T>& v, int n_steps) {
    return static_cast<int>(v.size()) == n_steps;
}

}  // namespace

RegimeCoefficients RegimeCoefficients::constant(int m, int n, int n_steps) {
    RegimeCoefficients rc;
    auto ns = static_cast<size_t>(n_steps);
    rc.A.assign(ns, 0.0);
    rc.E.assign(ns, 0.0);
    rc.Q.assign(ns, 0.0);
    rc.G_a.assign(ns, 0.0);
    rc.lambda.assign(ns, 0.0);
    rc.B.assign(ns, Eigen::VectorXd::Zero(m));
    rc.F.assign(ns, Eigen::VectorXd::Zero(m));
    rc.C.assign(ns, Eigen::VectorXd::Zero(n));
    rc.D.assign(ns, Eigen::MatrixXd::Zero(n, m));
    rc.R.assign(ns, Eigen::MatrixXd::Zero(m, m));
    rc.G_b = 0.0;
    return rc;
}

std::string ValidationReport::joined() const {
    std::ostringstream os;
    for (size_t k = 0; k < violations.size(); ++k) {
        if (k) os << "; ";
        os << violations[k];
    }
    return os.str();
}

const char* to_string(CaseKind k) {
    switch (k) {
        case CaseKind::None: return "None";
        case CaseKind::Standard: return "Standard";
        case CaseKind::SingularI: return "SingularI";
        case CaseKind::SingularII: return "SingularII";
        case CaseKind::SingularIIPrime: return "SingularIIPrime";
    }
    return "?";
}

CoefficientSlice RegimeModel::slice(int k, int i) const {
    const RegimeCoefficients& rc = coeffs(i);
    if (k < 0 || k >= grid.n_steps) throw std::out_of_range("slice index outside grid");
    auto ks = static_cast<size_t>(k);
    CoefficientSlice s;
    s.A = rc.A[ks];
    s.E = rc.E[ks];
    s.Q = rc.Q[ks];
    s.G_a = rc.G_a[ks];
    s.lambda = rc.lambda[ks];
    s.G_b = rc.G_b;
    s.B = rc.B[ks];
    s.C = rc.C[ks];
    s.F = rc.F[ks];
    s.D = rc.D[ks];
    s.R = rc.R[ks];
    return s;
}

CoefficientSlice RegimeModel::eval(double t, int i) const {
    return slice(grid.slice_index(t), i);
}

ValidationReport validate(const RegimeModel& model) {
    ValidationReport rep;
    auto flag = [&rep](const std::string& msg) { rep.violations.push_back(msg); };

    if (!(model.grid.T > 0.0)) flag("horizon T must be positive");
    if (model.grid.n_steps < 1) flag("n_steps must be >= 1");
    if (model.m < 1) flag("control dimension m must be >= 1");
    if (model.n < 1) flag("Brownian dimension n must be >= 1");
    if (model.ell < 1) flag("regime count ell must be >= 1");
    if (static_cast<int>(model.regimes.size()) != model.ell)
        flag("regime coefficient count does not match ell");
    if (!std::isfinite(model.x0)) flag("x0 not finite");
    if (model.i0 < 1 || model.i0 > model.ell) flag("i0 outside 1..ell");

    const auto& g = model.generator;
    if (g.ell != model.ell || g.q.rows() != model.ell || g.q.cols() != model.ell) {
        flag("generator dimension does not match ell");
    } else {
        for (int i = 0; i < model.ell; ++i) {
            for (int j = 0; j < model.ell; ++j)
                if (i != j && g.q(i, j) < 0.0) {
                    std::ostringstream os;
                    os << "generator entry (" << i + 1 << "," << j + 1 << ") negative";
                    flag(os.str());
                }
            double row_sum = g.q.row(i).sum();
            if (std::abs(row_sum) > 1e-12) {
                std::ostringstream os;
                os << "generator row " << i + 1 << " sum != 0";
                flag(os.str());
            }
        }
        if (!all_finite(g.q)) flag("generator has non-finite entries");
    }

    int ns = model.grid.n_steps;
    for (int i = 1; i <= static_cast<int>(model.regimes.size()) && i <= model.ell; ++i) {
        const RegimeCoefficients& rc = model.regimes[static_cast<size_t>(i) - 1];
        std::ostringstream tag;
        tag << ", regime " << i;
        const std::string rt = tag.str();

        if (!grid_sized(rc.A, ns) || !grid_sized(rc.E, ns) || !grid_sized(rc.Q, ns) ||
            !grid_sized(rc.G_a, ns) || !grid_sized(rc.lambda, ns) ||
            !grid_sized(rc.B, ns) || !grid_sized(rc.C, ns) || !grid_sized(rc.F, ns) ||
            !grid_sized(rc.D, ns) || !grid_sized(rc.R, ns)) {
            flag("coefficient grid length != n_steps" + rt);
            continue;
        }
        if (!std::isfinite(rc.G_b)) flag("G_b not finite" + rt);

        bool dims_ok = true, finite_ok = true, lambda_ok = true, sym_ok = true;
        for (int k = 0; k < ns; ++k) {
            auto ks = static_cast<size_t>(k);
            if (rc.B[ks].size() != model.m || rc.F[ks].size() != model.m ||
                rc.C[ks].size() != model.n || rc.D[ks].rows() != model.n ||
                rc.D[ks].cols() != model.m || rc.R[ks].rows() != model.m ||
                rc.R[ks].cols() != model.m)
                dims_ok = false;
            if (!std::isfinite(rc.A[ks]) || !std::isfinite(rc.E[ks]) ||
                !std::isfinite(rc.Q[ks]) || !std::isfinite(rc.G_a[ks]) ||
                !std::isfinite(rc.lambda[ks]) || !all_finite(rc.B[ks]) ||
                !all_finite(rc.C[ks]) || !all_finite(rc.F[ks]) || !all_finite(rc.D[ks]) ||
                !all_finite(rc.R[ks]))
                finite_ok = false;
            if (rc.lambda[ks] < 0.0) lambda_ok = false;
            if (dims_ok && !matutil::is_symmetric(rc.R[ks])) sym_ok = false;
        }
        if (!dims_ok) flag("coefficient dimensions inconsistent" + rt);
        if (!finite_ok) flag("non-finite coefficient value" + rt);
        if (!lambda_ok) flag("lambda negative" + rt);
        if (!sym_ok) flag("R not symmetric" + rt);
    }
    return rep;
}

namespace {

// Scale-aware slack for the "is this exactly >= 0" checks on user data.
bool psd_like(const Eigen::MatrixXd& M) {
    return matutil::eig_min(M) >= -1e-12 * (1.0 + std::abs(M.trace()));
}

struct CaseScan {
    bool q_nonneg = true;
    bool r_psd = true;
    bool gb_nonneg = true;
    bool ga_nonneg = true;
    double min_eig_r = std::numeric_limits<double>::infinity();
    double min_eig_dtd = std::numeric_limits<double>::infinity();
    double min_gb = std::numeric_limits<double>::infinity();
    double min_ga = std::numeric_limits<double>::infinity();
    double min_lambda_f2 = std::numeric_limits<double>::infinity();
};

CaseScan scan_model(const RegimeModel& model) {
    CaseScan s;
    for (int i = 1; i <= model.ell; ++i) {
        const RegimeCoefficients& rc = model.coeffs(i);
        s.min_gb = std::min(s.min_gb, rc.G_b);
        if (rc.G_b < 0.0) s.gb_nonneg = false;
        for (int k = 0; k < model.grid.n_steps; ++k) {
            auto ks = static_cast<size_t>(k);
            if (rc.Q[ks] < 0.0) s.q_nonneg = false;
            if (rc.G_a[ks] < 0.0) s.ga_nonneg = false;
            s.min_ga = std::min(s.min_ga, rc.G_a[ks]);
            if (!psd_like(rc.R[ks])) s.r_psd = false;
            s.min_eig_r = std::min(s.min_eig_r, matutil::eig_min(rc.R[ks]));
            Eigen::MatrixXd dtd = rc.D[ks].transpose() * rc.D[ks];
            s.min_eig_dtd = std::min(s.min_eig_dtd, matutil::eig_min(dtd));
            if (model.m == 1) {
                double f = rc.F[ks](0);
                s.min_lambda_f2 = std::min(s.min_lambda_f2, rc.lambda[ks] * f * f);
            }
        }
    }
    return s;
}

}  // namespace

AssumptionCase classify_case(const RegimeModel& model) {
    ValidationReport rep = validate(model);
    if (!rep.ok())
        throw InvalidModelError("classify_case requires a valid model: " + rep.joined());

    CaseScan s = scan_model(model);
    AssumptionCase out;

    if (s.q_nonneg && s.gb_nonneg && s.ga_nonneg && s.min_eig_r > 0.0)
        out.satisfied[CaseKind::Standard] = s.min_eig_r;

    if (s.q_nonneg && s.r_psd) {
        double d1 = std::min({s.min_eig_dtd, s.min_gb, s.min_ga});
        if (d1 > 0.0) out.satisfied[CaseKind::SingularI] = d1;
        if (model.m == 1) {
            if (s.gb_nonneg) {
                double d2 = std::min(s.min_ga, s.min_lambda_f2);
                if (d2 > 0.0) out.satisfied[CaseKind::SingularII] = d2;
            }
            double d2p = std::min({s.min_ga, s.min_gb, s.min_lambda_f2});
            if (d2p > 0.0) out.satisfied[CaseKind::SingularIIPrime] = d2p;
        }
    }

    // Strongest first: the uniformly positive certificates beat the
    // nonnegative ones, and II' subsumes II.
    for (CaseKind k : {CaseKind::SingularIIPrime, CaseKind::SingularI,
                       CaseKind::Standard, CaseKind::SingularII}) {
        if (out.holds(k)) {
            out.kind = k;
            out.delta = out.satisfied[k];
            break;
        }
    }
    return out;
}

RegimeModel make_constant_model(const TimeGrid& grid, const MarkovGenerator& gen,
                                int m, int n,
                                const std::vector<ConstantRegimeSpec>& specs,
                                double x0, int i0) {
    RegimeModel model;
    model.m = m;
    model.n = n;
    model.ell = static_cast<int>(specs.size());
    model.grid = grid;
    model.generator = gen;
    model.x0 = x0;
    model.i0 = i0;
    for (const ConstantRegimeSpec& sp : specs) {
        RegimeCoefficients rc = RegimeCoefficients::constant(m, n, grid.n_steps);
        auto ns = static_cast<size_t>(grid.n_steps);
        rc.A.assign(ns, sp.A);
        rc.E.assign(ns, sp.E);
        rc.Q.assign(ns, sp.Q);
        rc.G_a.assign(ns, sp.G_a);
        rc.lambda.assign(ns, sp.lambda);
        rc.G_b = sp.G_b;
        Eigen::VectorXd B = sp.B.size() ? sp.B : Eigen::VectorXd::Zero(m);
        Eigen::VectorXd F = sp.F.size() ? sp.F : Eigen::VectorXd::Zero(m);
        Eigen::VectorXd C = sp.C.size() ? sp.C : Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd D = sp.D.size() ? sp.D : Eigen::MatrixXd::Zero(n, m);
        Eigen::MatrixXd R = sp.R.size() ? sp.R : Eigen::MatrixXd::Zero(m, m);
        rc.B.assign(ns, B);
        rc.F.assign(ns, F);
        rc.C.assign(ns, C);
        rc.D.assign(ns, D);
        rc.R.assign(ns, R);
        model.regimes.push_back(std::move(rc));
    }
    return model;
}

}  // namespace rslq

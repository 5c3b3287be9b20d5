#include "loglap/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "loglap/constants.hpp"
#include "loglap/errors.hpp"
#include "loglap/fit.hpp"
#include "loglap/parallel.hpp"
#include "loglap/rng.hpp"
#include "loglap/spectral.hpp"

namespace loglap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kBoundaryCells = 8;
constexpr int kRateCells = 16;

double mass_inner(const DiscreteFunction& u, const DiscreteFunction& v) {
    return u.grid()->h * u.values().dot(v.values());
}

void require_positive(const DiscreteFunction& w, const char* who) {
    for (int i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0)) {
            throw DomainError(std::string(who) + ": input must be positive on every cell");
        }
    }
}

void require_pair(const DiscreteFunction& w1, const DiscreteFunction& w2, const char* who) {
    if (w1.grid() != w2.grid() || w1.size() != w2.size()) {
        throw UsageError(std::string(who) + ": functions live on different grids");
    }
    require_positive(w1, who);
    require_positive(w2, who);
    const Eigen::ArrayXd ratio = w1.values().array() / w2.values().array();
    const double worst = std::max(ratio.maxCoeff(), 1.0 / ratio.minCoeff());
    if (!(worst <= 1e6)) {
        throw DomainError(std::string(who) + ": ratio w1/w2 exceeds 1e6");
    }
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] < v[i - 1])) return false;
    }
    return !v.empty();
}

void require_schedule(const std::vector<double>& s_list, const char* who) {
    if (s_list.size() < 2) {
        throw UsageError(std::string(who) + ": need at least two values of s");
    }
    for (std::size_t i = 0; i < s_list.size(); ++i) {
        if (!(s_list[i] > 0.0 && s_list[i] < 0.25)) {
            throw DomainError(std::string(who) + ": s outside (0, 1/4)");
        }
        if (i > 0 && !(s_list[i] < s_list[i - 1])) {
            throw UsageError(std::string(who) + ": s schedule must be strictly decreasing");
        }
    }
}

// trend check: pass iff the sequence strictly decreases; lhs = last, rhs = first
CheckReport decreasing_check(std::string name, const std::vector<double>& s_list,
                             const std::vector<double>& values) {
    CheckReport r;
    r.name = std::move(name);
    r.lhs = values.empty() ? kNaN : values.back();
    r.rhs = values.empty() ? kNaN : values.front();
    r.margin = r.rhs - r.lhs;
    r.pass = strictly_decreasing(values);
    for (std::size_t i = 0; i < values.size(); ++i) {
        r.add("s=" + std::to_string(s_list[i]), values[i]);
    }
    r.note = "strictly decreasing in s-order";
    return r;
}

double norm_diff(const DiscreteFunction& u, const DiscreteFunction& v, double q) {
    return DiscreteFunction(u.grid(), u.values() - v.values()).lp_norm(q);
}

// flip u so that its mass inner product with ref is nonnegative
DiscreteFunction align(const DiscreteFunction& u, const DiscreteFunction& ref) {
    if (mass_inner(u, ref) < 0.0) return DiscreteFunction(u.grid(), -u.values());
    return u;
}

// fixed positive test profiles on the grid
DiscreteFunction test_profile(const GridPtr& grid, int k) {
    const double a = grid->a;
    const double L = grid->measure();
    return DiscreteFunction::sample(grid, [=](double x) {
        const double t = 2.0 * (x - a) / L - 1.0;
        const double bump = std::pow(std::cos(0.5 * kPi * t), 0.5 * (k + 1));
        return bump * (1.0 + 0.2 * (k - 2) * t);
    });
}

double log_weight_norm(const DiscreteFunction& a, double beta) {
    // ln |a|_beta with the sum done in log-sum-exp form
    const double h = a.grid()->h;
    const Eigen::ArrayXd la = a.values().array().abs().log() * beta;
    const double m = la.maxCoeff();
    return (m + std::log((la - m).exp().sum() * h)) / beta;
}

struct FracSolve {
    std::optional<SolveReport> report;
    std::shared_ptr<const SymmetricForm> Es;
    std::optional<FracProblem> prob;
    std::string error;
};

std::vector<FracSolve> solve_schedule(const WeightFamily& family, const GridPtr& grid,
                                      const std::vector<double>& s_list,
                                      const SolveOptions& opts) {
    std::vector<FracSolve> out(s_list.size());
    parallel_for(s_list.size(), [&](std::size_t i) {
        const double s = s_list[i];
        try {
            auto Es = std::make_shared<const SymmetricForm>(assemble_Es(grid, s));
            FracProblem fp = make_frac_problem(grid, s, family.p_of_s(s), family.a(s), Es);
            out[i].report = solve_frac(fp, std::nullopt, opts);
            out[i].Es = Es;
            out[i].prob = std::move(fp);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

double beta_floor(double p1, double gamma_param, double s) {
    const double ts = frac_constants(1, s).two_star;
    const double p = 2.0 + p1 * s;
    const double delta = 1.0 - p1 / 4.0;
    const double first = ts / (ts - p);
    const double second = 1.0 + (1.0 - 2.0 * s) / (2.0 * s * (delta - gamma_param));
    return std::max(first, second);
}

}  // namespace

std::optional<double> CheckReport::get(const std::string& key) const {
    for (const auto& [k, v] : context) {
        if (k == key) return v;
    }
    return std::nullopt;
}

DiscreteFunction WeightFamily::a(double s) const {
    return DiscreteFunction(omega.grid(), (1.0 + s * omega.values().array()).matrix());
}

double WeightFamily::beta_threshold(double s) const {
    return beta_floor(p1, gamma_param, s);
}

double WeightFamily::M_a() const {
    return std::exp(omega.values().maxCoeff());
}

double WeightFamily::M_bound(double s) const {
    if (!superlinear()) {
        throw RegimeError("M_bound: superlinear families only");
    }
    const FracConstants fc = frac_constants(1, s);
    const double p = p_of_s(s);
    const double b = beta(s);
    const double measure = omega.grid()->measure();
    const double log_K = log_weight_norm(a(s), b) +
                         (1.0 - 1.0 / b - p / fc.two_star) * std::log(measure) +
                         0.5 * p * std::log(fc.kappa_Ns);
    return std::exp(log_K / (2.0 - p));
}

WeightFamily make_weight_family(double p1, DiscreteFunction omega,
                                std::optional<double> gamma_param, double beta_factor) {
    if (!std::isfinite(p1) || p1 == 0.0 || !(p1 < 4.0)) {
        throw DomainError("weight family: need p1 < 4 and p1 != 0");
    }
    if (!omega.values().allFinite()) {
        throw DomainError("weight family: omega must be finite");
    }
    // a(s) = 1 + s omega stays positive for s < 1/4
    if (!(omega.values().minCoeff() > -4.0)) {
        throw DomainError("weight family: need omega > -4 so that a(s) > 0 for s < 1/4");
    }
    if (!(beta_factor > 1.0)) {
        throw DomainError("weight family: beta_factor must exceed 1");
    }
    const double delta = 1.0 - p1 / 4.0;
    WeightFamily f{p1, std::move(omega), gamma_param.value_or(0.5 * delta), {}};
    if (p1 > 0.0 && !(f.gamma_param > 0.0 && f.gamma_param < delta)) {
        throw DomainError("weight family: gamma must lie in (0, delta)");
    }
    const double gam = f.gamma_param;
    f.beta_of_s = [p1, gam, beta_factor](double s) { return beta_factor * beta_floor(p1, gam, s); };
    return f;
}

double linf_bound_frac(const WeightFamily& family, double domain_diameter) {
    return linf_bound_frac(family.p1, family.M_a(), domain_diameter, 1);
}

double boundary_term(const DiscreteFunction& u) {
    const Grid1D& g = *u.grid();
    if (g.n < 2 * kBoundaryCells) {
        throw UsageError("boundary_term: need at least 8 cells per side");
    }
    // c = sum u^2 l / sum l^2 over the cells nearest one endpoint
    const auto fit_side = [&](bool left) {
        double num = 0.0;
        double den = 0.0;
        for (int k = 0; k < kBoundaryCells; ++k) {
            const int i = left ? k : g.n - 1 - k;
            const double l = ell(g.delta[i]);
            num += u[i] * u[i] * l;
            den += l * l;
        }
        return num / den;
    };
    // x . nu at the endpoints
    const double left = fit_side(true) * (-g.a);
    const double right = fit_side(false) * g.b;
    return 2.0 * (left + right);
}

CheckReport pohozaev_residual(const DiscreteFunction& u, const LogProblem& prob, double rel_tol) {
    if (u.grid() != prob.grid) {
        throw UsageError("pohozaev_residual: u does not live on the problem grid");
    }
    const Eigen::VectorXd& w = prob.omega.values();
    const bool constant_omega = (w.array() == w[0]).all();
    if (!constant_omega && !prob.omega_prime) {
        throw UsageError("pohozaev_residual: omega is not constant, omega' required");
    }
    const Grid1D& g = *prob.grid;
    const Nonlinearity nl{prob.lambda};
    double bulk = 0.0;
    double drift = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double t = u[i];
        bulk += 2.0 * nl.F(w[i], t) - t * nl.f(w[i], t);
        if (!constant_omega) {
            drift += g.midpoints[i] * nl.F_x((*prob.omega_prime)[i], t);
        }
    }
    CheckReport r;
    r.name = "pohozaev";
    r.lhs = g.h * bulk + 2.0 * g.h * drift + 2.0 * u.l2_norm_sq();
    r.rhs = boundary_term(u);
    r.margin = std::abs(r.lhs - r.rhs);
    const double scale = std::max(std::abs(r.lhs), std::abs(r.rhs));
    r.tolerance = rel_tol * scale;
    r.pass = r.margin <= r.tolerance;
    r.add("lambda", prob.lambda);
    r.add("n", g.n);
    r.add("relative_residual", scale > 0.0 ? r.margin / scale : 0.0);
    return r;
}

CheckReport critical_obstruction_check(const LogProblem& prob, const DiscreteFunction& u) {
    CheckReport r;
    r.name = "critical_obstruction";
    const double coef = 2.0 - 0.5 * prob.lambda;
    const double n2 = u.l2_norm_sq();
    r.lhs = coef * n2;
    r.rhs = n2 > 0.0 ? boundary_term(u) : 0.0;
    r.margin = r.rhs - r.lhs;
    r.add("lambda", prob.lambda);
    r.add("coefficient", coef);
    if (n2 == 0.0) {
        r.pass = true;
        r.add("contradiction", 0.0);
        r.note = "u = 0: vacuous";
        return r;
    }
    const bool lhs_nonpositive = r.lhs <= 0.0;
    const bool rhs_positive = r.rhs > 0.0;
    if (prob.lambda >= 4.0) {
        const bool contradiction = lhs_nonpositive && rhs_positive;
        r.add("contradiction", contradiction ? 1.0 : 0.0);
        r.pass = !contradiction;
        if (contradiction) {
            r.note = prob.lambda == 4.0
                         ? "left side is 0, boundary term positive: no positive solution"
                         : "left side negative, boundary term positive: no positive solution "
                           "(the strict case also excludes sign-changing ones)";
        } else if (!rhs_positive) {
            r.note = "boundary term not positive: obstruction not triggered";
        } else {
            r.note = "left side positive";
        }
    } else {
        const bool consistent = !lhs_nonpositive && rhs_positive;
        r.add("contradiction", consistent ? 0.0 : 1.0);
        r.pass = consistent;
        r.note = consistent ? "both sides positive"
                            : (lhs_nonpositive ? "left side not positive"
                                               : "boundary term not positive");
    }
    return r;
}

CheckReport diaz_saa_check(const DiscreteFunction& w1, const DiscreteFunction& w2,
                           const SymmetricForm& EL, double tol) {
    require_pair(w1, w2, "diaz_saa_check");
    const Eigen::ArrayXd a1 = w1.values().array();
    const Eigen::ArrayXd a2 = w2.values().array();
    const Eigen::ArrayXd d = a1.square() - a2.square();
    CheckReport r;
    r.name = "diaz_saa";
    r.lhs = EL(w2.values(), (d / a2).matrix());
    r.rhs = EL(w1.values(), (d / a1).matrix());
    r.margin = r.rhs - r.lhs;
    r.tolerance = tol;
    r.pass = r.margin >= -tol;
    r.add("margin_printed", -r.margin);
    return r;
}

RayConvexity ray_convexity_profile(const DiscreteFunction& w1, const DiscreteFunction& w2,
                                   const SymmetricForm& EL, const std::vector<double>& theta_list,
                                   double tol) {
    require_pair(w1, w2, "ray_convexity_profile");
    for (std::size_t i = 0; i < theta_list.size(); ++i) {
        const double t = theta_list[i];
        if (!(t >= 0.0 && t <= 1.0) || (i > 0 && !(t > theta_list[i - 1]))) {
            throw UsageError("ray_convexity_profile: theta must be sorted in [0, 1]");
        }
    }
    const Eigen::ArrayXd q1 = w1.values().array().square();
    const Eigen::ArrayXd q2 = w2.values().array().square();
    const Eigen::ArrayXd dq = q2 - q1;
    const auto phi_at = [&](double theta, double* prime) {
        const Eigen::VectorXd r = ((1.0 - theta) * q1 + theta * q2).sqrt().matrix();
        if (prime) *prime = 0.5 * EL(r, (dq / r.array()).matrix());
        return 0.5 * EL(r, r);
    };
    RayConvexity out;
    for (double t : theta_list) {
        RayRow row{t, 0.0, 0.0};
        row.phi = phi_at(t, &row.phi_prime);
        out.rows.push_back(row);
    }
    for (std::size_t i = 1; i < out.rows.size(); ++i) {
        out.max_decrease =
            std::max(out.max_decrease, out.rows[i - 1].phi_prime - out.rows[i].phi_prime);
    }
    out.phi_prime_nondecreasing = out.max_decrease <= tol;
    const double mid = phi_at(0.5, nullptr);
    out.chord_gap = mid - 0.5 * (phi_at(0.0, nullptr) + phi_at(1.0, nullptr));
    out.chord_holds = out.chord_gap <= tol;
    return out;
}

CheckReport log_sobolev_check(const DiscreteFunction& u, const SymmetricForm& EL, double tol) {
    const double n2 = u.l2_norm_sq();
    if (!(n2 > 0.0)) {
        throw DomainError("log_sobolev_check: u = 0");
    }
    const double aN = dimension_constants(1).a_N;
    double ent = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        const double t = u[i];
        if (t != 0.0) ent += std::log(std::abs(t)) * t * t;
    }
    ent *= u.grid()->h;
    CheckReport r;
    r.name = "log_sobolev";
    r.lhs = 4.0 * ent;
    r.rhs = EL(u, u) + 2.0 * std::log(n2) * n2 + aN * n2;
    r.margin = r.rhs - r.lhs;
    r.tolerance = tol;
    r.pass = r.margin >= -tol;
    return r;
}

CheckReport frac_sobolev_check(const DiscreteFunction& u, const SymmetricForm& Es, double tol) {
    if (Es.kind != FormKind::Es || !Es.s) {
        throw UsageError("frac_sobolev_check: needs an Es form");
    }
    const double n2 = u.l2_norm_sq();
    if (!(n2 > 0.0)) {
        throw DomainError("frac_sobolev_check: u = 0");
    }
    const FracConstants fc = frac_constants(1, *Es.s);
    const double q = fc.two_star;
    CheckReport r;
    r.name = "frac_sobolev";
    r.lhs = std::pow(u.lp_norm(q), 2.0);
    r.rhs = fc.kappa_Ns * Es(u, u);
    r.margin = r.rhs - r.lhs;
    r.tolerance = tol;
    r.pass = r.margin >= -tol;
    r.add("s", *Es.s);
    return r;
}

ExpansionResult weighted_expansion_check(const DiscreteFunction& u, const WeightFamily& family,
                                         const std::vector<double>& s_list) {
    const double h = u.grid()->h;
    const Eigen::ArrayXd v = u.values().array();
    const Eigen::ArrayXd absv = v.abs();
    const Eigen::ArrayXd sq = v.square();
    Eigen::ArrayXd log_abs = Eigen::ArrayXd::Zero(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (absv[i] > 0.0) log_abs[i] = std::log(absv[i]);
    }
    const double first = h * ((family.omega.values().array() + family.p1 * log_abs) * sq).sum();
    ExpansionResult out;
    std::vector<double> xs;
    std::vector<double> ys;
    for (double s : s_list) {
        if (!(s > 0.0 && s < 0.25)) {
            throw DomainError("weighted_expansion_check: s outside (0, 1/4)");
        }
        const double p = family.p_of_s(s);
        const Eigen::ArrayXd a = family.a(s).values().array();
        // a|u|^p - u^2 = u^2 (a |u|^{p-2} - 1), the bracket via expm1
        Eigen::ArrayXd diff(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (absv[i] == 0.0) {
                diff[i] = 0.0;
                continue;
            }
            const double e = std::expm1((p - 2.0) * log_abs[i]);
            diff[i] = sq[i] * (a[i] * e + (a[i] - 1.0));
        }
        const double defect = std::abs(h * diff.sum() - s * first);
        out.rows.push_back({s, defect});
        xs.push_back(s);
        ys.push_back(defect);
    }
    out.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : kNaN;
    return out;
}

CheckReport hypothesis_check(const WeightFamily& family, const std::vector<double>& s_list) {
    CheckReport r;
    r.name = "hypotheses";
    const Eigen::ArrayXd w = family.omega.values().array();
    // (a0)
    const double a0_err = (family.a(0.0).values().array() - 1.0).abs().maxCoeff();
    const bool a0 = a0_err == 0.0;
    // (a2)
    const double w_sup = w.abs().maxCoeff();
    const bool a2 = std::isfinite(w_sup);
    // (a3), per-s value against M_a
    const double Ma = family.M_a();
    double a3_max = 0.0;
    bool a3 = true;
    // (a1) and the beta condition, superlinear only
    constexpr double kBracketLo = 1e-3;
    constexpr double kBracketHi = 1e3;
    double a1_lo = std::numeric_limits<double>::infinity();
    double a1_hi = 0.0;
    bool a1 = true;
    bool beta_ok = true;
    double beta_slack = std::numeric_limits<double>::infinity();
    for (double s : s_list) {
        const double sup_a = (1.0 + s * w).abs().maxCoeff();
        const double root = std::exp(std::log(sup_a) / s);
        a3_max = std::max(a3_max, root);
        if (!(root <= Ma * (1.0 + 1e-12))) a3 = false;
        if (family.superlinear()) {
            const double b = family.beta(s);
            const double val =
                std::exp(log_weight_norm(family.a(s), b) / (family.p_of_s(s) - 2.0));
            a1_lo = std::min(a1_lo, val);
            a1_hi = std::max(a1_hi, val);
            if (!(val >= kBracketLo && val <= kBracketHi)) a1 = false;
            const double slack = b - family.beta_threshold(s);
            beta_slack = std::min(beta_slack, slack);
            if (!(slack > 0.0)) beta_ok = false;
        }
    }
    r.lhs = a3_max;
    r.rhs = Ma;
    r.margin = Ma - a3_max;
    r.pass = a0 && a1 && a2 && a3 && beta_ok;
    r.add("a0_max_error", a0_err);
    r.add("a0", a0);
    r.add("a2_omega_sup", w_sup);
    r.add("a2", a2);
    r.add("a3_max", a3_max);
    r.add("a3_M_a", Ma);
    r.add("a3", a3);
    if (family.superlinear()) {
        r.add("a1_min", a1_lo);
        r.add("a1_max", a1_hi);
        r.add("a1", a1);
        r.add("beta_min_slack", beta_slack);
        r.add("beta", beta_ok);
    }
    std::string failed;
    const auto mark = [&](bool ok, const char* tag) {
        if (!ok) failed += (failed.empty() ? "" : ",") + std::string(tag);
    };
    mark(a0, "a0");
    mark(a1, "a1");
    mark(a2, "a2");
    mark(a3, "a3");
    mark(beta_ok, "beta");
    r.note = failed.empty() ? "all hypotheses hold on the schedule" : "failed: " + failed;
    return r;
}

BoundaryRate boundary_rate_fit(const DiscreteFunction& u) {
    const Grid1D& g = *u.grid();
    if (g.n < 2 * kRateCells) {
        throw UsageError("boundary_rate_fit: need at least 16 cells per side");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (int k = 0; k < kRateCells; ++k) {
        for (int i : {k, g.n - 1 - k}) {
            if (!(u[i] > 0.0)) {
                throw UsageError("boundary_rate_fit: non-positive sample near the boundary");
            }
            xs.push_back(0.5 * std::log(ell(g.delta[i])));
            ys.push_back(std::log(u[i]));
        }
    }
    const LineFit fit = fit_line(xs, ys);
    return {fit.slope, std::exp(fit.intercept)};
}

bool AsymptoticsResult::all_pass() const {
    if (!failures.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const CheckReport& c) { return c.pass; });
}

const CheckReport* AsymptoticsResult::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

AsymptoticsResult superlinear_asymptotics(const WeightFamily& family, const GridPtr& grid,
                                          const std::vector<double>& s_list,
                                          const SolveOptions& opts) {
    if (!(family.p1 > 0.0 && family.p1 < 4.0)) {
        throw RegimeError("superlinear_asymptotics: need 0 < p1 < 4");
    }
    require_schedule(s_list, "superlinear_asymptotics");
    AsymptoticsResult out;
    const LogProblem lp = make_log_problem(grid, family.p1, family.omega);
    out.limit = solve_superlinear(lp, std::nullopt, opts);
    if (!out.limit->converged) out.failures.push_back("limit problem: " + out.limit->stop_reason);
    const DiscreteFunction& u0 = out.limit->solution;
    const double E0 = out.limit->energy;
    const double n0 = u0.l2_norm();
    const SymmetricForm E = assemble_E(grid);
    const double cal_E0 = E(u0, u0);

    const std::vector<FracSolve> solves = solve_schedule(family, grid, s_list, opts);

    std::vector<double> gap_l2, gap_energy, gap_norm, norm_minus_M, r_sq_ratio, e_ratio;
    std::vector<double> identity_err;
    double inf_M = std::numeric_limits<double>::infinity();
    double worst_M_margin = std::numeric_limits<double>::infinity();
    bool minimal_ok = true;
    double worst_minimal = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s_list.size(); ++i) {
        const double s = s_list[i];
        const FracSolve& fs = solves[i];
        if (!fs.report) {
            out.failures.push_back("s=" + std::to_string(s) + ": " + fs.error);
            continue;
        }
        if (!fs.report->converged) {
            out.failures.push_back("s=" + std::to_string(s) + ": " + fs.report->stop_reason);
        }
        const DiscreteFunction us = align(fs.report->solution, u0);
        const double norm_s = std::sqrt((*fs.Es)(us, us));
        AsymptoticsRow row{s,     fs.report->energy / s, norm_s, norm_diff(us, u0, 2.0),
                           us.sup_norm(), kNaN, kNaN};
        out.rows.push_back(row);
        gap_l2.push_back(row.l2_gap);
        gap_energy.push_back(std::abs(row.energy_over_s - E0));
        gap_norm.push_back(std::abs(norm_s - n0));
        const double M = family.M_bound(s);
        inf_M = std::min(inf_M, M);
        worst_M_margin = std::min(worst_M_margin, norm_s - M);
        // least energy on the Nehari set is least norm: compare with the projection of u0
        const Projection pr = nehari_project_frac(u0, *fs.prob);
        const double proj_sq = (*fs.Es)(pr.rw, pr.rw);
        const double excess = norm_s * norm_s - proj_sq;
        worst_minimal = std::max(worst_minimal, excess / proj_sq);
        if (excess > 1e-8 * proj_sq) minimal_ok = false;
        e_ratio.push_back(E(us, us) / cal_E0);
        const double p = fs.prob->p;
        const double expected = (0.5 - 1.0 / p) * weighted_power_integral(us, *fs.prob);
        identity_err.push_back(std::abs(fs.report->energy - expected) / std::abs(expected));
    }
    const std::vector<double> s_done = [&] {
        std::vector<double> v;
        for (const auto& r : out.rows) v.push_back(r.s);
        return v;
    }();

    out.checks.push_back(decreasing_check("l2_gap_decreasing", s_done, gap_l2));
    out.checks.push_back(decreasing_check("energy_limit", s_done, gap_energy));
    out.checks.back().add("limit_energy", E0);
    out.checks.push_back(decreasing_check("norm_limit", s_done, gap_norm));
    out.checks.back().add("limit_norm", n0);
    {
        CheckReport r;
        r.name = "nehari_lower_bound";
        r.lhs = inf_M;
        r.rhs = out.rows.empty() ? kNaN : out.rows.front().norm_s;
        for (const auto& row : out.rows) r.rhs = std::min(r.rhs, row.norm_s);
        r.margin = worst_M_margin;
        r.pass = !out.rows.empty() && worst_M_margin >= 0.0;
        r.add("inf_M", inf_M);
        for (const auto& row : out.rows) r.add("M_s=" + std::to_string(row.s), family.M_bound(row.s));
        r.note = "|u_s|_s >= M(s) at every s";
        out.checks.push_back(std::move(r));
    }
    {
        CheckReport r;
        r.name = "nehari_norm_minimal";
        r.lhs = worst_minimal;
        r.rhs = 1e-8;
        r.margin = 1e-8 - worst_minimal;
        r.tolerance = 1e-8;
        r.pass = !out.rows.empty() && minimal_ok;
        r.note = "|u_s|_s^2 <= r^2 |u0|_s^2 with r the projection scale of u0";
        out.checks.push_back(std::move(r));
    }
    {
        CheckReport r;
        r.name = "E_form_bounded";
        r.lhs = e_ratio.empty() ? kNaN : *std::max_element(e_ratio.begin(), e_ratio.end());
        r.rhs = 2.0;
        r.margin = r.rhs - r.lhs;
        r.pass = !e_ratio.empty() && r.lhs <= 2.0;
        r.add("E_u0", cal_E0);
        r.note = "max_s E(u_s,u_s) / E(u0,u0) <= 2";
        out.checks.push_back(std::move(r));
    }
    {
        CheckReport r;
        r.name = "energy_identity_frac";
        r.lhs = identity_err.empty() ? kNaN
                                     : *std::max_element(identity_err.begin(), identity_err.end());
        r.rhs = 1e-8;
        r.margin = r.rhs - r.lhs;
        r.tolerance = 1e-8;
        r.pass = !identity_err.empty() && r.lhs <= 1e-8;
        r.note = "E_s(u_s) = (1/2 - 1/p) int a |u_s|^p, relative";
        out.checks.push_back(std::move(r));
    }
    {
        // r_{s,phi} -> r_{0,phi} for fixed profiles
        CheckReport r;
        r.name = "projection_limit";
        r.pass = true;
        double worst_last = 0.0;
        for (int k = 0; k < 5; ++k) {
            const DiscreteFunction phi = test_profile(grid, k);
            const double r0 = nehari_project_log(phi, lp).r;
            std::vector<double> gaps;
            for (std::size_t i = 0; i < s_list.size(); ++i) {
                if (!solves[i].prob) continue;
                gaps.push_back(std::abs(nehari_project_frac(phi, *solves[i].prob).r - r0));
            }
            const bool dec = strictly_decreasing(gaps) && gaps.size() == s_list.size();
            r.pass = r.pass && dec;
            r.add("profile" + std::to_string(k) + "_r0", r0);
            r.add("profile" + std::to_string(k) + "_last_gap", gaps.empty() ? kNaN : gaps.back());
            r.add("profile" + std::to_string(k) + "_decreasing", dec);
            if (!gaps.empty()) worst_last = std::max(worst_last, gaps.back());
        }
        r.lhs = worst_last;
        r.rhs = 0.0;
        r.margin = -worst_last;
        r.note = "|r_s - r_0| decreasing for 5 fixed profiles";
        out.checks.push_back(std::move(r));
    }
    return out;
}

AsymptoticsResult sublinear_asymptotics(const WeightFamily& family, const GridPtr& grid,
                                        const std::vector<double>& s_list,
                                        const SolveOptions& opts) {
    if (!(family.p1 < 0.0)) {
        throw RegimeError("sublinear_asymptotics: need p1 < 0");
    }
    require_schedule(s_list, "sublinear_asymptotics");
    AsymptoticsResult out;
    const LogProblem lp = make_log_problem(grid, family.p1, family.omega);
    out.limit = solve_sublinear(lp, std::nullopt, opts);
    if (!out.limit->converged) out.failures.push_back("limit problem: " + out.limit->stop_reason);
    const DiscreteFunction& u0 = out.limit->solution;
    const SymmetricForm E = assemble_E(grid);
    const SymmetricForm M = assemble_mass(grid);
    const double cal_E0 = E(u0, u0);
    const double measure = grid->measure();
    const double h = grid->h;
    const double p1 = family.p1;

    // constant A from the first EL eigenpair
    const EigenPair eL = smallest_eig(*lp.EL, M);
    double A = kNaN;
    {
        const Eigen::ArrayXd phi = eL.vector.values().array();
        const Eigen::ArrayXd sq = phi.square();
        double ent = 0.0;
        for (Eigen::Index i = 0; i < phi.size(); ++i) {
            if (phi[i] != 0.0) ent += sq[i] * std::log(std::abs(phi[i]));
        }
        ent *= h;
        const double wphi = h * (family.omega.values().array() * sq).sum();
        A = std::exp(1.0 + 2.0 * eL.value / p1 - (2.0 / p1) * (wphi + p1 * ent));
    }
    const double Ma = family.M_a();
    const double C0 = linf_bound_frac(family, measure);

    const std::vector<FracSolve> solves = solve_schedule(family, grid, s_list, opts);

    std::vector<double> s_done;
    std::vector<double> gq[3];
    const double qs[3] = {1.0, 2.0, 4.0};
    std::vector<double> e_ratio;
    CheckReport bracket;
    bracket.name = "norm_bracket";
    bracket.pass = true;
    double bracket_margin = std::numeric_limits<double>::infinity();
    double sup_worst = 0.0;
    for (std::size_t i = 0; i < s_list.size(); ++i) {
        const double s = s_list[i];
        const FracSolve& fs = solves[i];
        if (!fs.report) {
            out.failures.push_back("s=" + std::to_string(s) + ": " + fs.error);
            continue;
        }
        if (!fs.report->converged) {
            out.failures.push_back("s=" + std::to_string(s) + ": " + fs.report->stop_reason);
        }
        const DiscreteFunction us = align(fs.report->solution, u0);
        const double norm_sq = (*fs.Es)(us, us);
        const FracProblem& fp = *fs.prob;
        const double p = fp.p;

        const EigenPair es = smallest_eig(*fs.Es, M);
        const DiscreteFunction& phi = es.vector;
        const double phi_sq = phi.l2_norm_sq();
        const double log_ts = (std::log(2.0 * weighted_power_integral(phi, fp)) - std::log(p) -
                               std::log(es.value) - std::log(phi_sq)) /
                              (2.0 - p);
        const double t_s = std::exp(log_ts);
        const DiscreteFunction half(grid, (0.5 * t_s) * phi.values());
        const double lower = (2.0 * p / (p - 2.0)) * energy_frac(half, fp);
        const double log_cs = -0.5 * std::log(es.value) + (2.0 - p) / (2.0 * p) * std::log(measure);
        const double upper = std::exp(2.0 / (2.0 - p) * (s * std::log(Ma) + p * log_cs));
        const double upper_printed = upper * (0.5 - 1.0 / p);
        const std::string tag = "s=" + std::to_string(s);
        bracket.add(tag + "_lower", lower);
        bracket.add(tag + "_norm_sq", norm_sq);
        bracket.add(tag + "_upper", upper);
        bracket.add(tag + "_upper_printed", upper_printed);
        const bool ok = lower <= norm_sq && norm_sq <= upper;
        bracket.pass = bracket.pass && ok;
        bracket_margin = std::min({bracket_margin, norm_sq - lower, upper - norm_sq});

        out.rows.push_back({s, fs.report->energy / s, std::sqrt(norm_sq), norm_diff(us, u0, 2.0),
                            us.sup_norm(), t_s, A});
        s_done.push_back(s);
        for (int q = 0; q < 3; ++q) gq[q].push_back(norm_diff(us, u0, qs[q]));
        e_ratio.push_back(E(us, us) / cal_E0);
        sup_worst = std::max(sup_worst, us.sup_norm());
    }
    bracket.pass = bracket.pass && !out.rows.empty();
    bracket.lhs = bracket_margin;
    bracket.rhs = 0.0;
    bracket.margin = bracket_margin;
    bracket.note = "lower <= |u_s|_s^2 <= upper at every s; upper_printed is the bound "
                   "with the extra (1/2 - 1/p) factor";

    for (int q = 0; q < 3; ++q) {
        out.checks.push_back(decreasing_check(
            "lq_convergence_q" + std::to_string(static_cast<int>(qs[q])), s_done, gq[q]));
    }
    out.checks.push_back(std::move(bracket));
    {
        CheckReport r;
        r.name = "norm_lower_A";
        r.lhs = out.rows.empty() ? kNaN : out.rows.back().norm_s * out.rows.back().norm_s;
        r.rhs = 0.9 * 0.5 * kLn2 * A;
        r.margin = r.lhs - r.rhs;
        r.pass = !out.rows.empty() && r.margin >= 0.0;
        r.add("A", A);
        r.add("lambda1L", eL.value);
        r.note = "smallest s: |u_s|_s^2 >= 0.9 (ln2/2) A";
        out.checks.push_back(std::move(r));
    }
    {
        CheckReport r;
        r.name = "linf_bound";
        r.lhs = sup_worst;
        r.rhs = 1.05 * C0;
        r.margin = r.rhs - r.lhs;
        r.pass = !out.rows.empty() && r.margin >= 0.0;
        r.add("bound", C0);
        out.checks.push_back(std::move(r));
    }
    {
        CheckReport r;
        r.name = "E_form_bounded";
        r.lhs = e_ratio.empty() ? kNaN : *std::max_element(e_ratio.begin(), e_ratio.end());
        r.rhs = 2.0;
        r.margin = r.rhs - r.lhs;
        r.pass = !e_ratio.empty() && r.lhs <= 2.0;
        r.add("E_u0", cal_E0);
        r.note = "max_s E(u_s,u_s) / E(u0,u0) <= 2";
        out.checks.push_back(std::move(r));
    }
    {
        CheckReport r;
        r.name = "limit_linf";
        r.lhs = u0.sup_norm();
        r.rhs = C0;
        r.margin = r.rhs - r.lhs;
        r.pass = r.margin >= 0.0;
        out.checks.push_back(std::move(r));
    }
    {
        const DiscreteFunction phi = test_profile(grid, 2);
        const double target = energy_log(phi, lp);
        std::vector<double> gaps;
        for (std::size_t i = 0; i < s_list.size(); ++i) {
            if (!solves[i].prob) continue;
            gaps.push_back(std::abs(energy_frac(phi, *solves[i].prob) / s_list[i] - target));
        }
        out.checks.push_back(decreasing_check("fixed_profile_limit", s_done, gaps));
        out.checks.back().add("limit_energy", target);
    }
    {
        const MultistartResult ms = multistart_uniqueness(lp, 4, 1, opts);
        CheckReport r;
        r.name = "limit_uniqueness";
        r.lhs = ms.max_gap;
        r.rhs = 1e-6;
        r.margin = r.rhs - r.lhs;
        r.tolerance = 1e-6;
        const bool pure = out.limit->sign_pattern != SignPattern::Mixed;
        r.pass = ms.failed.empty() && ms.max_gap <= 1e-6 && pure;
        r.add("runs", ms.runs);
        r.add("failed_runs", static_cast<double>(ms.failed.size()));
        r.add("sign_pure", pure);
        out.checks.push_back(std::move(r));
    }
    return out;
}

std::pair<DiscreteFunction, DiscreteFunction> random_positive_pair(const GridPtr& grid,
                                                                   std::uint64_t seed) {
    Rng rng(seed);
    const double scale = rng.uniform(0.5, 2.0);
    Eigen::VectorXd a(grid->n);
    Eigen::VectorXd b(grid->n);
    for (int i = 0; i < grid->n; ++i) a[i] = scale * std::exp(rng.uniform(-0.8, 0.8));
    for (int i = 0; i < grid->n; ++i) b[i] = scale * std::exp(rng.uniform(-0.8, 0.8));
    return {DiscreteFunction(grid, std::move(a)), DiscreteFunction(grid, std::move(b))};
}

DiscreteFunction random_function(const GridPtr& grid, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd v(grid->n);
    for (int i = 0; i < grid->n; ++i) v[i] = rng.uniform(-2.0, 2.0);
    return DiscreteFunction(grid, std::move(v));
}

namespace {

template <class Check>
std::vector<CheckReport> run_audit(int count, std::uint64_t seed, Check check) {
    if (count < 1) {
        throw UsageError("audit: count must be positive");
    }
    std::vector<CheckReport> out(static_cast<std::size_t>(count));
    parallel_for(out.size(), [&](std::size_t k) {
        out[k] = check(derive_seed(seed, k));
        out[k].add("seed", static_cast<double>(seed));
        out[k].add("draw", static_cast<double>(k));
    });
    return out;
}

}  // namespace

std::vector<CheckReport> diaz_saa_audit(const GridPtr& grid, int count, std::uint64_t seed,
                                        double tol) {
    const SymmetricForm EL = assemble_EL(grid);
    return run_audit(count, seed, [&](std::uint64_t draw) {
        const auto [w1, w2] = random_positive_pair(grid, draw);
        return diaz_saa_check(w1, w2, EL, tol);
    });
}

std::vector<CheckReport> log_sobolev_audit(const GridPtr& grid, int count, std::uint64_t seed,
                                           double tol) {
    const SymmetricForm EL = assemble_EL(grid);
    return run_audit(count, seed, [&](std::uint64_t draw) {
        return log_sobolev_check(random_function(grid, draw), EL, tol);
    });
}

std::vector<CheckReport> frac_sobolev_audit(const GridPtr& grid, double s, int count,
                                            std::uint64_t seed, double tol) {
    const SymmetricForm Es = assemble_Es(grid, s);
    return run_audit(count, seed, [&](std::uint64_t draw) {
        return frac_sobolev_check(random_function(grid, draw), Es, tol);
    });
}

}  // namespace loglap

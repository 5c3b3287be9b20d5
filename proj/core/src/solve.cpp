#include "loglap/solve.hpp"

#include <cmath>
#include <functional>

#include "loglap/constants.hpp"
#include "loglap/errors.hpp"
#include "loglap/parallel.hpp"
#include "loglap/rng.hpp"
#include "loglap/spectral.hpp"

namespace loglap {

namespace {

double t_log_abs(double t) { return t == 0.0 ? 0.0 : t * std::log(std::abs(t)); }

// t^2 (ln t^2 - 1), zero at t = 0
double log_density(double t) { return t == 0.0 ? 0.0 : t * t * (std::log(t * t) - 1.0); }

double log_density_difference(double a, double b) {
    if (a != 0.0 && b != 0.0 && (a > 0.0) == (b > 0.0)) {
        const double d = b - a;
        return d * (b + a) * (std::log(b * b) - 1.0) + 2.0 * a * a * std::log1p(d / a);
    }
    return log_density(b) - log_density(a);
}

double power_difference(double a, double b, double p) {
    if (a != 0.0 && b != 0.0 && (a > 0.0) == (b > 0.0)) {
        return std::pow(std::abs(a), p) * std::expm1(p * std::log1p((b - a) / a));
    }
    return std::pow(std::abs(b), p) - std::pow(std::abs(a), p);
}

void require_same_grid(const DiscreteFunction& u, const GridPtr& g) {
    if (u.size() != g->n) {
        throw UsageError("function does not live on the problem grid");
    }
}

// E(v) - E(u) as d'K(u + d/2) minus pointwise differences, d = v - u
double log_difference(const Eigen::VectorXd& u, const Eigen::VectorXd& Ku,
                      const Eigen::VectorXd& v, const LogProblem& prob) {
    const Eigen::VectorXd d = v - u;
    const Eigen::VectorXd Kd = prob.EL->matrix * d;
    double pot = 0.0;
    double logpart = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        pot += prob.omega[i] * d[i] * (2.0 * u[i] + d[i]);
        logpart += log_density_difference(u[i], v[i]);
    }
    const double h = prob.grid->h;
    return d.dot(Ku) + 0.5 * d.dot(Kd) - 0.5 * h * pot - 0.25 * prob.lambda * h * logpart;
}

double frac_difference(const Eigen::VectorXd& u, const Eigen::VectorXd& Ku,
                       const Eigen::VectorXd& v, const FracProblem& prob) {
    const Eigen::VectorXd d = v - u;
    const Eigen::VectorXd Kd = prob.Es->matrix * d;
    double acc = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        acc += prob.a_vals[i] * power_difference(u[i], v[i], prob.p);
    }
    return d.dot(Ku) + 0.5 * d.dot(Kd) - prob.grid->h * acc / prob.p;
}

// Shared Armijo driver. `project` maps a trial point to the constraint set
// (identity for unconstrained descent); it may throw DomainError for
// degenerate trial points, which is treated as a rejected step.
struct DescentHooks {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;  // K u
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> gradient;
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&)>
        difference;  // (u, Ku, v) -> E(v) - E(u)
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> project;
    std::function<double(const Eigen::VectorXd&)> nehari;  // null for unconstrained
};

struct DescentResult {
    Eigen::VectorXd u;
    double grad_norm = 0.0;
    double nehari = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;
};

DescentResult descend(Eigen::VectorXd u, double h, const DescentHooks& hooks,
                      const SolveOptions& opts) {
    DescentResult out;
    const double tol_g = opts.grad_tol(static_cast<int>(u.size()));
    double t_prev = 0.0;
    for (int it = 0;; ++it) {
        const Eigen::VectorXd Ku = hooks.apply(u);
        const Eigen::VectorXd g = hooks.gradient(u, Ku);
        const double gn = g.norm();
        const double nr = hooks.nehari ? hooks.nehari(u) : 0.0;
        out.grad_norm = gn;
        out.nehari = nr;
        out.iterations = it;
        if (gn <= tol_g && (!hooks.nehari || nr <= opts.tol_n)) {
            out.converged = true;
            out.stop_reason = "converged";
            break;
        }
        if (it >= opts.max_iter) {
            out.stop_reason = "max iterations";
            break;
        }
        const double slope = h * gn * gn;
        double t = (it == 0) ? 1.0 : std::min(2.0 * t_prev, opts.max_step);
        bool accepted = false;
        const double u_norm = u.norm();
        while (t * gn > 1e-17 * std::max(u_norm, 1e-300)) {
            Eigen::VectorXd v;
            bool ok = true;
            try {
                v = hooks.project(u - t * g);
            } catch (const DomainError&) {
                ok = false;
            }
            if (ok && v.allFinite() && hooks.difference(u, Ku, v) <= -opts.armijo_c * t * slope) {
                u = std::move(v);
                accepted = true;
                break;
            }
            t *= opts.backtrack;
        }
        if (!accepted) {
            out.stop_reason = "line search stalled";
            break;
        }
        t_prev = t;
    }
    out.u = std::move(u);
    return out;
}

}  // namespace

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Superlinear: return "superlinear";
        case Regime::Sublinear: return "sublinear";
        case Regime::NoExistence: return "no-existence";
    }
    return "?";
}

Regime LogProblem::regime() const {
    if (lambda < 0.0) {
        return Regime::Sublinear;
    }
    if (lambda > 0.0 && lambda < 4.0) {
        return Regime::Superlinear;
    }
    return Regime::NoExistence;
}

LogProblem make_log_problem(const GridPtr& grid, double lambda, DiscreteFunction omega,
                            std::optional<DiscreteFunction> omega_prime,
                            std::shared_ptr<const SymmetricForm> EL) {
    if (!std::isfinite(lambda) || lambda == 0.0) {
        throw DomainError("log problem: lambda must be finite and non-zero");
    }
    require_same_grid(omega, grid);
    if (omega_prime) {
        require_same_grid(*omega_prime, grid);
    }
    if (!EL) {
        EL = std::make_shared<const SymmetricForm>(assemble_EL(grid));
    } else if (EL->kind != FormKind::EL || EL->matrix.rows() != grid->n) {
        throw UsageError("log problem: supplied form is not EL on this grid");
    }
    return LogProblem{grid, lambda, std::move(omega), std::move(omega_prime), std::move(EL)};
}

FracProblem make_frac_problem(const GridPtr& grid, double s, double p, DiscreteFunction a_vals,
                              std::shared_ptr<const SymmetricForm> Es) {
    if (!(s > 0.0) || !(s < 0.25)) {
        throw DomainError("frac problem: s outside (0, 1/4)");
    }
    const double two_star = frac_constants(1, s).two_star;
    if (!(p > 1.0) || p == 2.0 || !(p < two_star)) {
        throw DomainError("frac problem: need p in (1, 2) or (2, 2*_s)");
    }
    require_same_grid(a_vals, grid);
    if ((a_vals.values().array() <= 0.0).any()) {
        throw DomainError("frac problem: weight a must be positive");
    }
    if (!Es) {
        Es = std::make_shared<const SymmetricForm>(assemble_Es(grid, s));
    } else if (Es->kind != FormKind::Es || !Es->s || *Es->s != s ||
               Es->matrix.rows() != grid->n) {
        throw UsageError("frac problem: supplied form is not Es(s) on this grid");
    }
    return FracProblem{grid, s, p, std::move(a_vals), std::move(Es)};
}

double Nonlinearity::f(double omega, double t) const { return omega * t + lambda * t_log_abs(t); }

double Nonlinearity::F(double omega, double t) const {
    return 0.5 * omega * t * t + 0.25 * lambda * log_density(t);
}

double Nonlinearity::F_x(double omega_prime, double t) const { return 0.5 * omega_prime * t * t; }

const char* sign_pattern_name(SignPattern s) {
    switch (s) {
        case SignPattern::Nonnegative: return "nonnegative";
        case SignPattern::Nonpositive: return "nonpositive";
        case SignPattern::Mixed: return "mixed";
    }
    return "?";
}

SignPattern sign_pattern_of(const Eigen::VectorXd& v) {
    const bool any_neg = (v.array() < 0.0).any();
    const bool any_pos = (v.array() > 0.0).any();
    if (!any_neg) {
        return SignPattern::Nonnegative;
    }
    if (!any_pos) {
        return SignPattern::Nonpositive;
    }
    return SignPattern::Mixed;
}

double SolveOptions::grad_tol(int n) const {
    return tol_g > 0.0 ? tol_g : 1e-9 * std::sqrt(static_cast<double>(n));
}

double energy_log(const DiscreteFunction& u, const LogProblem& prob) {
    require_same_grid(u, prob.grid);
    const Eigen::VectorXd& x = u.values();
    double pot = 0.0;
    double logpart = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        pot += prob.omega[i] * x[i] * x[i];
        logpart += log_density(x[i]);
    }
    const double h = prob.grid->h;
    return 0.5 * (*prob.EL)(x, x) - 0.5 * h * pot - 0.25 * prob.lambda * h * logpart;
}

double energy_log_difference(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             const LogProblem& prob) {
    return log_difference(u, prob.EL->matrix * u, v, prob);
}

DiscreteFunction grad_log(const DiscreteFunction& u, const LogProblem& prob) {
    require_same_grid(u, prob.grid);
    const Eigen::VectorXd& x = u.values();
    Eigen::VectorXd g = prob.EL->matrix * x / prob.grid->h;
    for (int i = 0; i < x.size(); ++i) {
        g[i] -= prob.omega[i] * x[i] + prob.lambda * t_log_abs(x[i]);
    }
    return DiscreteFunction(prob.grid, std::move(g));
}

namespace {

// EL(w,w) - lambda int ln|w| w^2 - int omega w^2
double nehari_numerator(const Eigen::VectorXd& w, const LogProblem& prob) {
    double acc = 0.0;
    for (int i = 0; i < w.size(); ++i) {
        acc += prob.omega[i] * w[i] * w[i] + prob.lambda * w[i] * t_log_abs(w[i]);
    }
    return (*prob.EL)(w, w) - prob.grid->h * acc;
}

}  // namespace

double nehari_residual_log(const DiscreteFunction& u, const LogProblem& prob) {
    const double l2 = u.l2_norm_sq();
    if (l2 == 0.0) {
        return 0.0;
    }
    return std::abs(nehari_numerator(u.values(), prob)) / l2;
}

Projection nehari_project_log(const DiscreteFunction& w, const LogProblem& prob) {
    require_same_grid(w, prob.grid);
    const double l2 = w.l2_norm_sq();
    if (!(l2 > 0.0)) {
        throw DomainError("nehari_project_log: w = 0");
    }
    if (!(prob.lambda > 0.0)) {
        throw RegimeError("nehari_project_log: projection requires lambda > 0");
    }
    const double log_r = nehari_numerator(w.values(), prob) / (prob.lambda * l2);
    const double r = std::exp(log_r);
    Eigen::VectorXd rw = w.values() + std::expm1(log_r) * w.values();
    return {r, DiscreteFunction(prob.grid, std::move(rw))};
}

std::vector<FiberingRow> fibering_profile(const DiscreteFunction& w, const LogProblem& prob,
                                          const std::vector<double>& r_list) {
    require_same_grid(w, prob.grid);
    const double l2 = w.l2_norm_sq();
    if (!(l2 > 0.0)) {
        throw DomainError("fibering_profile: w = 0");
    }
    const double B = nehari_numerator(w.values(), prob);
    const double log_r0 = B / (prob.lambda * l2);
    std::vector<FiberingRow> rows;
    for (double r : r_list) {
        if (!(r > 0.0)) {
            throw DomainError("fibering_profile: r must be positive");
        }
        const DiscreteFunction rw(prob.grid, r * w.values());
        // n'(r) = r [B - lambda |w|^2 ln r] = r lambda |w|^2 (ln r0 - ln r)
        const double dn = r * prob.lambda * l2 * (log_r0 - std::log(r));
        rows.push_back({r, energy_log(rw, prob), dn});
    }
    return rows;
}

DiscreteFunction default_init_log(const LogProblem& prob) {
    const EigenPair e = smallest_eig(*prob.EL, assemble_mass(prob.grid));
    Eigen::VectorXd v = e.vector.values().cwiseAbs();
    if (prob.lambda > 0.0) {
        return nehari_project_log(DiscreteFunction(prob.grid, v), prob).rw;
    }
    const double omega_sup = prob.omega.sup_norm();
    const double bound = linf_bound_log(prob.lambda, omega_sup, prob.grid->measure(), 1);
    v *= 0.5 * bound / v.maxCoeff();
    return DiscreteFunction(prob.grid, std::move(v));
}

namespace {

SolveReport finish_log(const LogProblem& prob, DescentResult&& r) {
    SolveReport rep{DiscreteFunction(prob.grid, std::move(r.u))};
    rep.energy = energy_log(rep.solution, prob);
    rep.nehari_residual = nehari_residual_log(rep.solution, prob);
    rep.grad_norm = r.grad_norm;
    rep.iterations = r.iterations;
    rep.converged = r.converged;
    rep.sign_pattern = sign_pattern_of(rep.solution.values());
    rep.sup_norm = rep.solution.sup_norm();
    rep.stop_reason = std::move(r.stop_reason);
    return rep;
}

DescentHooks log_hooks(const LogProblem& prob) {
    DescentHooks hk;
    const double h = prob.grid->h;
    hk.apply = [&prob](const Eigen::VectorXd& u) { return Eigen::VectorXd(prob.EL->matrix * u); };
    hk.gradient = [&prob, h](const Eigen::VectorXd& u, const Eigen::VectorXd& Ku) {
        Eigen::VectorXd g = Ku / h;
        for (int i = 0; i < u.size(); ++i) {
            g[i] -= prob.omega[i] * u[i] + prob.lambda * t_log_abs(u[i]);
        }
        return g;
    };
    hk.difference = [&prob](const Eigen::VectorXd& u, const Eigen::VectorXd& Ku,
                            const Eigen::VectorXd& v) { return log_difference(u, Ku, v, prob); };
    hk.project = [](const Eigen::VectorXd& w) { return w; };
    return hk;
}

}  // namespace

SolveReport solve_superlinear(const LogProblem& prob, const std::optional<DiscreteFunction>& init,
                              const SolveOptions& opts) {
    const Regime reg = prob.regime();
    if (reg == Regime::Sublinear) {
        throw RegimeError("solve_superlinear: lambda < 0 is the sublinear regime");
    }
    if (reg == Regime::NoExistence && !opts.allow_no_existence) {
        throw RegimeError("regime error: λ ≥ 4/N, no positive bounded solution exists");
    }
    DiscreteFunction start = init ? *init : default_init_log(prob);
    require_same_grid(start, prob.grid);
    start = nehari_project_log(start, prob).rw;

    DescentHooks hk = log_hooks(prob);
    hk.project = [&prob](const Eigen::VectorXd& w) {
        return Eigen::VectorXd(nehari_project_log(DiscreteFunction(prob.grid, w), prob).rw.values());
    };
    hk.nehari = [&prob](const Eigen::VectorXd& u) {
        return nehari_residual_log(DiscreteFunction(prob.grid, u), prob);
    };
    SolveReport rep = finish_log(prob, descend(start.values(), prob.grid->h, hk, opts));
    rep.energy_identity_error =
        std::abs(rep.energy - 0.25 * prob.lambda * rep.solution.l2_norm_sq());
    rep.no_existence_regime = (reg == Regime::NoExistence);
    return rep;
}

SolveReport solve_sublinear(const LogProblem& prob, const std::optional<DiscreteFunction>& init,
                            const SolveOptions& opts) {
    if (prob.regime() != Regime::Sublinear) {
        throw RegimeError("solve_sublinear: requires lambda < 0");
    }
    const DiscreteFunction start = init ? *init : default_init_log(prob);
    require_same_grid(start, prob.grid);
    const DescentHooks hk = log_hooks(prob);
    return finish_log(prob, descend(start.values(), prob.grid->h, hk, opts));
}

double weighted_power_integral(const DiscreteFunction& u, const FracProblem& prob) {
    require_same_grid(u, prob.grid);
    double acc = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        acc += prob.a_vals[i] * std::pow(std::abs(u[i]), prob.p);
    }
    return prob.grid->h * acc;
}

double energy_frac(const DiscreteFunction& u, const FracProblem& prob) {
    return 0.5 * (*prob.Es)(u, u) - weighted_power_integral(u, prob) / prob.p;
}

double energy_frac_difference(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                              const FracProblem& prob) {
    return frac_difference(u, prob.Es->matrix * u, v, prob);
}

namespace {

double signed_power(double t, double q) {
    return t == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(t), q), t);
}

}  // namespace

DiscreteFunction grad_frac(const DiscreteFunction& u, const FracProblem& prob) {
    require_same_grid(u, prob.grid);
    Eigen::VectorXd g = prob.Es->matrix * u.values() / prob.grid->h;
    for (int i = 0; i < u.size(); ++i) {
        g[i] -= prob.a_vals[i] * signed_power(u[i], prob.p - 1.0);
    }
    return DiscreteFunction(prob.grid, std::move(g));
}

double nehari_residual_frac(const DiscreteFunction& u, const FracProblem& prob) {
    const double l2 = u.l2_norm_sq();
    if (l2 == 0.0) {
        return 0.0;
    }
    return std::abs((*prob.Es)(u, u) - weighted_power_integral(u, prob)) / l2;
}

Projection nehari_project_frac(const DiscreteFunction& w, const FracProblem& prob) {
    const double denom = weighted_power_integral(w, prob);
    if (!(denom > 0.0)) {
        throw DomainError("nehari_project_frac: int a |w|^p must be positive");
    }
    const double num = (*prob.Es)(w, w);
    const double log_r = (std::log(num) - std::log(denom)) / (prob.p - 2.0);
    Eigen::VectorXd rw = w.values() + std::expm1(log_r) * w.values();
    return {std::exp(log_r), DiscreteFunction(prob.grid, std::move(rw))};
}

DiscreteFunction default_init_frac(const FracProblem& prob) {
    const EigenPair e = smallest_eig(*prob.Es, assemble_mass(prob.grid));
    // ray extremum: Nehari point for p > 2, ray minimizer for p < 2
    return nehari_project_frac(DiscreteFunction(prob.grid, e.vector.values().cwiseAbs()), prob).rw;
}

SolveReport solve_frac(const FracProblem& prob, const std::optional<DiscreteFunction>& init,
                       const SolveOptions& opts) {
    DiscreteFunction start = init ? *init : default_init_frac(prob);
    require_same_grid(start, prob.grid);
    const double h = prob.grid->h;

    DescentHooks hk;
    hk.apply = [&prob](const Eigen::VectorXd& u) { return Eigen::VectorXd(prob.Es->matrix * u); };
    hk.gradient = [&prob, h](const Eigen::VectorXd& u, const Eigen::VectorXd& Ku) {
        Eigen::VectorXd g = Ku / h;
        for (int i = 0; i < u.size(); ++i) {
            g[i] -= prob.a_vals[i] * signed_power(u[i], prob.p - 1.0);
        }
        return g;
    };
    hk.difference = [&prob](const Eigen::VectorXd& u, const Eigen::VectorXd& Ku,
                            const Eigen::VectorXd& v) { return frac_difference(u, Ku, v, prob); };
    if (prob.superlinear()) {
        start = nehari_project_frac(start, prob).rw;
        hk.project = [&prob](const Eigen::VectorXd& w) {
            return Eigen::VectorXd(
                nehari_project_frac(DiscreteFunction(prob.grid, w), prob).rw.values());
        };
        hk.nehari = [&prob](const Eigen::VectorXd& u) {
            return nehari_residual_frac(DiscreteFunction(prob.grid, u), prob);
        };
    } else {
        hk.project = [](const Eigen::VectorXd& w) { return w; };
    }
    DescentResult r = descend(start.values(), h, hk, opts);
    SolveReport rep{DiscreteFunction(prob.grid, std::move(r.u))};
    rep.energy = energy_frac(rep.solution, prob);
    rep.nehari_residual = nehari_residual_frac(rep.solution, prob);
    rep.grad_norm = r.grad_norm;
    rep.iterations = r.iterations;
    rep.converged = r.converged;
    rep.sign_pattern = sign_pattern_of(rep.solution.values());
    rep.sup_norm = rep.solution.sup_norm();
    rep.stop_reason = std::move(r.stop_reason);
    return rep;
}

DiscreteFunction random_positive_profile(const GridPtr& grid, std::uint64_t seed) {
    Rng rng(seed);
    const double scale = rng.uniform(0.1, 3.0);
    double c[4];
    for (double& ck : c) {
        ck = rng.uniform(-1.0, 1.0);
    }
    const double L = grid->measure();
    return DiscreteFunction::sample(grid, [&](double x) {
        const double t = (x - grid->a) / L;
        double e = 0.0;
        for (int k = 0; k < 4; ++k) {
            e += c[k] * std::cos(kPi * (k + 1) * t);
        }
        return scale * std::exp(e);
    });
}

MultistartResult multistart_uniqueness(const LogProblem& prob, int k, std::uint64_t seed,
                                       const SolveOptions& opts) {
    if (k < 2) {
        throw UsageError("multistart_uniqueness: k must be >= 2");
    }
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < k; ++i) {
        seeds.push_back(seed + static_cast<std::uint64_t>(i));
    }
    return multistart_uniqueness(prob, seeds, opts);
}

MultistartResult multistart_uniqueness(const LogProblem& prob,
                                       const std::vector<std::uint64_t>& seeds,
                                       const SolveOptions& opts) {
    if (prob.regime() != Regime::Sublinear) {
        throw RegimeError("multistart_uniqueness: requires lambda < 0");
    }
    if (seeds.size() < 2) {
        throw UsageError("multistart_uniqueness: need at least two runs");
    }
    std::vector<std::optional<SolveReport>> runs(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        runs[i] = solve_sublinear(prob, random_positive_profile(prob.grid, seeds[i]), opts);
    });
    MultistartResult out;
    out.runs = static_cast<int>(seeds.size());
    std::vector<Eigen::VectorXd> ok;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i]->converged) {
            ok.push_back(runs[i]->solution.values().cwiseAbs());
        } else {
            out.failed.push_back(static_cast<int>(i));
        }
        out.reports.push_back(std::move(*runs[i]));
    }
    const double h = prob.grid->h;
    for (std::size_t i = 0; i < ok.size(); ++i) {
        for (std::size_t j = i + 1; j < ok.size(); ++j) {
            out.max_gap = std::max(out.max_gap, std::sqrt(h) * (ok[i] - ok[j]).norm());
        }
    }
    return out;
}

}  // namespace loglap

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loglap/discretize.hpp"

namespace loglap {

enum class Regime { Superlinear, Sublinear, NoExistence };

const char* regime_name(Regime r);

// -Delta-log problem with f(x,t) = omega(x) t + lambda t ln|t|, N = 1
struct LogProblem {
    GridPtr grid;
    double lambda = 0.0;
    DiscreteFunction omega;
    std::optional<DiscreteFunction> omega_prime;
    std::shared_ptr<const SymmetricForm> EL;

    Regime regime() const;
};

// EL is assembled when not supplied
LogProblem make_log_problem(const GridPtr& grid, double lambda, DiscreteFunction omega,
                            std::optional<DiscreteFunction> omega_prime = std::nullopt,
                            std::shared_ptr<const SymmetricForm> EL = nullptr);

// fractional problem with nonlinearity a(s,x)|t|^{p-2}t
struct FracProblem {
    GridPtr grid;
    double s = 0.0;
    double p = 2.0;
    DiscreteFunction a_vals;
    std::shared_ptr<const SymmetricForm> Es;

    bool superlinear() const { return p > 2.0; }
};

FracProblem make_frac_problem(const GridPtr& grid, double s, double p, DiscreteFunction a_vals,
                              std::shared_ptr<const SymmetricForm> Es = nullptr);

// model nonlinearity, t ln|t| extended by 0 at t = 0
struct Nonlinearity {
    double lambda = 0.0;

    double f(double omega, double t) const;
    double F(double omega, double t) const;
    double F_x(double omega_prime, double t) const;
};

enum class SignPattern { Nonnegative, Nonpositive, Mixed };

const char* sign_pattern_name(SignPattern s);
SignPattern sign_pattern_of(const Eigen::VectorXd& v);

struct SolveOptions {
    double tol_g = -1.0;  // negative: 1e-9 sqrt(n)
    double tol_n = 1e-9;
    int max_iter = 20000;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double max_step = 1e8;
    // run superlinear projected descent even for lambda >= 4/N
    bool allow_no_existence = false;

    double grad_tol(int n) const;
};

struct SolveReport {
    explicit SolveReport(DiscreteFunction u) : solution(std::move(u)) {}

    DiscreteFunction solution;
    double energy = 0.0;
    double nehari_residual = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    SignPattern sign_pattern = SignPattern::Mixed;
    double sup_norm = 0.0;
    // |E(u) - (lambda/4)|u|_2^2|, superlinear log runs only
    double energy_identity_error = 0.0;
    bool no_existence_regime = false;
    std::string stop_reason;
};

double energy_log(const DiscreteFunction& u, const LogProblem& prob);
DiscreteFunction grad_log(const DiscreteFunction& u, const LogProblem& prob);
// E(v) - E(u) without cancellation between the two energies
double energy_log_difference(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             const LogProblem& prob);

// |EL(u,u) - int (omega + lambda ln|u|) u^2| / |u|_2^2
double nehari_residual_log(const DiscreteFunction& u, const LogProblem& prob);

struct Projection {
    double r;
    DiscreteFunction rw;
};

Projection nehari_project_log(const DiscreteFunction& w, const LogProblem& prob);

struct FiberingRow {
    double r;
    double value;       // E(r w)
    double derivative;  // d/dr E(r w)
};

std::vector<FiberingRow> fibering_profile(const DiscreteFunction& w, const LogProblem& prob,
                                          const std::vector<double>& r_list);

// nonnegative first eigenfunction of EL; projected (superlinear) or
// scaled to sup = bound/2 (sublinear)
DiscreteFunction default_init_log(const LogProblem& prob);

SolveReport solve_superlinear(const LogProblem& prob, const std::optional<DiscreteFunction>& init,
                              const SolveOptions& opts = {});
SolveReport solve_sublinear(const LogProblem& prob, const std::optional<DiscreteFunction>& init,
                            const SolveOptions& opts = {});

double energy_frac(const DiscreteFunction& u, const FracProblem& prob);
DiscreteFunction grad_frac(const DiscreteFunction& u, const FracProblem& prob);
double energy_frac_difference(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                              const FracProblem& prob);
// int a |u|^p, midpoint rule
double weighted_power_integral(const DiscreteFunction& u, const FracProblem& prob);
double nehari_residual_frac(const DiscreteFunction& u, const FracProblem& prob);

Projection nehari_project_frac(const DiscreteFunction& w, const FracProblem& prob);

DiscreteFunction default_init_frac(const FracProblem& prob);

SolveReport solve_frac(const FracProblem& prob, const std::optional<DiscreteFunction>& init,
                       const SolveOptions& opts = {});

struct MultistartResult {
    double max_gap = 0.0;
    int runs = 0;
    std::vector<int> failed;  // indices of non-converged runs, excluded
    std::vector<SolveReport> reports;
};

// run i starts from random_positive_profile(seed + i)
MultistartResult multistart_uniqueness(const LogProblem& prob, int k, std::uint64_t seed,
                                       const SolveOptions& opts = {});
MultistartResult multistart_uniqueness(const LogProblem& prob,
                                       const std::vector<std::uint64_t>& seeds,
                                       const SolveOptions& opts = {});

// smooth positive profile with random mode amplitudes
DiscreteFunction random_positive_profile(const GridPtr& grid, std::uint64_t seed);

}  // namespace loglap

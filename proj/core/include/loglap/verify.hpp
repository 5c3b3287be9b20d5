#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loglap/discretize.hpp"
#include "loglap/solve.hpp"

namespace loglap {

struct CheckReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::vector<std::pair<std::string, double>> context;
    std::string note;

    void add(std::string key, double value) { context.emplace_back(std::move(key), value); }
    std::optional<double> get(const std::string& key) const;
};

// a(s,x) = 1 + s omega(x), p(s) = 2 + p1 s
struct WeightFamily {
    double p1 = 0.0;
    DiscreteFunction omega;
    double gamma_param = 0.0;
    std::function<double(double)> beta_of_s;

    double p_of_s(double s) const { return 2.0 + p1 * s; }
    DiscreteFunction a(double s) const;
    double delta() const { return 1.0 - p1 / 4.0; }
    double beta(double s) const { return beta_of_s(s); }
    // right-hand side of the admissibility condition on beta(s)
    double beta_threshold(double s) const;
    // sup_s |a(s,.)|_inf^{1/s}
    double M_a() const;
    // per-s constant bounding |u|_s from below on the Nehari set
    double M_bound(double s) const;
    bool superlinear() const { return p1 > 0.0; }
};

// gamma_param defaults to delta/2; beta(s) = beta_factor * threshold(s)
WeightFamily make_weight_family(double p1, DiscreteFunction omega,
                                std::optional<double> gamma_param = std::nullopt,
                                double beta_factor = 2.0);

double linf_bound_frac(const WeightFamily& family, double domain_diameter);

double boundary_term(const DiscreteFunction& u);

CheckReport pohozaev_residual(const DiscreteFunction& u, const LogProblem& prob,
                              double rel_tol = 0.1);
CheckReport critical_obstruction_check(const LogProblem& prob, const DiscreteFunction& u);

CheckReport diaz_saa_check(const DiscreteFunction& w1, const DiscreteFunction& w2,
                           const SymmetricForm& EL, double tol = 1e-10);

struct RayRow {
    double theta;
    double phi;
    double phi_prime;
};

struct RayConvexity {
    std::vector<RayRow> rows;
    double max_decrease = 0.0;  // largest drop of phi' between neighbours
    bool phi_prime_nondecreasing = false;
    double chord_gap = 0.0;  // phi(1/2) - (phi(0) + phi(1))/2
    bool chord_holds = false;
};

RayConvexity ray_convexity_profile(const DiscreteFunction& w1, const DiscreteFunction& w2,
                                   const SymmetricForm& EL, const std::vector<double>& theta_list,
                                   double tol = 1e-10);

CheckReport log_sobolev_check(const DiscreteFunction& u, const SymmetricForm& EL,
                              double tol = 1e-9);
CheckReport frac_sobolev_check(const DiscreteFunction& u, const SymmetricForm& Es,
                               double tol = 1e-9);

ExpansionResult weighted_expansion_check(const DiscreteFunction& u, const WeightFamily& family,
                                         const std::vector<double>& s_list);

CheckReport hypothesis_check(const WeightFamily& family, const std::vector<double>& s_list);

struct BoundaryRate {
    double slope;
    double c;
};

BoundaryRate boundary_rate_fit(const DiscreteFunction& u);

struct AsymptoticsRow {
    double s;
    double energy_over_s;
    double norm_s;
    double l2_gap;
    double sup_norm;
    double t_s;
    double A_const;
};

struct AsymptoticsResult {
    std::vector<AsymptoticsRow> rows;
    std::vector<CheckReport> checks;
    std::optional<SolveReport> limit;
    std::vector<std::string> failures;  // inner solver problems

    bool all_pass() const;
    const CheckReport* find(const std::string& name) const;
};

AsymptoticsResult superlinear_asymptotics(const WeightFamily& family, const GridPtr& grid,
                                          const std::vector<double>& s_list,
                                          const SolveOptions& opts = {});
AsymptoticsResult sublinear_asymptotics(const WeightFamily& family, const GridPtr& grid,
                                        const std::vector<double>& s_list,
                                        const SolveOptions& opts = {});

// seeded audits, one report per random draw
std::vector<CheckReport> diaz_saa_audit(const GridPtr& grid, int count, std::uint64_t seed,
                                        double tol = 1e-10);
std::vector<CheckReport> log_sobolev_audit(const GridPtr& grid, int count, std::uint64_t seed,
                                           double tol = 1e-9);
std::vector<CheckReport> frac_sobolev_audit(const GridPtr& grid, double s, int count,
                                            std::uint64_t seed, double tol = 1e-9);

std::pair<DiscreteFunction, DiscreteFunction> random_positive_pair(const GridPtr& grid,
                                                                   std::uint64_t seed);
DiscreteFunction random_function(const GridPtr& grid, std::uint64_t seed);

}  // namespace loglap

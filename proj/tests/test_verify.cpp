#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "loglap/constants.hpp"
#include "loglap/discretize.hpp"
#include "loglap/errors.hpp"
#include "loglap/solve.hpp"
#include "loglap/verify.hpp"

using namespace loglap;

namespace {

DiscreteFunction constant(const GridPtr& g, double c) {
    return DiscreteFunction(g, Eigen::VectorXd::Constant(g->n, c));
}

DiscreteFunction sqrt_ell(const GridPtr& g, double c) {
    Eigen::VectorXd v(g->n);
    for (int i = 0; i < g->n; ++i) v[i] = c * std::sqrt(ell(g->delta[i]));
    return DiscreteFunction(g, v);
}

std::vector<double> grid_theta(int points) {
    std::vector<double> t;
    for (int i = 0; i < points; ++i) t.push_back(static_cast<double>(i) / (points - 1));
    return t;
}

const std::vector<double> kSchedule{0.1, 0.05, 0.025, 0.0125};

class ThreadsEnv {
public:
    explicit ThreadsEnv(const char* value) {
        if (const char* old = std::getenv("LOGLAP_THREADS")) saved_ = old;
        setenv("LOGLAP_THREADS", value, 1);
    }
    ~ThreadsEnv() {
        if (saved_.empty()) {
            unsetenv("LOGLAP_THREADS");
        } else {
            setenv("LOGLAP_THREADS", saved_.c_str(), 1);
        }
    }

private:
    std::string saved_;
};

}  // namespace

TEST(CheckReport, ContextLookup) {
    CheckReport r;
    r.add("x", 1.5);
    ASSERT_TRUE(r.get("x").has_value());
    EXPECT_EQ(*r.get("x"), 1.5);
    EXPECT_FALSE(r.get("y").has_value());
}

TEST(BoundaryTerm, SyntheticInputs) {
    auto g = build_grid(-1.0, 1.0, 64);
    EXPECT_EQ(boundary_term(DiscreteFunction(g)), 0.0);
    EXPECT_NEAR(boundary_term(sqrt_ell(g, 1.0)), 4.0, 1e-13);
    EXPECT_NEAR(boundary_term(sqrt_ell(g, 3.0)), 36.0, 1e-12);
    const auto inner = DiscreteFunction::sample(g, [](double x) { return std::abs(x) < 0.5 ? 1.0 : 0.0; });
    EXPECT_LE(std::abs(boundary_term(inner)), 1e-12);
    // x.nu weights: on (0, 2) only the right end counts
    auto g2 = build_grid(0.0, 2.0, 64);
    EXPECT_NEAR(boundary_term(sqrt_ell(g2, 1.0)), 4.0, 1e-13);
    EXPECT_THROW(boundary_term(DiscreteFunction(build_grid(-1.0, 1.0, 8))), UsageError);
}

TEST(Pohozaev, ConstantOmegaLeftSide) {
    auto g = build_grid(-1.0, 1.0, 64);
    const auto u = DiscreteFunction::sample(g, [](double x) { return std::cos(kPi * x / 2.0); });
    for (double lambda : {-1.0, 1.0, 3.0}) {
        const auto p = make_log_problem(g, lambda, constant(g, 0.4));
        const auto r = pohozaev_residual(u, p);
        EXPECT_EQ(r.name, "pohozaev");
        EXPECT_NEAR(r.lhs, (2.0 - lambda / 2.0) * u.l2_norm_sq(), 1e-13);
        EXPECT_NEAR(r.rhs, boundary_term(u), 1e-15);
        EXPECT_NEAR(r.margin, std::abs(r.lhs - r.rhs), 1e-15);
    }
    const auto z = pohozaev_residual(DiscreteFunction(g), make_log_problem(g, 1.0, constant(g, 0.0)));
    EXPECT_EQ(z.lhs, 0.0);
    EXPECT_EQ(z.rhs, 0.0);
    EXPECT_TRUE(z.pass);
}

TEST(Pohozaev, VaryingOmegaNeedsDerivative) {
    auto g = build_grid(-1.0, 1.0, 64);
    const auto w = DiscreteFunction::sample(g, [](double x) { return x; });
    const auto u = constant(g, 1.0);
    EXPECT_THROW(pohozaev_residual(u, make_log_problem(g, 1.0, w)), UsageError);
    const auto p = make_log_problem(g, 1.0, w, constant(g, 1.0));
    const auto r = pohozaev_residual(u, p);
    // drift 2 int x (1/2) u^2 vanishes by symmetry
    EXPECT_NEAR(r.lhs, 1.5 * u.l2_norm_sq(), 1e-12);
}

TEST(Pohozaev, SuperlinearResidualShrinksUnderRefinement) {
    std::vector<double> m;
    for (int n : {128, 256, 512}) {
        auto g = build_grid(-1.0, 1.0, n);
        const auto p = make_log_problem(g, 1.0, constant(g, 0.0));
        const auto s = solve_superlinear(p, std::nullopt);
        ASSERT_TRUE(s.converged);
        m.push_back(pohozaev_residual(s.solution, p).margin);
    }
    EXPECT_GE(m[0] / m[1], 1.5);
    EXPECT_GE(m[1] / m[2], 1.5);
}

TEST(Obstruction, CriticalLambdaContradiction) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto p = make_log_problem(g, 4.0, constant(g, 0.0));
    const auto u = DiscreteFunction::sample(g, [](double x) { return std::sqrt(1.0 - x * x); });
    const auto r = critical_obstruction_check(p, u);
    EXPECT_EQ(r.name, "critical_obstruction");
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(*r.get("contradiction"), 1.0);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_GT(r.rhs, 0.0);
}

TEST(Obstruction, SubcriticalConsistentAndVacuous) {
    auto g = build_grid(-1.0, 1.0, 256);
    const auto p = make_log_problem(g, 2.0, constant(g, 0.0));
    const auto s = solve_superlinear(p, std::nullopt);
    ASSERT_TRUE(s.converged);
    DiscreteFunction u(g, s.solution.values().cwiseAbs());
    const auto r = critical_obstruction_check(p, u);
    EXPECT_TRUE(r.pass) << r.note;
    EXPECT_GT(r.lhs, 0.0);
    EXPECT_GT(r.rhs, 0.0);
    EXPECT_EQ(*r.get("contradiction"), 0.0);
    const auto z = critical_obstruction_check(p, DiscreteFunction(g));
    EXPECT_TRUE(z.pass);
}

TEST(DiazSaa, ProportionalSwapAndRandom) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto EL = assemble_EL(g);
    const auto [w1, w2] = random_positive_pair(g, 17);
    const DiscreteFunction twice(g, 2.0 * w2.values());
    const auto prop = diaz_saa_check(twice, w2, EL);
    EXPECT_LE(std::abs(prop.margin), 1e-10);
    EXPECT_TRUE(prop.pass);
    const auto a = diaz_saa_check(w1, w2, EL);
    const auto b = diaz_saa_check(w2, w1, EL);
    EXPECT_NEAR(a.margin, b.margin, 1e-12);
    EXPECT_GE(a.margin, -1e-10);
    EXPECT_EQ(*a.get("margin_printed"), -a.margin);
}

TEST(DiazSaa, AuditHundredPairs) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto reps = diaz_saa_audit(g, 100, 7);
    ASSERT_EQ(reps.size(), 100u);
    for (const auto& r : reps) {
        EXPECT_TRUE(r.pass);
        EXPECT_GE(r.margin, -1e-10);
        EXPECT_EQ(*r.get("seed"), 7.0);
    }
}

TEST(DiazSaa, RandomPairsStayInRatioBand) {
    auto g = build_grid(-1.0, 1.0, 64);
    for (std::uint64_t k = 0; k < 50; ++k) {
        const auto [w1, w2] = random_positive_pair(g, k);
        const Eigen::ArrayXd q = w1.values().array() / w2.values().array();
        EXPECT_GE(q.minCoeff(), 0.2);
        EXPECT_LE(q.maxCoeff(), 5.0);
        EXPECT_GT(w2.values().minCoeff(), 0.0);
    }
}

TEST(DiazSaa, RejectsBadInput) {
    auto g = build_grid(-1.0, 1.0, 32);
    const auto EL = assemble_EL(g);
    const auto one = constant(g, 1.0);
    auto bad = one;
    bad.values()[3] = 0.0;
    EXPECT_THROW(diaz_saa_check(bad, one, EL), DomainError);
    EXPECT_THROW(diaz_saa_check(constant(g, 1e7), one, EL), DomainError);
    EXPECT_THROW(diaz_saa_check(constant(build_grid(-1.0, 1.0, 16), 1.0), one, EL), UsageError);
}

TEST(RayConvexity, ProportionalIsAffine) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto EL = assemble_EL(g);
    const auto w = random_positive_profile(g, 4);
    const DiscreteFunction w3(g, 3.0 * w.values());
    const auto r = ray_convexity_profile(w, w3, EL, grid_theta(21));
    ASSERT_EQ(r.rows.size(), 21u);
    for (const auto& row : r.rows) EXPECT_NEAR(row.phi_prime, r.rows[0].phi_prime, 1e-10);
    for (std::size_t i = 1; i + 1 < r.rows.size(); ++i) {
        EXPECT_NEAR(r.rows[i + 1].phi - 2.0 * r.rows[i].phi + r.rows[i - 1].phi, 0.0, 1e-10);
    }
    EXPECT_TRUE(r.phi_prime_nondecreasing);
}

TEST(RayConvexity, RandomPairsConvex) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto EL = assemble_EL(g);
    for (std::uint64_t k = 0; k < 10; ++k) {
        const auto [w1, w2] = random_positive_pair(g, 40 + k);
        const auto r = ray_convexity_profile(w1, w2, EL, grid_theta(21));
        EXPECT_TRUE(r.phi_prime_nondecreasing) << r.max_decrease;
        EXPECT_TRUE(r.chord_holds);
        EXPECT_GT(r.rows.back().phi_prime - r.rows.front().phi_prime, 0.0);
        // second differences of phi: discrete convexity, independent of phi'
        for (std::size_t i = 1; i + 1 < r.rows.size(); ++i) {
            EXPECT_GE(r.rows[i + 1].phi - 2.0 * r.rows[i].phi + r.rows[i - 1].phi, -1e-12);
        }
        // phi'(1) - phi'(0) is half the Diaz-Saa margin
        const auto d = diaz_saa_check(w1, w2, EL);
        EXPECT_NEAR(r.rows.back().phi_prime - r.rows.front().phi_prime, 0.5 * d.margin,
                    1e-10 * (1.0 + std::abs(d.margin)));
    }
}

TEST(RayConvexity, DerivativeMatchesFiniteDifference) {
    auto g = build_grid(-1.0, 1.0, 64);
    const auto EL = assemble_EL(g);
    const auto [w1, w2] = random_positive_pair(g, 5);
    const double e = 1e-6;
    for (double t : {0.2, 0.5, 0.8}) {
        const auto r = ray_convexity_profile(w1, w2, EL, {t - e, t, t + e});
        const double fd = (r.rows[2].phi - r.rows[0].phi) / (2.0 * e);
        EXPECT_NEAR(fd, r.rows[1].phi_prime, 1e-6 * std::max(1.0, std::abs(fd)));
    }
    EXPECT_THROW(ray_convexity_profile(w1, w2, EL, {0.5, 0.2}), UsageError);
    EXPECT_THROW(ray_convexity_profile(w1, w2, EL, {0.0, 1.5}), UsageError);
}

TEST(LogSobolev, IndicatorMargin) {
    auto g = build_grid(-1.0, 1.0, 512);
    const auto r = log_sobolev_check(constant(g, 1.0), assemble_EL(g));
    EXPECT_NEAR(r.margin, 2.193704, 5e-3);
    EXPECT_TRUE(r.pass);
}

TEST(LogSobolev, AuditAndScaling) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto EL = assemble_EL(g);
    for (const auto& r : log_sobolev_audit(g, 100, 3)) {
        EXPECT_GE(r.margin, -1e-9);
    }
    // margin is 2-homogeneous: rhs - lhs scales as c^2 since the log terms cancel
    const auto u = random_function(g, 8);
    const double m1 = log_sobolev_check(u, EL).margin;
    for (double c : {1e-3, 1e3}) {
        const double mc = log_sobolev_check(DiscreteFunction(g, c * u.values()), EL).margin;
        EXPECT_NEAR(mc / (c * c), m1, 1e-9 * std::max(1.0, std::abs(m1)));
    }
    EXPECT_THROW(log_sobolev_check(DiscreteFunction(g), EL), DomainError);
}

TEST(FracSobolev, AuditAndLimits) {
    auto g = build_grid(-1.0, 1.0, 128);
    for (const auto& r : frac_sobolev_audit(g, 0.2, 100, 11)) {
        EXPECT_GE(r.margin, -1e-9);
        EXPECT_EQ(*r.get("s"), 0.2);
    }
    EXPECT_THROW(frac_sobolev_check(DiscreteFunction(g), assemble_Es(g, 0.2)), DomainError);
    EXPECT_THROW(frac_sobolev_check(constant(g, 1.0), assemble_EL(g)), UsageError);
    // both sides approach |u|_2^2 as s decreases
    const auto u = DiscreteFunction::sample(g, [](double x) { return 1.0 - x * x; });
    double prev = INFINITY;
    for (double s : kSchedule) {
        const auto r = frac_sobolev_check(u, assemble_Es(g, s));
        const double gap = std::abs(r.lhs - u.l2_norm_sq()) + std::abs(r.rhs - u.l2_norm_sq());
        EXPECT_LT(gap, prev);
        prev = gap;
    }
}

TEST(WeightedExpansion, SlopeAndDegenerateFamily) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto u = DiscreteFunction::sample(g, [](double x) { return 0.5 + std::cos(kPi * x / 2.0); });
    const auto fam = make_weight_family(1.0, DiscreteFunction::sample(g, [](double x) { return x; }));
    EXPECT_GE(weighted_expansion_check(u, fam, kSchedule).slope, 1.6);
    const auto fam2 = make_weight_family(-1.0, constant(g, 0.3));
    EXPECT_GE(weighted_expansion_check(u, fam2, kSchedule).slope, 1.6);
    WeightFamily flat{0.0, constant(g, 0.0), 0.5, [](double) { return 2.0; }};
    for (const auto& row : weighted_expansion_check(u, flat, kSchedule).rows) {
        EXPECT_EQ(row.defect, 0.0);
    }
}

TEST(WeightFamily, Construction) {
    auto g = build_grid(-1.0, 1.0, 32);
    const auto f = make_weight_family(1.0, constant(g, 0.5));
    EXPECT_DOUBLE_EQ(f.p_of_s(0.1), 2.1);
    EXPECT_DOUBLE_EQ(f.delta(), 0.75);
    EXPECT_DOUBLE_EQ(f.gamma_param, 0.375);
    EXPECT_NEAR(f.a(0.1)[0], 1.05, 1e-15);
    EXPECT_NEAR(f.M_a(), std::exp(0.5), 1e-15);
    EXPECT_NEAR(f.beta(0.1), 2.0 * f.beta_threshold(0.1), 1e-12);
    EXPECT_TRUE(f.superlinear());
    EXPECT_THROW(make_weight_family(0.0, constant(g, 0.0)), DomainError);
    EXPECT_THROW(make_weight_family(4.0, constant(g, 0.0)), DomainError);
    EXPECT_THROW(make_weight_family(1.0, constant(g, -5.0)), DomainError);
    EXPECT_THROW(make_weight_family(1.0, constant(g, 0.0), 0.9), DomainError);
    EXPECT_THROW(make_weight_family(1.0, constant(g, 0.0), std::nullopt, 1.0), DomainError);
    EXPECT_NEAR(linf_bound_frac(make_weight_family(-1.0, constant(g, 0.0)), 2.0),
                linf_bound_frac(-1.0, 1.0, 2.0, 1), 1e-12);
}

TEST(Hypotheses, ZeroWeight) {
    auto g = build_grid(-1.0, 1.0, 32);
    for (double p1 : {1.0, -1.0}) {
        const auto r = hypothesis_check(make_weight_family(p1, constant(g, 0.0)), kSchedule);
        EXPECT_TRUE(r.pass) << r.note;
        EXPECT_EQ(*r.get("a3_max"), 1.0);
        EXPECT_EQ(*r.get("a3_M_a"), 1.0);
        EXPECT_EQ(*r.get("a0_max_error"), 0.0);
    }
}

TEST(Hypotheses, UnitWeightBoundedByE) {
    auto g = build_grid(-1.0, 1.0, 32);
    const auto r = hypothesis_check(make_weight_family(1.0, constant(g, 1.0)), kSchedule);
    EXPECT_TRUE(r.pass) << r.note;
    EXPECT_LE(*r.get("a3_max"), std::exp(1.0));
    for (double s : kSchedule) EXPECT_LE(std::pow(1.0 + s, 1.0 / s), std::exp(1.0));
}

TEST(Hypotheses, ShortBetaFails) {
    auto g = build_grid(-1.0, 1.0, 32);
    auto fam = make_weight_family(1.0, constant(g, 0.0));
    fam.beta_of_s = [](double s) { return 1.0 / s; };
    const auto r = hypothesis_check(fam, kSchedule);
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(*r.get("beta"), 0.0);
    EXPECT_NE(r.note.find("beta"), std::string::npos);
}

TEST(BoundaryRate, SyntheticAndErrors) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto r1 = boundary_rate_fit(sqrt_ell(g, 1.0));
    EXPECT_NEAR(r1.slope, 1.0, 1e-12);
    EXPECT_NEAR(r1.c, 1.0, 1e-12);
    const auto r3 = boundary_rate_fit(sqrt_ell(g, 3.0));
    EXPECT_NEAR(r3.slope, 1.0, 1e-12);
    EXPECT_NEAR(r3.c, 3.0, 1e-12);
    EXPECT_THROW(boundary_rate_fit(DiscreteFunction(g)), UsageError);
    EXPECT_THROW(boundary_rate_fit(constant(build_grid(-1.0, 1.0, 16), 1.0)), UsageError);
}

TEST(BoundaryRate, SublinearSolution) {
    auto g = build_grid(-1.0, 1.0, 512);
    const auto p = make_log_problem(g, -1.0, constant(g, 0.0));
    const auto s = solve_sublinear(p, std::nullopt);
    ASSERT_TRUE(s.converged);
    const auto r = boundary_rate_fit(s.solution);
    EXPECT_GE(r.slope, 0.85);
    EXPECT_LE(r.slope, 1.15);
}

TEST(Asymptotics, Superlinear) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto res = superlinear_asymptotics(make_weight_family(1.0, constant(g, 0.0)), g, kSchedule);
    ASSERT_EQ(res.rows.size(), 4u);
    for (const auto& c : res.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.note;
    EXPECT_TRUE(res.all_pass());
    for (const char* name : {"l2_gap_decreasing", "energy_limit", "norm_limit",
                             "nehari_lower_bound", "projection_limit"}) {
        EXPECT_NE(res.find(name), nullptr) << name;
    }
    EXPECT_EQ(res.find("missing"), nullptr);
    ASSERT_TRUE(res.limit.has_value());
    for (std::size_t i = 1; i < res.rows.size(); ++i) {
        EXPECT_LT(res.rows[i].l2_gap, res.rows[i - 1].l2_gap);
    }
    EXPECT_THROW(superlinear_asymptotics(make_weight_family(-1.0, constant(g, 0.0)), g, kSchedule),
                 RegimeError);
}

TEST(Asymptotics, Sublinear) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto res = sublinear_asymptotics(make_weight_family(-1.0, constant(g, 0.0)), g, kSchedule);
    ASSERT_EQ(res.rows.size(), 4u);
    for (const auto& c : res.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.note;
    for (const char* name : {"lq_convergence_q1", "lq_convergence_q2", "lq_convergence_q4",
                             "norm_bracket", "norm_lower_A", "linf_bound", "limit_uniqueness"}) {
        EXPECT_NE(res.find(name), nullptr) << name;
    }
    EXPECT_THROW(sublinear_asymptotics(make_weight_family(1.0, constant(g, 0.0)), g, kSchedule),
                 RegimeError);
    EXPECT_THROW(sublinear_asymptotics(make_weight_family(-1.0, constant(g, 0.0)), g, {0.1}),
                 UsageError);
}

TEST(Audits, ReplayableAndThreadIndependent) {
    auto g = build_grid(-1.0, 1.0, 64);
    std::vector<CheckReport> one, four;
    {
        ThreadsEnv env("1");
        one = diaz_saa_audit(g, 20, 99);
    }
    {
        ThreadsEnv env("4");
        four = diaz_saa_audit(g, 20, 99);
    }
    ASSERT_EQ(one.size(), four.size());
    for (std::size_t k = 0; k < one.size(); ++k) {
        EXPECT_EQ(one[k].margin, four[k].margin);
        EXPECT_EQ(*one[k].get("draw"), static_cast<double>(k));
    }
    EXPECT_NE(diaz_saa_audit(g, 1, 100)[0].margin, one[0].margin);
    EXPECT_THROW(diaz_saa_audit(g, 0, 1), UsageError);
}

#include "loglap/app/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "loglap/constants.hpp"
#include "loglap/errors.hpp"
#include "loglap/parallel.hpp"
#include "loglap/rng.hpp"
#include "loglap/spectral.hpp"
#include "loglap/version.hpp"

namespace loglap::app {

namespace {

using nlohmann::json;

constexpr int kAuditCount = 100;

class Runner {
public:
    explicit Runner(const RunConfig& cfg) : cfg_(cfg), grid_(build_grid(cfg.a, cfg.b, cfg.n)) {}

    ReportBundle run() {
        switch (cfg_.command) {
            case Command::Constants: stage("constants", [&] { constants(); }); break;
            case Command::Eigen: stage("eigen", [&] { eigen(); }); break;
            case Command::SolveLog:
                stage("solve-log", [&] { solve_log(require_lambda("solve-log"), "solve_log"); });
                break;
            case Command::SolveFrac:
                stage("solve-frac", [&] { solve_frac_cmd(require_p1("solve-frac"), "solve_frac"); });
                break;
            case Command::Asymptotics:
                stage("asymptotics",
                      [&] { asymptotics(require_p1("asymptotics"), "asymptotics"); });
                break;
            case Command::Verify: stage("verify " + cfg_.check, [&] { verify(cfg_.check, false); }); break;
            case Command::All: all(); break;
        }
        return std::move(bundle_);
    }

private:
    const RunConfig& cfg_;
    GridPtr grid_;
    ReportBundle bundle_;

    void stage(const std::string& name, const std::function<void()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bundle_.stages.push_back({name, dt});
    }

    double require_lambda(const char* who) const {
        if (!cfg_.lambda) throw ConfigError(std::string("config: ") + who + " needs 'lambda'");
        return *cfg_.lambda;
    }

    double require_p1(const char* who) const {
        if (!cfg_.p1) throw ConfigError(std::string("config: ") + who + " needs 'p1'");
        return *cfg_.p1;
    }

    void fail(const std::string& msg) {
        bundle_.overall_pass = false;
        bundle_.messages.push_back(msg);
    }

    void record(const std::vector<CheckReport>& checks, const std::string& file) {
        int failed = 0;
        for (const auto& c : checks) {
            if (!c.pass) ++failed;
        }
        if (failed > 0) fail(file + ": " + std::to_string(failed) + " check(s) failed");
        bundle_.add_table(check_table(file + ".csv", checks));
    }

    void not_converged(const std::string& what) {
        bundle_.non_converged = true;
        fail(what + ": solver did not converge");
    }

    LogProblem log_problem(double lambda) const {
        return make_log_problem(grid_, lambda, omega_on(cfg_.omega, grid_),
                                omega_prime_on(cfg_.omega, grid_));
    }

    WeightFamily family(double p1) const { return make_weight_family(p1, omega_on(cfg_.omega, grid_)); }

    SolveReport solve_log_problem(const LogProblem& prob, bool exploratory) {
        SolveOptions opts = cfg_.tol.solve;
        opts.allow_no_existence = cfg_.allow_no_existence || exploratory;
        try {
            return prob.lambda > 0.0 ? solve_superlinear(prob, std::nullopt, opts)
                                     : solve_sublinear(prob, std::nullopt, opts);
        } catch (const RegimeError& e) {
            throw ConfigError(e.what());
        }
    }

    void constants() {
        json doc;
        doc["dimension"] = json::array();
        for (int N = 1; N <= 3; ++N) {
            const DimensionConstants d = dimension_constants(N);
            doc["dimension"].push_back({{"N", N},
                                        {"c_N", d.c_N},
                                        {"rho_N", d.rho_N},
                                        {"a_N", d.a_N},
                                        {"kappa_N", d.kappa_N}});
        }
        doc["fractional"] = json::array();
        for (int N = 1; N <= 3; ++N) {
            for (double s : cfg_.s_list) {
                const FracConstants f = frac_constants(N, s);
                doc["fractional"].push_back({{"N", N},
                                             {"s", s},
                                             {"c_Ns", f.c_Ns},
                                             {"kappa_Ns", f.kappa_Ns},
                                             {"two_star", f.two_star},
                                             {"kappa_root", kappa_root(N, s)}});
            }
        }
        bool finite = true;
        for (const auto& group : {doc["dimension"], doc["fractional"]}) {
            for (const auto& row : group) {
                for (const auto& [k, v] : row.items()) {
                    if (v.is_number_float() && !std::isfinite(v.get<double>())) finite = false;
                }
            }
        }
        if (!finite) fail("constants: non-finite value");
        bundle_.files.emplace_back("constants.json", doc.dump(2) + "\n");
    }

    void eigen() {
        const EigAsymptotics ea = eig_asymptotics(grid_, cfg_.s_list);
        Table t{"eigen.csv",
                {"s", "lambda1s", "diff_quotient", "ln_lambda1s", "lambda1L", "eigfun_l2_gap"},
                {}};
        for (const auto& r : ea.rows) {
            t.rows.push_back({format_double(r.s), format_double(r.lambda1s),
                              format_double(r.diff_quotient), format_double(r.ln_lambda1s),
                              format_double(ea.lambda1L), format_double(r.eigfun_l2_gap)});
        }
        bundle_.add_table(t);
        if (!ea.quotient_gap_decreasing) fail("eigen: difference-quotient gap not decreasing");
        if (!ea.log_bound_holds) fail("eigen: lambda1L <= ln lambda1s violated");
        if (!ea.eigfun_gap_decreasing) fail("eigen: eigenfunction gap not decreasing");
    }

    static Table solution_table(std::string file, const DiscreteFunction& u) {
        Table t{std::move(file), {"x", "u"}, {}};
        for (int i = 0; i < u.size(); ++i) {
            t.rows.push_back({format_double(u.grid()->midpoints[i]), format_double(u[i])});
        }
        return t;
    }

    static Table summary_table(std::string file, const std::string& param_name, double param,
                               const SolveReport& r) {
        Table t{std::move(file),
                {param_name, "energy", "nehari_residual", "grad_norm", "iterations", "converged",
                 "sign_pattern", "sup_norm", "energy_identity_error", "no_existence_regime",
                 "stop_reason"},
                {}};
        t.rows.push_back({format_double(param), format_double(r.energy),
                          format_double(r.nehari_residual), format_double(r.grad_norm),
                          std::to_string(r.iterations), format_bool(r.converged),
                          sign_pattern_name(r.sign_pattern), format_double(r.sup_norm),
                          format_double(r.energy_identity_error),
                          format_bool(r.no_existence_regime), r.stop_reason});
        return t;
    }

    void solve_log(double lambda, const std::string& base) {
        const LogProblem prob = log_problem(lambda);
        const SolveReport r = solve_log_problem(prob, false);
        bundle_.add_table(solution_table(base + ".csv", r.solution));
        bundle_.add_table(summary_table(base + "_summary.csv", "lambda", lambda, r));
        if (!r.converged) not_converged(base);
        if (r.no_existence_regime) fail(base + ": no-existence regime run");
    }

    void solve_frac_cmd(double p1, const std::string& base) {
        const double s = cfg_.s_list.front();
        const WeightFamily fam = family(p1);
        const FracProblem prob = make_frac_problem(grid_, s, fam.p_of_s(s), fam.a(s));
        const SolveReport r = solve_frac(prob, std::nullopt, cfg_.tol.solve);
        bundle_.add_table(solution_table(base + ".csv", r.solution));
        bundle_.add_table(summary_table(base + "_summary.csv", "s", s, r));
        if (!r.converged) not_converged(base);
    }

    void asymptotics(double p1, const std::string& base) {
        const WeightFamily fam = family(p1);
        const AsymptoticsResult res = p1 > 0.0
                                          ? superlinear_asymptotics(fam, grid_, cfg_.s_list, cfg_.tol.solve)
                                          : sublinear_asymptotics(fam, grid_, cfg_.s_list, cfg_.tol.solve);
        bundle_.add_table(asymptotics_table(base + ".csv", res.rows));
        record(res.checks, base + "_checks");
        for (const auto& f : res.failures) {
            bundle_.non_converged = true;
            fail(base + ": " + f);
        }
    }

    void verify(const std::string& check, bool sweep) {
        const std::string file = "verify_" + underscore(check);
        const Tolerances& tol = cfg_.tol;
        if (check == "diaz-saa") {
            record(diaz_saa_audit(grid_, kAuditCount, cfg_.seed, tol.diaz_saa_tol), file);
        } else if (check == "log-sobolev") {
            record(log_sobolev_audit(grid_, kAuditCount, cfg_.seed, tol.check_tol), file);
        } else if (check == "frac-sobolev") {
            const double s = cfg_.s_list_given ? cfg_.s_list.front() : 0.2;
            record(frac_sobolev_audit(grid_, s, kAuditCount, cfg_.seed, tol.check_tol), file);
        } else if (check == "ray-convexity") {
            ray_convexity(file);
        } else if (check == "pohozaev") {
            std::vector<CheckReport> out;
            const std::vector<double> lambdas =
                cfg_.lambda ? std::vector<double>{*cfg_.lambda} : std::vector<double>{-1.0, 1.0};
            for (double lambda : lambdas) {
                const LogProblem prob = log_problem(lambda);
                const SolveReport r = solve_log_problem(prob, false);
                if (!r.converged) not_converged("pohozaev");
                out.push_back(pohozaev_residual(r.solution, prob, tol.pohozaev_rel_tol));
            }
            record(out, file);
        } else if (check == "obstruction") {
            // the sweep uses a subcritical lambda so that `all` stays meaningful
            const double lambda = cfg_.lambda.value_or(sweep ? 2.0 : 4.0);
            const LogProblem prob = log_problem(lambda);
            const SolveReport r = solve_log_problem(prob, true);
            if (!r.converged) not_converged("obstruction");
            CheckReport c = critical_obstruction_check(prob, r.solution);
            c.add("no_existence_regime", r.no_existence_regime);
            record({c}, file);
        } else if (check == "boundary-rate") {
            const double lambda = cfg_.lambda.value_or(-1.0);
            if (!(lambda < 0.0)) throw ConfigError("config: boundary-rate needs lambda < 0");
            const SolveReport r = solve_log_problem(log_problem(lambda), false);
            if (!r.converged) not_converged("boundary-rate");
            CheckReport c;
            c.name = "boundary_rate";
            try {
                const BoundaryRate br = boundary_rate_fit(r.solution);
                c.lhs = br.slope;
                c.rhs = 1.0;
                c.margin = std::abs(br.slope - 1.0);
                c.tolerance = 0.15;
                c.pass = c.margin <= c.tolerance;
                c.add("c", br.c);
            } catch (const UsageError& e) {
                c.lhs = c.rhs = c.margin = std::nan("");
                c.note = e.what();
            }
            c.add("lambda", lambda);
            record({c}, file);
        } else if (check == "hypotheses") {
            record({hypothesis_check(family(cfg_.p1.value_or(1.0)), cfg_.s_list)}, file);
        } else if (check == "expansion") {
            expansion(file);
        }
    }

    void ray_convexity(const std::string& file) {
        const SymmetricForm EL = assemble_EL(grid_);
        const auto [w1, w2] = random_positive_pair(grid_, derive_seed(cfg_.seed, 0));
        std::vector<double> thetas;
        for (int k = 0; k <= 20; ++k) thetas.push_back(k / 20.0);
        const RayConvexity rc = ray_convexity_profile(w1, w2, EL, thetas, cfg_.tol.diaz_saa_tol);
        Table prof{file + "_profile.csv", {"theta", "phi", "phi_prime"}, {}};
        for (const auto& r : rc.rows) {
            prof.rows.push_back(
                {format_double(r.theta), format_double(r.phi), format_double(r.phi_prime)});
        }
        bundle_.add_table(prof);
        CheckReport mono;
        mono.name = "phi_prime_nondecreasing";
        mono.lhs = rc.max_decrease;
        mono.rhs = cfg_.tol.diaz_saa_tol;
        mono.margin = mono.rhs - mono.lhs;
        mono.tolerance = cfg_.tol.diaz_saa_tol;
        mono.pass = rc.phi_prime_nondecreasing;
        mono.add("seed", static_cast<double>(cfg_.seed));
        mono.add("phi_prime_spread", rc.rows.back().phi_prime - rc.rows.front().phi_prime);
        CheckReport chord;
        chord.name = "midpoint_chord";
        chord.lhs = rc.chord_gap;
        chord.rhs = cfg_.tol.diaz_saa_tol;
        chord.margin = chord.rhs - chord.lhs;
        chord.tolerance = cfg_.tol.diaz_saa_tol;
        chord.pass = rc.chord_holds;
        chord.add("seed", static_cast<double>(cfg_.seed));
        record({mono, chord}, file);
    }

    void expansion(const std::string& file) {
        const double p1 = cfg_.p1.value_or(1.0);
        const WeightFamily fam = family(p1);
        std::vector<CheckReport> out;
        const std::vector<std::function<double(double)>> profiles = {
            [](double t) { return 1.0 - t * t; },
            [](double t) { return std::cos(0.5 * kPi * t) * (1.2 + 0.5 * t); },
            [](double t) { return std::exp(-2.0 * t * t) * (1.0 - 0.5 * t * t); },
        };
        const double a = cfg_.a;
        const double L = cfg_.b - cfg_.a;
        for (std::size_t k = 0; k < profiles.size(); ++k) {
            const DiscreteFunction u = DiscreteFunction::sample(
                grid_, [&](double x) { return profiles[k](2.0 * (x - a) / L - 1.0); });
            for (const bool weighted : {false, true}) {
                const ExpansionResult er = weighted ? weighted_expansion_check(u, fam, cfg_.s_list)
                                                    : expansion_check(grid_, u, cfg_.s_list);
                CheckReport c;
                c.name = std::string(weighted ? "weighted_expansion_" : "form_expansion_") +
                         std::to_string(k);
                c.lhs = er.slope;
                c.rhs = 1.6;
                c.margin = er.slope - 1.6;
                c.pass = er.slope >= 1.6;
                for (const auto& r : er.rows) c.add("defect_s=" + format_double(r.s), r.defect);
                if (weighted) c.add("p1", p1);
                out.push_back(std::move(c));
            }
        }
        record(out, file);
    }

    static std::string underscore(std::string s) {
        for (char& c : s) {
            if (c == '-') c = '_';
        }
        return s;
    }

    void all() {
        stage("constants", [&] { constants(); });
        stage("eigen", [&] { eigen(); });
        if (cfg_.lambda) {
            stage("solve-log", [&] { solve_log(*cfg_.lambda, "solve_log"); });
        } else {
            stage("solve-log superlinear", [&] { solve_log(1.0, "solve_log_superlinear"); });
            stage("solve-log sublinear", [&] { solve_log(-1.0, "solve_log_sublinear"); });
        }
        stage("solve-frac", [&] { solve_frac_cmd(cfg_.p1.value_or(1.0), "solve_frac"); });
        if (cfg_.p1) {
            stage("asymptotics", [&] { asymptotics(*cfg_.p1, "asymptotics"); });
        } else {
            stage("asymptotics superlinear", [&] { asymptotics(1.0, "asymptotics_superlinear"); });
            stage("asymptotics sublinear", [&] { asymptotics(-1.0, "asymptotics_sublinear"); });
        }
        for (const auto& check : verify_checks()) {
            stage("verify " + check, [&] { verify(check, true); });
        }
    }
};

}  // namespace

void ReportBundle::add_table(const Table& t) { files.emplace_back(t.file, to_csv(t)); }

int ReportBundle::exit_code() const {
    if (non_converged) return kExitNoConvergence;
    return overall_pass ? kExitPass : kExitCheckFailed;
}

ReportBundle execute(const RunConfig& cfg) {
    validate(cfg);
    return Runner(cfg).run();
}

std::string manifest_json(const RunConfig* cfg, const ReportBundle& bundle, int exit_code,
                          const std::string& error) {
    json m;
    m["tool"] = "loglap";
    m["version"] = kVersion;
    m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                         std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    m["compiler"] = __VERSION__;
    m["threads"] = worker_count();
    if (cfg) {
        m["config"] = cfg->echo.empty() ? json::object() : json::parse(cfg->echo);
        json r;
        r["command"] = command_name(cfg->command);
        if (!cfg->check.empty()) r["check"] = cfg->check;
        r["n"] = cfg->n;
        r["domain"] = {cfg->a, cfg->b};
        r["lambda"] = cfg->lambda ? json(*cfg->lambda) : json(nullptr);
        r["omega"] = cfg->omega.text;
        r["s_list"] = cfg->s_list;
        r["p1"] = cfg->p1 ? json(*cfg->p1) : json(nullptr);
        r["seed"] = cfg->seed;
        r["out_dir"] = cfg->out_dir;
        r["allow_no_existence"] = cfg->allow_no_existence;
        m["resolved"] = r;
    }
    m["stages"] = json::array();
    for (const auto& s : bundle.stages) m["stages"].push_back({{"name", s.name}, {"seconds", s.seconds}});
    m["files"] = json::array();
    for (const auto& f : bundle.files) m["files"].push_back(f.first);
    m["messages"] = bundle.messages;
    m["overall_pass"] = exit_code == kExitPass;
    m["exit_code"] = exit_code;
    if (!error.empty()) m["error"] = error;
    return m.dump(2) + "\n";
}

int write_bundle(const std::string& dir,
                 const std::vector<std::pair<std::string, std::string>>& files) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) return kExitIo;
    for (const auto& [name, content] : files) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.close();
        if (!out) return kExitIo;
    }
    return kExitPass;
}

}  // namespace loglap::app

#include "loglap/spectral.hpp"

#include <cmath>
#include <string>

#include "loglap/errors.hpp"

namespace loglap {

namespace {

Eigen::VectorXd mass_diagonal(const SymmetricForm& M) {
    const Eigen::VectorXd d = M.matrix.diagonal();
    const double off = (M.matrix - Eigen::MatrixXd(d.asDiagonal())).cwiseAbs().maxCoeff();
    if (off != 0.0 || (d.array() <= 0.0).any()) {
        throw UsageError("smallest_eig: M must be a positive diagonal mass form");
    }
    return d;
}

}  // namespace

double gershgorin_lower_bound(const SymmetricForm& K, const SymmetricForm& M) {
    const Eigen::VectorXd d = mass_diagonal(M);
    const Eigen::VectorXd w = d.cwiseSqrt().cwiseInverse();
    double lo = std::numeric_limits<double>::infinity();
    const Eigen::Index n = K.matrix.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        double radius = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i != j) {
                radius += std::abs(K.matrix(i, j)) * w[i];
            }
        }
        lo = std::min(lo, (K.matrix(j, j) * w[j] - radius) * w[j]);
    }
    return lo;
}

EigenPair smallest_eig(const SymmetricForm& K, const SymmetricForm& M, const EigenOptions& opts) {
    const Eigen::Index n = K.matrix.rows();
    if (n == 0 || K.matrix.cols() != n || M.matrix.rows() != n) {
        throw UsageError("smallest_eig: dimension mismatch");
    }
    const Eigen::VectorXd m = mass_diagonal(M);
    const Eigen::VectorXd m_inv = m.cwiseInverse();

    double sigma = gershgorin_lower_bound(K, M) - 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(K.matrix - sigma * Eigen::MatrixXd(m.asDiagonal()));
    if (llt.info() != Eigen::Success) {
        throw SolverError("smallest_eig: shifted pencil not positive definite", NAN);
    }

    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    x /= std::sqrt(x.dot(m.cwiseProduct(x)));
    Eigen::VectorXd Kx = K.matrix * x;
    double rho = x.dot(Kx);
    int updates = 0;
    double residual = NAN;

    for (int it = 1; it <= opts.max_iter; ++it) {
        Eigen::VectorXd y = llt.solve(m.cwiseProduct(x));
        x = y / std::sqrt(y.dot(m.cwiseProduct(y)));
        Kx = K.matrix * x;
        const double rho_new = x.dot(Kx);
        const Eigen::VectorXd r = Kx - rho_new * m.cwiseProduct(x);
        residual = r.norm() / x.norm();
        const double change = std::abs(rho_new - rho) / std::max(1.0, std::abs(rho_new));
        rho = rho_new;

        if (change <= opts.tol_value && residual <= opts.tol_residual) {
            if (x.sum() < 0.0) {
                x = -x;
            }
            EigenPair out{rho, DiscreteFunction(K.grid, x), residual, it};
            return out;
        }

        // move the shift up toward rho once the residual localizes it; the
        // Cholesky factorization certifies the new shift is still below
        // the spectrum
        if (updates < opts.max_shift_updates) {
            const double res_m = std::sqrt(r.dot(m_inv.cwiseProduct(r)));
            const double candidate = rho - std::max(4.0 * res_m, 1e-8 * (1.0 + std::abs(rho)));
            if (candidate > sigma + 1e-3 * (rho - sigma)) {
                Eigen::LLT<Eigen::MatrixXd> trial(K.matrix - candidate * Eigen::MatrixXd(m.asDiagonal()));
                ++updates;
                if (trial.info() == Eigen::Success) {
                    sigma = candidate;
                    llt = std::move(trial);
                }
            }
        }
    }
    throw SolverError("smallest_eig: no convergence after " + std::to_string(opts.max_iter) +
                          " iterations, residual " + std::to_string(residual),
                      residual);
}

EigAsymptotics eig_asymptotics(const GridPtr& grid, const std::vector<double>& s_list) {
    if (s_list.size() < 3) {
        throw UsageError("eig_asymptotics: need at least three values of s");
    }
    for (std::size_t i = 0; i < s_list.size(); ++i) {
        if (!(s_list[i] > 0.0) || !(s_list[i] < 0.25)) {
            throw DomainError("eig_asymptotics: s outside (0, 1/4)");
        }
        if (i > 0 && !(s_list[i] < s_list[i - 1])) {
            throw UsageError("eig_asymptotics: s list must be strictly decreasing");
        }
    }
    const SymmetricForm M = assemble_mass(grid);
    const EigenPair L = smallest_eig(assemble_EL(grid), M);

    EigAsymptotics out;
    out.lambda1L = L.value;
    out.quotient_gap_decreasing = true;
    out.log_bound_holds = true;
    out.eigfun_gap_decreasing = true;
    for (double s : s_list) {
        const EigenPair P = smallest_eig(assemble_Es(grid, s), M);
        EigAsymptoticsRow row;
        row.s = s;
        row.lambda1s = P.value;
        row.diff_quotient = (P.value - 1.0) / s;
        row.ln_lambda1s = std::log(P.value);
        const DiscreteFunction gap(grid, P.vector.values() - L.vector.values());
        row.eigfun_l2_gap = gap.l2_norm();
        if (!out.rows.empty()) {
            const auto& prev = out.rows.back();
            if (!(std::abs(row.diff_quotient - out.lambda1L) <
                  std::abs(prev.diff_quotient - out.lambda1L))) {
                out.quotient_gap_decreasing = false;
            }
            if (!(row.eigfun_l2_gap < prev.eigfun_l2_gap)) {
                out.eigfun_gap_decreasing = false;
            }
        }
        if (!(out.lambda1L <= row.ln_lambda1s + 1e-8)) {
            out.log_bound_holds = false;
        }
        out.rows.push_back(row);
    }
    return out;
}

double poincare_Sln(const GridPtr& grid) {
    const EigenPair p = smallest_eig(assemble_E(grid), assemble_mass(grid));
    if (!(p.value > 0.0)) {
        throw SolverError("poincare_Sln: non-positive smallest eigenvalue", p.residual);
    }
    return 1.0 / p.value;
}

}  // namespace loglap

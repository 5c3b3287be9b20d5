#pragma once

#include <vector>

#include "loglap/discretize.hpp"

namespace loglap {

struct EigenPair {
    double value = 0.0;
    DiscreteFunction vector;  // mass-normalized, nonnegative mean
    double residual = 0.0;    // |K v - value M v| / |v|, Euclidean
    int iterations = 0;
};

struct EigenOptions {
    double tol_value = 1e-12;
    double tol_residual = 1e-10;
    int max_iter = 500;
    int max_shift_updates = 6;
};

// Smallest eigenpair of the pencil (K, M) by shifted inverse iteration.
// M must be the diagonal mass form.
EigenPair smallest_eig(const SymmetricForm& K, const SymmetricForm& M,
                       const EigenOptions& opts = {});

// lower end of the Gershgorin disc union of M^{-1/2} K M^{-1/2}
double gershgorin_lower_bound(const SymmetricForm& K, const SymmetricForm& M);

struct EigAsymptoticsRow {
    double s;
    double lambda1s;
    double diff_quotient;  // (lambda1s - 1)/s
    double ln_lambda1s;
    double eigfun_l2_gap;  // |phi_s - phi_L|_2
};

struct EigAsymptotics {
    double lambda1L = 0.0;
    std::vector<EigAsymptoticsRow> rows;
    bool quotient_gap_decreasing = false;
    bool log_bound_holds = false;
    bool eigfun_gap_decreasing = false;
};

EigAsymptotics eig_asymptotics(const GridPtr& grid, const std::vector<double>& s_list);

double poincare_Sln(const GridPtr& grid);

}  // namespace loglap

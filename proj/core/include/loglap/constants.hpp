#pragma once

#include <vector>

namespace loglap {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kLn2 = 0.69314718055994530941723212145817657;

// Gamma function for real x, not a non-positive integer.
double gamma_fn(double x);
// ln|Gamma(x)|
double log_gamma(double x);
double digamma(double x);

struct DimensionConstants {
    int N = 0;
    double c_N = 0.0;
    double rho_N = 0.0;
    double a_N = 0.0;
    double kappa_N = 0.0;
};

struct FracConstants {
    int N = 0;
    double s = 0.0;
    double c_Ns = 0.0;
    double kappa_Ns = 0.0;
    double two_star = 0.0;
};

DimensionConstants dimension_constants(int N);
FracConstants frac_constants(int N, double s);

// kappa_{N,s}^{1/s}, evaluated in log form so that s -> 0 stays accurate
double kappa_root(int N, double s);

struct KappaLimitRow {
    double s;
    double value;
};

struct KappaLimit {
    std::vector<KappaLimitRow> rows;
    double kappa_N = 0.0;
    double last_distance = 0.0;
    bool monotone = false;
};

KappaLimit kappa_limit_check(int N, const std::vector<double>& s_list);

// boundary rate l(r) = -1/ln(min(r, 1/10)), l(0) = 0
double ell(double r);

double linf_bound_log(double lambda, double omega_sup, double domain_measure, int N);

// M_a (R^2 e^{1/2 - rho_N})^{-1/p1}, R = 2 diam
double linf_bound_frac(double p1, double M_a, double domain_diameter, int N);

double nehari_l2_lower_bound(double lambda, double omega_sup, double lambda1L, int N);

}  // namespace loglap

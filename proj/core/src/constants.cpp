#include "loglap/constants.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "loglap/errors.hpp"

namespace loglap {

namespace {

// Lanczos approximation, g = 7, n = 9
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
};

constexpr double kHalfLog2Pi = 0.91893853320467274178032973640561764;

bool is_nonpositive_integer(double x) {
    return x <= 0.0 && x == std::floor(x);
}

double lanczos_sum(double xm1) {
    double acc = kLanczos[0];
    for (std::size_t k = 1; k < kLanczos.size(); ++k) {
        acc += kLanczos[k] / (xm1 + static_cast<double>(k));
    }
    return acc;
}

}  // namespace

double gamma_fn(double x) {
    if (std::isnan(x) || is_nonpositive_integer(x)) {
        throw DomainError("gamma: pole at non-positive integer");
    }
    if (x < 0.5) {
        return kPi / (std::sin(kPi * x) * gamma_fn(1.0 - x));
    }
    // integers and half-integers by recurrence from 1 and sqrt(pi)
    if (x <= 171.0 && std::floor(2.0 * x) == 2.0 * x) {
        double acc = (std::floor(x) == x) ? 1.0 : std::sqrt(kPi);
        for (double k = (std::floor(x) == x) ? 1.0 : 0.5; k < x; k += 1.0) acc *= k;
        return acc;
    }
    const double xm1 = x - 1.0;
    const double t = xm1 + kLanczosG + 0.5;
    // split the power to postpone overflow
    const double half = std::pow(t, 0.5 * (xm1 + 0.5));
    return 2.5066282746310005024 * half * (half * std::exp(-t)) * lanczos_sum(xm1);
}

double log_gamma(double x) {
    if (std::isnan(x) || is_nonpositive_integer(x)) {
        throw DomainError("log_gamma: pole at non-positive integer");
    }
    if (x < 0.5) {
        return std::log(kPi / std::abs(std::sin(kPi * x))) - log_gamma(1.0 - x);
    }
    const double xm1 = x - 1.0;
    const double t = xm1 + kLanczosG + 0.5;
    return kHalfLog2Pi + (xm1 + 0.5) * std::log(t) - t + std::log(lanczos_sum(xm1));
}

double digamma(double x) {
    if (std::isnan(x) || is_nonpositive_integer(x)) {
        throw DomainError("digamma: pole at non-positive integer");
    }
    if (x < 0.0) {
        return digamma(1.0 - x) - kPi / std::tan(kPi * x);
    }
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double r = 1.0 / (x * x);
    // Bernoulli tail, B_{2k}/(2k x^{2k})
    const double tail =
        r * (1.0 / 12 -
             r * (1.0 / 120 -
                  r * (1.0 / 252 -
                       r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r / 12))))));
    return acc + std::log(x) - 0.5 / x - tail;
}

DimensionConstants dimension_constants(int N) {
    if (N < 1) {
        throw DomainError("dimension_constants: N must be >= 1");
    }
    const double n = static_cast<double>(N);
    const double psi_half = digamma(0.5 * n);
    const double lg_ratio = log_gamma(n) - log_gamma(0.5 * n);

    DimensionConstants dc;
    dc.N = N;
    if (N <= 300) {
        // pi^{N/2} built from sqrt(pi) so that c_1 = 1 exactly
        const double pi_pow = std::pow(kPi, N / 2) * (N % 2 ? std::sqrt(kPi) : 1.0);
        dc.c_N = gamma_fn(0.5 * n) / pi_pow;
    } else {
        dc.c_N = std::exp(-0.5 * n * std::log(kPi) + log_gamma(0.5 * n));
    }
    dc.rho_N = 2.0 * kLn2 + psi_half - kEulerGamma;
    dc.a_N = (2.0 / n) * lg_ratio - std::log(4.0 * kPi) - 2.0 * psi_half;
    dc.kappa_N = std::exp((2.0 / n) * lg_ratio - std::log(4.0 * kPi) - 2.0 * psi_half);
    return dc;
}

FracConstants frac_constants(int N, double s) {
    if (N < 1) {
        throw DomainError("frac_constants: N must be >= 1");
    }
    const double n = static_cast<double>(N);
    if (!(s > 0.0) || !(s < std::min(1.0, 0.5 * n))) {
        throw DomainError("frac_constants: s outside (0, min(1, N/2))");
    }
    FracConstants fc;
    fc.N = N;
    fc.s = s;
    fc.c_Ns = s * std::exp(2.0 * s * kLn2 - 0.5 * n * std::log(kPi) +
                           log_gamma(0.5 * (n + 2.0 * s)) - log_gamma(1.0 - s));
    fc.kappa_Ns = std::exp(s * std::log(kappa_root(N, s)));
    fc.two_star = 2.0 * n / (n - 2.0 * s);
    return fc;
}

double kappa_root(int N, double s) {
    if (N < 1) {
        throw DomainError("kappa_root: N must be >= 1");
    }
    const double n = static_cast<double>(N);
    if (!(s > 0.0) || !(s < 0.5 * n)) {
        throw DomainError("kappa_root: s outside (0, N/2)");
    }
    const double lg_ratio = log_gamma(n) - log_gamma(0.5 * n);
    const double log_root = -2.0 * kLn2 - std::log(kPi) +
                            (log_gamma(0.5 * (n - 2.0 * s)) - log_gamma(0.5 * (n + 2.0 * s))) / s +
                            (2.0 / n) * lg_ratio;
    return std::exp(log_root);
}

KappaLimit kappa_limit_check(int N, const std::vector<double>& s_list) {
    if (s_list.empty()) {
        throw UsageError("kappa_limit_check: empty s list");
    }
    for (std::size_t i = 0; i < s_list.size(); ++i) {
        if (!(s_list[i] > 0.0) || !(s_list[i] < 0.25)) {
            throw DomainError("kappa_limit_check: s outside (0, 1/4)");
        }
        if (i > 0 && !(s_list[i] < s_list[i - 1])) {
            throw UsageError("kappa_limit_check: s list must be strictly decreasing");
        }
    }
    KappaLimit out;
    out.kappa_N = dimension_constants(N).kappa_N;
    out.monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (double s : s_list) {
        const double v = kappa_root(N, s);
        out.rows.push_back({s, v});
        const double d = std::abs(v - out.kappa_N);
        if (d > prev) {
            out.monotone = false;
        }
        prev = d;
    }
    out.last_distance = prev;
    return out;
}

double ell(double r) {
    if (std::isnan(r) || r < 0.0) {
        throw DomainError("ell: r must be nonnegative");
    }
    if (r == 0.0) {
        return 0.0;
    }
    return -1.0 / std::log(std::min(r, 0.1));
}

double linf_bound_log(double lambda, double omega_sup, double domain_measure, int N) {
    if (!(lambda < 0.0)) {
        throw DomainError("linf_bound_log: bound stated only for lambda < 0");
    }
    if (omega_sup < 0.0 || !(domain_measure > 0.0)) {
        throw DomainError("linf_bound_log: need omega_sup >= 0 and |Omega| > 0");
    }
    const DimensionConstants dc = dimension_constants(N);
    return std::exp((omega_sup + 2.0 * (dc.c_N * domain_measure - dc.rho_N)) / lambda);
}

double linf_bound_frac(double p1, double M_a, double domain_diameter, int N) {
    if (!(p1 < 0.0)) {
        throw DomainError("linf_bound_frac: requires p'(0) < 0");
    }
    if (!(M_a > 0.0) || !std::isfinite(M_a) || !(domain_diameter > 0.0)) {
        throw DomainError("linf_bound_frac: need finite M_a > 0 and diameter > 0");
    }
    const DimensionConstants dc = dimension_constants(N);
    const double R = 2.0 * domain_diameter;
    const double log_base = 2.0 * std::log(R) + 0.5 - dc.rho_N;
    return M_a * std::exp(-log_base / p1);
}

double nehari_l2_lower_bound(double lambda, double omega_sup, double lambda1L, int N) {
    const DimensionConstants dc = dimension_constants(N);
    const double n = static_cast<double>(N);
    // lambda = 4/N is the finite endpoint of the formula, kept for the limit case
    if (!(lambda > 0.0) || lambda > 4.0 / n) {
        throw DomainError("nehari_l2_lower_bound: lambda outside (0, 4/N]");
    }
    const double zeta = lambda * n / 4.0;
    return std::exp(n * (1.0 - zeta) / (4.0 * zeta) * lambda1L - 0.25 * n * dc.a_N -
                    n * omega_sup / (4.0 * zeta));
}

}  // namespace loglap

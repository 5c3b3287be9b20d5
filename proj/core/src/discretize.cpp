#include "loglap/discretize.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "loglap/constants.hpp"
#include "loglap/errors.hpp"
#include "loglap/fit.hpp"
#include "loglap/parallel.hpp"

namespace loglap {

namespace {

// second antiderivative of 1_{z<1}/z, C^1 across z = 1
double phi_near(double z) {
    if (z <= 0.0) {
        return 0.0;
    }
    if (z >= 1.0) {
        return -1.0;
    }
    return z * std::log(z) - z;
}

// second antiderivative of 1_{z>=1}/z
double phi_far(double z) {
    if (z <= 1.0) {
        return 0.0;
    }
    return z * std::log(z) - z + 1.0;
}

// antiderivative of -ln(min(t, 1))
double lambda_ext(double t) {
    if (t <= 0.0) {
        return 0.0;
    }
    if (t >= 1.0) {
        return 1.0;
    }
    return t - t * std::log(t);
}

// (m+1) ln(1+1/m) + (m-1) ln(1-1/m), m >= 1
double log_second_difference(int m) {
    const double md = static_cast<double>(m);
    if (m == 1) {
        return 2.0 * kLn2;
    }
    return (md + 1.0) * std::log1p(1.0 / md) + (md - 1.0) * std::log1p(-1.0 / md);
}

// (m+1)^q - 2 m^q + (m-1)^q, m >= 1
double power_second_difference(int m, double q) {
    const double md = static_cast<double>(m);
    return std::pow(md, q) *
           (std::expm1(q * std::log1p(1.0 / md)) + std::expm1(q * std::log1p(-1.0 / md)));
}

void check_grid(const GridPtr& grid) {
    if (!grid || grid->n < 8 || grid->n % 2 != 0) {
        throw UsageError("invalid grid");
    }
}

// G_ii = scale (sum_{j != i} K_|i-j| + X_i), G_ij = -scale K_|i-j|
Eigen::MatrixXd build_dirichlet_form(const KernelTables& t, double scale) {
    const int n = static_cast<int>(t.exterior.size());
    Eigen::MatrixXd G(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t col) {
        const int j = static_cast<int>(col);
        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == j) {
                continue;
            }
            const double k = t.interior[static_cast<std::size_t>(std::abs(i - j))];
            diag += k;
            G(i, j) = -scale * k;
        }
        G(j, j) = scale * (diag + t.exterior[col]);
    });
    return G;
}

}  // namespace

GridPtr build_grid(double a, double b, int n) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
        throw UsageError("build_grid: need finite a < b");
    }
    if (n < 8 || n % 2 != 0) {
        throw UsageError("build_grid: n must be even and >= 8");
    }
    auto g = std::make_shared<Grid1D>();
    g->a = a;
    g->b = b;
    g->n = n;
    g->h = (b - a) / n;
    g->midpoints.resize(static_cast<std::size_t>(n));
    g->delta.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // distances counted in half-cells from the nearer end, so the
        // profile is exactly symmetric
        const int k = std::min(i, n - 1 - i);
        const double d = (k + 0.5) * g->h;
        g->delta[static_cast<std::size_t>(i)] = d;
        g->midpoints[static_cast<std::size_t>(i)] = (i <= n - 1 - i) ? a + d : b - d;
    }
    return g;
}

DiscreteFunction::DiscreteFunction(GridPtr grid)
    : grid_(std::move(grid)), values_(Eigen::VectorXd::Zero(grid_->n)) {}

DiscreteFunction::DiscreteFunction(GridPtr grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->n) {
        throw UsageError("DiscreteFunction: size does not match grid");
    }
    if (!values_.allFinite()) {
        throw DomainError("DiscreteFunction: non-finite value");
    }
}

DiscreteFunction DiscreteFunction::sample(GridPtr grid, const std::function<double(double)>& f) {
    Eigen::VectorXd v(grid->n);
    for (int i = 0; i < grid->n; ++i) {
        v[i] = f(grid->midpoints[static_cast<std::size_t>(i)]);
    }
    return DiscreteFunction(std::move(grid), std::move(v));
}

double DiscreteFunction::l2_norm_sq() const { return grid_->h * values_.squaredNorm(); }

double DiscreteFunction::l2_norm() const { return std::sqrt(l2_norm_sq()); }

double DiscreteFunction::lp_norm(double p) const {
    double acc = 0.0;
    for (int i = 0; i < values_.size(); ++i) {
        acc += std::pow(std::abs(values_[i]), p);
    }
    return std::pow(grid_->h * acc, 1.0 / p);
}

double DiscreteFunction::sup_norm() const {
    return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff();
}

const char* form_kind_name(FormKind kind) {
    switch (kind) {
        case FormKind::Mass: return "mass";
        case FormKind::E: return "E";
        case FormKind::J: return "J";
        case FormKind::EL: return "EL";
        case FormKind::Es: return "Es";
    }
    return "?";
}

KernelTables log_kernel_tables(const Grid1D& grid) {
    const int n = grid.n;
    const double h = grid.h;
    KernelTables t;
    t.interior.assign(static_cast<std::size_t>(n), 0.0);
    for (int m = 1; m < n; ++m) {
        const double D = m * h;
        double k = 0.0;
        if (D + h <= 1.0) {
            k = h * log_second_difference(m);
        } else if (D - h < 1.0) {
            k = phi_near(D + h) - 2.0 * phi_near(D) + phi_near(D - h);
        }
        t.interior[static_cast<std::size_t>(m)] = k;
    }
    t.exterior.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double left = lambda_ext((i + 1) * h) - lambda_ext(i * h);
        const double right = lambda_ext((n - i) * h) - lambda_ext((n - 1 - i) * h);
        t.exterior[static_cast<std::size_t>(i)] = left + right;
    }
    return t;
}

std::vector<double> far_kernel_table(const Grid1D& grid) {
    const int n = grid.n;
    const double h = grid.h;
    std::vector<double> t(static_cast<std::size_t>(n), 0.0);
    t[0] = 2.0 * phi_far(h);
    for (int m = 1; m < n; ++m) {
        const double D = m * h;
        if (D - h >= 1.0) {
            t[static_cast<std::size_t>(m)] = h * log_second_difference(m);
        } else if (D + h > 1.0) {
            t[static_cast<std::size_t>(m)] = phi_far(D + h) - 2.0 * phi_far(D) + phi_far(D - h);
        }
    }
    return t;
}

KernelTables frac_kernel_tables(const Grid1D& grid, double s) {
    const int n = grid.n;
    const double h = grid.h;
    const double q = 1.0 - 2.0 * s;
    const double hq = std::pow(h, q);
    KernelTables t;
    t.interior.assign(static_cast<std::size_t>(n), 0.0);
    for (int m = 1; m < n; ++m) {
        t.interior[static_cast<std::size_t>(m)] = hq * power_second_difference(m, q) / (-2.0 * s * q);
    }
    t.exterior.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double left = std::pow((i + 1) * h, q) - std::pow(i * h, q);
        const double right = std::pow((n - i) * h, q) - std::pow((n - 1 - i) * h, q);
        t.exterior[static_cast<std::size_t>(i)] = (left + right) / (2.0 * s * q);
    }
    return t;
}

SymmetricForm assemble_mass(const GridPtr& grid) {
    check_grid(grid);
    SymmetricForm f;
    f.kind = FormKind::Mass;
    f.grid = grid;
    f.matrix = grid->h * Eigen::MatrixXd::Identity(grid->n, grid->n);
    return f;
}

SymmetricForm assemble_E(const GridPtr& grid) {
    check_grid(grid);
    SymmetricForm f;
    f.kind = FormKind::E;
    f.grid = grid;
    f.matrix = build_dirichlet_form(log_kernel_tables(*grid), dimension_constants(1).c_N);
    return f;
}

SymmetricForm assemble_J(const GridPtr& grid) {
    check_grid(grid);
    const int n = grid->n;
    const std::vector<double> t = far_kernel_table(*grid);
    SymmetricForm f;
    f.kind = FormKind::J;
    f.grid = grid;
    f.matrix.resize(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t col) {
        const int j = static_cast<int>(col);
        for (int i = 0; i < n; ++i) {
            f.matrix(i, j) = t[static_cast<std::size_t>(std::abs(i - j))];
        }
    });
    return f;
}

SymmetricForm assemble_EL(const GridPtr& grid) {
    check_grid(grid);
    const int n = grid->n;
    const DimensionConstants dc = dimension_constants(1);
    const KernelTables near = log_kernel_tables(*grid);
    const std::vector<double> far = far_kernel_table(*grid);
    SymmetricForm f;
    f.kind = FormKind::EL;
    f.grid = grid;
    f.matrix = build_dirichlet_form(near, dc.c_N);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t col) {
        const int j = static_cast<int>(col);
        for (int i = 0; i < n; ++i) {
            f.matrix(i, j) -= dc.c_N * far[static_cast<std::size_t>(std::abs(i - j))];
        }
        f.matrix(j, j) += dc.rho_N * grid->h;
    });
    return f;
}

SymmetricForm assemble_Es(const GridPtr& grid, double s) {
    check_grid(grid);
    if (!(s > 0.0) || !(s <= 0.25)) {
        throw DomainError("assemble_Es: s outside (0, 1/4]");
    }
    SymmetricForm f;
    f.kind = FormKind::Es;
    f.grid = grid;
    f.s = s;
    f.matrix = build_dirichlet_form(frac_kernel_tables(*grid, s), frac_constants(1, s).c_Ns);
    return f;
}

ExpansionResult expansion_check(const GridPtr& grid, const DiscreteFunction& u,
                                const std::vector<double>& s_list) {
    if (s_list.size() < 3) {
        throw UsageError("expansion_check: need at least three values of s");
    }
    for (std::size_t i = 0; i < s_list.size(); ++i) {
        if (!(s_list[i] > 0.0) || !(s_list[i] <= 0.25)) {
            throw DomainError("expansion_check: s outside (0, 1/4]");
        }
        if (i > 0 && !(s_list[i] < s_list[i - 1])) {
            throw UsageError("expansion_check: s list must be strictly decreasing");
        }
    }
    const SymmetricForm EL = assemble_EL(grid);
    const double el = EL(u, u);
    const double l2 = u.l2_norm_sq();
    ExpansionResult out;
    std::vector<double> ss;
    std::vector<double> ds;
    for (double s : s_list) {
        const SymmetricForm Es = assemble_Es(grid, s);
        const double d = std::abs(Es(u, u) - l2 - s * el);
        out.rows.push_back({s, d});
        ss.push_back(s);
        ds.push_back(d);
    }
    out.slope = loglog_slope(ss, ds);
    return out;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int k = 0; k < 4; ++k) {
        b[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xffu);
    }
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) {
        b[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xffu);
    }
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4] = {};
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
        v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
    }
    return v;
}

double get_f64(std::istream& is) {
    unsigned char b[8] = {};
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) {
        v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    }
    return std::bit_cast<double>(v);
}

}  // namespace

void dump_form(const SymmetricForm& form, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw UsageError("dump_form: cannot open " + path);
    }
    const auto n = static_cast<std::uint32_t>(form.matrix.rows());
    os.write("LLAP", 4);
    put_u32(os, n);
    put_u32(os, static_cast<std::uint32_t>(form.kind));
    put_f64(os, form.s.value_or(0.0));
    for (Eigen::Index i = 0; i < form.matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < form.matrix.cols(); ++j) {
            put_f64(os, form.matrix(i, j));
        }
    }
    if (!os) {
        throw UsageError("dump_form: write failed for " + path);
    }
}

SymmetricForm load_form(const std::string& path, const GridPtr& grid) {
    std::ifstream is(path, std::ios::binary);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "LLAP", 4) != 0) {
        throw UsageError("load_form: bad header in " + path);
    }
    const std::uint32_t n = get_u32(is);
    const std::uint32_t kind = get_u32(is);
    const double s = get_f64(is);
    if (!grid || static_cast<int>(n) != grid->n || kind > 4) {
        throw UsageError("load_form: header does not match grid");
    }
    SymmetricForm f;
    f.kind = static_cast<FormKind>(kind);
    f.grid = grid;
    if (f.kind == FormKind::Es) {
        f.s = s;
    }
    f.matrix.resize(n, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) {
            f.matrix(i, j) = get_f64(is);
        }
    }
    if (!is) {
        throw UsageError("load_form: truncated file " + path);
    }
    return f;
}

}  // namespace loglap

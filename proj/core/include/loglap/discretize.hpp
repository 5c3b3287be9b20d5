#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace loglap {

struct Grid1D {
    double a = 0.0;
    double b = 0.0;
    int n = 0;
    double h = 0.0;
    std::vector<double> midpoints;
    // distance of each midpoint to the nearer endpoint
    std::vector<double> delta;

    double measure() const { return b - a; }
};

using GridPtr = std::shared_ptr<const Grid1D>;

GridPtr build_grid(double a, double b, int n);

// Piecewise-constant function on the cells, zero outside (a, b).
class DiscreteFunction {
public:
    explicit DiscreteFunction(GridPtr grid);
    DiscreteFunction(GridPtr grid, Eigen::VectorXd values);

    static DiscreteFunction sample(GridPtr grid, const std::function<double(double)>& f);

    const GridPtr& grid() const { return grid_; }
    const Eigen::VectorXd& values() const { return values_; }
    Eigen::VectorXd& values() { return values_; }
    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_[i]; }

    // midpoint-rule integrals
    double l2_norm_sq() const;
    double l2_norm() const;
    double lp_norm(double p) const;
    double sup_norm() const;

private:
    GridPtr grid_;
    Eigen::VectorXd values_;
};

enum class FormKind : std::uint32_t { Mass = 0, E = 1, J = 2, EL = 3, Es = 4 };

const char* form_kind_name(FormKind kind);

struct SymmetricForm {
    FormKind kind = FormKind::Mass;
    Eigen::MatrixXd matrix;
    GridPtr grid;
    std::optional<double> s;

    double operator()(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        return u.dot(matrix * v);
    }
    double operator()(const DiscreteFunction& u, const DiscreteFunction& v) const {
        return (*this)(u.values(), v.values());
    }
};

SymmetricForm assemble_mass(const GridPtr& grid);
SymmetricForm assemble_E(const GridPtr& grid);
SymmetricForm assemble_J(const GridPtr& grid);
SymmetricForm assemble_EL(const GridPtr& grid);
// 0 < s <= 1/4
SymmetricForm assemble_Es(const GridPtr& grid, double s);

// Per-offset kernel integrals over a pair of cells and per-cell exterior
// terms; the matrices above are built from these.
struct KernelTables {
    std::vector<double> interior;  // indexed by |i - j|
    std::vector<double> exterior;  // indexed by cell, both sides summed
};

KernelTables log_kernel_tables(const Grid1D& grid);
std::vector<double> far_kernel_table(const Grid1D& grid);
KernelTables frac_kernel_tables(const Grid1D& grid, double s);

struct ExpansionRow {
    double s;
    double defect;
};

struct ExpansionResult {
    std::vector<ExpansionRow> rows;
    double slope = 0.0;
};

ExpansionResult expansion_check(const GridPtr& grid, const DiscreteFunction& u,
                                const std::vector<double>& s_list);

// binary dump: "LLAP", u32 n, u32 kind, f64 s (0 unless Es), then n*n
// little-endian f64 in row-major order
void dump_form(const SymmetricForm& form, const std::string& path);
SymmetricForm load_form(const std::string& path, const GridPtr& grid);

}  // namespace loglap

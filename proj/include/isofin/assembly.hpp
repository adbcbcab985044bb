#pragma once

#include <iosfwd>
#include <vector>

#include "isofin/banded.hpp"
#include "isofin/basis.hpp"
#include "isofin/quadrature.hpp"

namespace isofin {

/// Affine map between the parameter interval and the physical interval.
struct PhysicalMap {
    double x_min = 0.0, x_max = 1.0;
    double xi_min = 0.0, xi_max = 1.0;

    PhysicalMap() = default;
    PhysicalMap(double x_min, double x_max, double xi_min = 0.0, double xi_max = 1.0);

    /// dx/dξ = |Ω| / |Ω_ξ|
    double jacobian() const { return (x_max - x_min) / (xi_max - xi_min); }
    double to_physical(double xi) const { return x_min + (xi - xi_min) * jacobian(); }
    double to_parameter(double x) const { return xi_min + (x - x_min) / jacobian(); }
};

/// A Galerkin matrix restricted to interior rows 1..n-2, split into the interior
/// block and the two columns that couple to the boundary coefficients 0 and n-1.
struct InteriorOperator {
    BandedMatrix interior;
    std::vector<double> col_first;
    std::vector<double> col_last;

    int size() const { return interior.size(); }
    /// Interior rows applied to a full coefficient vector (boundary entries included).
    std::vector<double> apply_full(const std::vector<double>& full) const;
    /// Boundary columns times (w_first, w_last).
    std::vector<double> lift(double w_first, double w_last) const;
};

/// a * X + b * Y (same shapes).
InteriorOperator combine(double a, const InteriorOperator& x, double b, const InteriorOperator& y);

/// Interior rows of a full n x n banded matrix.
InteriorOperator interior_operator(const BandedMatrix& full);

/// Mass, stiffness and advection matrices of a NURBS basis on a physical interval.
/// Full matrices are n x n; N(i, j) = (R_j, dR_i/dξ)_ξ.
struct GalerkinSystem {
    int n_basis = 0;
    int bandwidth = 0;
    PhysicalMap map;
    BandedMatrix M_full, K_full, N_full;
    InteriorOperator M, K, N;
};

GalerkinSystem assemble(const NurbsBasis& basis, const PhysicalMap& map, const QuadratureRule& rule);

struct BoundaryVector {
    std::vector<double> b_M, b_K, b_N;
};

BoundaryVector lift_boundary(const GalerkinSystem& system, double w_first, double w_last);

/// Square collocation system at the Greville abscissae, factored once.
class Collocator {
public:
    explicit Collocator(const NurbsBasis& basis);

    /// Coefficients ν with Σ_j ν_j R_j(g_i) = values_i.
    std::vector<double> project(const std::vector<double>& values) const;
    /// Values Σ_j c_j R_j(g_i) at every Greville abscissa.
    std::vector<double> values(const std::vector<double>& coeffs) const;
    const std::vector<double>& abscissae() const { return greville_; }

private:
    std::vector<double> greville_;
    BandedMatrix matrix_;
    BandedLU lu_;
};

/// One-shot group-FEM projection (builds a Collocator).
std::vector<double> group_project(const std::vector<double>& values_at_greville, const NurbsBasis& basis);

/// Writes `row,col,value` triplets (0-based) of the stored band.
void write_matrix_csv(std::ostream& os, const BandedMatrix& m);

}  // namespace isofin

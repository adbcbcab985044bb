#include "isofin/assembly.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace isofin {

PhysicalMap::PhysicalMap(double x_min_, double x_max_, double xi_min_, double xi_max_)
    : x_min(x_min_), x_max(x_max_), xi_min(xi_min_), xi_max(xi_max_) {
    if (!(x_min < x_max)) throw std::invalid_argument("physical interval must satisfy x_min < x_max");
    if (!(xi_min < xi_max)) throw std::invalid_argument("parameter interval must satisfy xi_min < xi_max");
}

std::vector<double> InteriorOperator::apply_full(const std::vector<double>& full) const {
    const int m = size();
    if (static_cast<int>(full.size()) != m + 2) throw std::invalid_argument("full vector has wrong length");
    std::vector<double> inner(full.begin() + 1, full.end() - 1);
    auto y = interior.multiply(inner);
    const double w0 = full.front(), wn = full.back();
    for (int i = 0; i < m; ++i) y[i] += col_first[i] * w0 + col_last[i] * wn;
    return y;
}

std::vector<double> InteriorOperator::lift(double w_first, double w_last) const {
    std::vector<double> y(size());
    for (int i = 0; i < size(); ++i) y[i] = col_first[i] * w_first + col_last[i] * w_last;
    return y;
}

InteriorOperator combine(double a, const InteriorOperator& x, double b, const InteriorOperator& y) {
    InteriorOperator out = x;
    out.interior.scale(a);
    out.interior.add_scaled(y.interior, b);
    for (int i = 0; i < out.size(); ++i) {
        out.col_first[i] = a * x.col_first[i] + b * y.col_first[i];
        out.col_last[i] = a * x.col_last[i] + b * y.col_last[i];
    }
    return out;
}

InteriorOperator interior_operator(const BandedMatrix& full) {
    const int n = full.size();
    if (n < 3) throw std::invalid_argument("need at least one interior basis function");
    InteriorOperator op;
    op.interior = BandedMatrix(n - 2, full.lower(), full.upper());
    op.col_first.assign(n - 2, 0.0);
    op.col_last.assign(n - 2, 0.0);
    for (int i = 1; i < n - 1; ++i) {
        for (int j = std::max(1, i - full.lower()); j <= std::min(n - 2, i + full.upper()); ++j)
            op.interior.at(i - 1, j - 1) = full(i, j);
        op.col_first[i - 1] = full(i, 0);
        op.col_last[i - 1] = full(i, n - 1);
    }
    return op;
}

GalerkinSystem assemble(const NurbsBasis& basis, const PhysicalMap& map, const QuadratureRule& rule) {
    const int n = basis.n_basis();
    const int p = basis.degree();
    if (map.xi_min != basis.knots().front() || map.xi_max != basis.knots().back())
        throw std::invalid_argument("map parameter interval must match the knot range");

    GalerkinSystem sys;
    sys.n_basis = n;
    sys.bandwidth = p;
    sys.map = map;
    sys.M_full = BandedMatrix(n, p, p);
    sys.K_full = BandedMatrix(n, p, p);
    sys.N_full = BandedMatrix(n, p, p);
    const double jac = map.jacobian();

    const auto bp = basis.knots().breakpoints();
    for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
        const double a = bp[s], b = bp[s + 1];
        const double h = 0.5 * (b - a), c = 0.5 * (a + b);
        for (int q = 0; q < rule.order; ++q) {
            const double xi = c + h * rule.nodes[q];
            const double wq = h * rule.weights[q];
            const LocalBasis lb = eval_nurbs_local(basis, xi, 1);
            const auto& R = lb.d[0];
            const auto& dR = lb.d[1];
            for (int i = 0; i <= p; ++i) {
                const int gi = lb.first + i;
                for (int j = 0; j <= p; ++j) {
                    const int gj = lb.first + j;
                    sys.M_full.at(gi, gj) += wq * R[i] * R[j] * jac;
                    sys.K_full.at(gi, gj) += wq * dR[i] * dR[j] / jac;
                    sys.N_full.at(gi, gj) += wq * R[j] * dR[i];
                }
            }
        }
    }
    sys.M = interior_operator(sys.M_full);
    sys.K = interior_operator(sys.K_full);
    sys.N = interior_operator(sys.N_full);
    return sys;
}

BoundaryVector lift_boundary(const GalerkinSystem& system, double w_first, double w_last) {
    return {system.M.lift(w_first, w_last), system.K.lift(w_first, w_last), system.N.lift(w_first, w_last)};
}

namespace {

BandedMatrix collocation_matrix(const NurbsBasis& basis, const std::vector<double>& g) {
    const int n = basis.n_basis(), p = basis.degree();
    BandedMatrix a(n, p, p);
    for (int i = 0; i < n; ++i) {
        const LocalBasis lb = eval_nurbs_local(basis, g[i], 0);
        for (int j = 0; j <= p; ++j) {
            const int gj = lb.first + j;
            if (lb.d[0][j] != 0.0) a.at(i, gj) = lb.d[0][j];
        }
    }
    return a;
}

}  // namespace

Collocator::Collocator(const NurbsBasis& basis)
    : greville_(greville_abscissae(basis.knots())),
      matrix_(collocation_matrix(basis, greville_)),
      lu_(lu_factor(matrix_)) {}

std::vector<double> Collocator::project(const std::vector<double>& values) const { return lu_.solve(values); }

std::vector<double> Collocator::values(const std::vector<double>& coeffs) const { return matrix_.multiply(coeffs); }

std::vector<double> group_project(const std::vector<double>& values_at_greville, const NurbsBasis& basis) {
    if (static_cast<int>(values_at_greville.size()) != basis.n_basis())
        throw std::invalid_argument("one value per basis function is required");
    return Collocator(basis).project(values_at_greville);
}

void write_matrix_csv(std::ostream& os, const BandedMatrix& m) {
    os << "row,col,value\n";
    for (int i = 0; i < m.size(); ++i)
        for (int j = std::max(0, i - m.lower()); j <= std::min(m.size() - 1, i + m.upper()); ++j)
            os << fmt::format("{},{},{:.10g}\n", i, j, m(i, j));
}

}  // namespace isofin

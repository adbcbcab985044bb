#pragma once

#include <string>
#include <vector>

namespace isofin {

/// Which knot span owns a point sitting exactly on a breakpoint.
enum class SpanSide { Right, Left };

/// Open knot vector with its polynomial degree.
class KnotVector {
public:
    KnotVector(std::vector<double> values, int degree);

    const std::vector<double>& values() const { return values_; }
    int degree() const { return degree_; }
    int n_basis() const { return static_cast<int>(values_.size()) - degree_ - 1; }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }

    /// Index s of the nonempty span [u_s, u_{s+1}) holding xi. The last span is
    /// closed on the right. With SpanSide::Left a breakpoint belongs to the span
    /// on its left instead.
    int find_span(double xi, SpanSide side = SpanSide::Right) const;

    /// Distinct knot values in increasing order.
    std::vector<double> breakpoints() const;

    /// Multiplicity of the knot value closest to v (0 when v is not a knot).
    int multiplicity(double v, double tol = 1e-14) const;

private:
    std::vector<double> values_;
    int degree_;
};

KnotVector make_uniform_open_knots(int n_elements, int degree);

/// Open knot vector on [0,1] whose spans shrink geometrically toward `kink` from
/// both sides (span widths scale by cluster_ratio per span moving inward), with
/// the kink knot repeated kink_multiplicity times.
KnotVector make_refined_open_knots(int n_elements, int degree, double kink, double cluster_ratio,
                                   int kink_multiplicity = 3);

/// Rational basis: B-splines of `knots` with positive weights.
class NurbsBasis {
public:
    explicit NurbsBasis(KnotVector knots);
    NurbsBasis(KnotVector knots, std::vector<double> weights);

    const KnotVector& knots() const { return knots_; }
    const std::vector<double>& weights() const { return weights_; }
    int degree() const { return knots_.degree(); }
    int n_basis() const { return knots_.n_basis(); }
    bool unit_weights() const { return unit_; }

private:
    KnotVector knots_;
    std::vector<double> weights_;
    bool unit_;
};

/// Nonzero basis functions at one point. d[k][j] is the k-th derivative of
/// function first + j, for j in [0, p].
struct LocalBasis {
    int first = 0;
    std::vector<std::vector<double>> d;
};

LocalBasis eval_bspline_local(const KnotVector& knots, double xi, int max_order,
                              SpanSide side = SpanSide::Right);
LocalBasis eval_nurbs_local(const NurbsBasis& basis, double xi, int max_order,
                            SpanSide side = SpanSide::Right);

/// N_{i,p}(xi) for every i (length n_basis).
std::vector<double> eval_bspline_all(const KnotVector& knots, double xi);

/// Derivative of order 1 or 2 of every N_{i,p} at xi. Orders above the degree are rejected.
std::vector<double> eval_bspline_deriv_all(const KnotVector& knots, double xi, int order);

/// R_{i,p}(xi) or its first/second derivative for every i.
std::vector<double> eval_nurbs_all(const NurbsBasis& basis, double xi, int order = 0);

/// Knot averages (u_{i+1} + ... + u_{i+p}) / p, one per basis function.
std::vector<double> greville_abscissae(const KnotVector& knots);

/// Derivative of the given order of sum_j c_j R_j at xi.
double evaluate_expansion(const NurbsBasis& basis, const std::vector<double>& coeffs, double xi,
                          int order = 0, SpanSide side = SpanSide::Right);

/// One positive weight per line; the count must equal n_basis.
std::vector<double> load_weights(const std::string& path, int n_basis);

}  // namespace isofin

#pragma once

#include <functional>
#include <vector>

#include "isofin/basis.hpp"

namespace isofin {

/// Gauss-Legendre rule on [-1, 1], nodes ascending.
struct QuadratureRule {
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// p_L-point rule, 1 <= p_L <= 16. Nodes are Legendre roots found by Newton iteration.
QuadratureRule gauss_legendre(int order);

double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          const QuadratureRule& rule);

/// Sum of per-span integrals over the nonempty spans of `knots`.
double integrate_spans(const std::function<double(double)>& f, const KnotVector& knots,
                       const QuadratureRule& rule);

}  // namespace isofin

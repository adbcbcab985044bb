#include "isofin/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace isofin {

QuadratureRule gauss_legendre(int order) {
    if (order < 1 || order > 16) throw std::invalid_argument("Gauss-Legendre order must be in [1, 16]");
    QuadratureRule rule;
    rule.order = order;
    rule.nodes.assign(order, 0.0);
    rule.weights.assign(order, 0.0);
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= order; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = order * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) <= 1e-15) break;
        }
        if (order % 2 == 1 && i == half - 1) z = 0.0;
        // recompute the derivative at the converged root for the weight
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= order; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = order * (z * p0 - p1) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[i] = -z;
        rule.nodes[order - 1 - i] = z;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    return rule;
}

double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          const QuadratureRule& rule) {
    if (a == b) return 0.0;
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    double s = 0.0;
    for (int i = 0; i < rule.order; ++i) s += rule.weights[i] * f(c + h * rule.nodes[i]);
    return h * s;
}

double integrate_spans(const std::function<double(double)>& f, const KnotVector& knots,
                       const QuadratureRule& rule) {
    const auto bp = knots.breakpoints();
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < bp.size(); ++k) s += integrate_interval(f, bp[k], bp[k + 1], rule);
    return s;
}

}  // namespace isofin

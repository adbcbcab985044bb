#pragma once

#include <cstddef>
#include <vector>

#include "isofin/basis.hpp"
#include "isofin/stepper.hpp"

namespace isofin {

struct GreekCurve {
    double t = 0.0;
    std::vector<double> S;
    std::vector<double> values;
};

/// ∂V/∂S at one stock price from the exact derivative of the expansion.
double delta_at(const SolutionSurface& surface, std::size_t slice, double S, SpanSide side = SpanSide::Right);
/// ∂²V/∂S²; requires degree >= 2.
double gamma_at(const SolutionSurface& surface, std::size_t slice, double S, SpanSide side = SpanSide::Right);
/// ∂V/∂t from the backward difference of slices `slice` and `slice - 1`. When a
/// coupon was injected between them, the pair one level earlier is used.
double theta_at(const SolutionSurface& surface, std::size_t slice, double S);

/// Curves on the Greville image grid of the slice (interior points only).
GreekCurve delta(const SolutionSurface& surface, std::size_t slice);
GreekCurve gamma(const SolutionSurface& surface, std::size_t slice);
GreekCurve theta(const SolutionSurface& surface, std::size_t slice);

struct KnotJump {
    double S;
    double left;
    double right;
};

/// One-sided Γ limits at every interior breakpoint of the basis.
std::vector<KnotJump> gamma_knot_limits(const SolutionSurface& surface, std::size_t slice);

}  // namespace isofin

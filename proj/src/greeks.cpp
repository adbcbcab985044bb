#include "isofin/greeks.hpp"

#include <cmath>
#include <stdexcept>

namespace isofin {

namespace {

struct Derivs {
    double v, vx, vxx;
    double scale;  // e^{-κτ} for Leland, 1 for AFV
};

Derivs derivs_at_xi(const SolutionSurface& surf, const TimeSlice& slice, double xi, int order, SpanSide side) {
    const auto& d = *surf.disc;
    const double jinv = 1.0 / d.map.jacobian();
    const auto& c = slice[surf.primary()];
    Derivs out{};
    out.scale = surf.model == ModelKind::Afv ? 1.0 : std::exp(-surf.leland.kappa() * slice.tau);
    out.v = evaluate_expansion(d.basis, c, xi, 0, side);
    out.vx = evaluate_expansion(d.basis, c, xi, 1, side) * jinv;
    out.vxx = order >= 2 ? evaluate_expansion(d.basis, c, xi, 2, side) * jinv * jinv : 0.0;
    return out;
}

Derivs derivs_at(const SolutionSurface& surf, const TimeSlice& slice, double S, int order, SpanSide side) {
    if (!(S > 0.0)) throw std::domain_error("S must be positive");
    const auto& d = *surf.disc;
    const bool afv = surf.model == ModelKind::Afv;
    const double kt = afv ? 0.0 : surf.leland.kappa() * slice.tau;
    const double x = afv ? std::log(S / surf.afv.s_int) : std::log(S) + kt;
    if (x < d.map.x_min || x > d.map.x_max) throw std::domain_error("S lies outside the computational domain");
    return derivs_at_xi(surf, slice, d.map.to_parameter(x), order, side);
}

const TimeSlice& slice_ref(const SolutionSurface& surf, std::size_t i) {
    if (i >= surf.slices.size()) throw std::out_of_range("slice index out of range");
    return surf.slices[i];
}

GreekCurve curve(const SolutionSurface& surf, std::size_t slice, double (*f)(const SolutionSurface&, std::size_t,
                                                                             double, SpanSide)) {
    const TimeSlice& s = slice_ref(surf, slice);
    GreekCurve gc;
    gc.t = calendar_time(surf, s);
    const auto grid = greville_S(surf, s);
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        gc.S.push_back(grid[i]);
        gc.values.push_back(f(surf, slice, grid[i], SpanSide::Right));
    }
    return gc;
}

}  // namespace

double delta_at(const SolutionSurface& surf, std::size_t slice, double S, SpanSide side) {
    const Derivs d = derivs_at(surf, slice_ref(surf, slice), S, 1, side);
    return d.scale * d.vx / S;
}

double gamma_at(const SolutionSurface& surf, std::size_t slice, double S, SpanSide side) {
    if (surf.disc->basis.degree() < 2) throw std::invalid_argument("gamma needs a basis of degree >= 2");
    const Derivs d = derivs_at(surf, slice_ref(surf, slice), S, 2, side);
    return d.scale * (d.vxx - d.vx) / (S * S);
}

double theta_at(const SolutionSurface& surf, std::size_t slice, double S) {
    if (surf.slices.size() < 2) throw std::invalid_argument("theta needs at least two slices");
    if (slice == 0) throw std::invalid_argument("theta needs a preceding slice");
    std::size_t hi = slice;
    if (surf.model == ModelKind::Afv) {
        for (int c : surf.coupon_steps)
            if (c == slice_ref(surf, hi).step && hi >= 2) --hi;
    }
    const TimeSlice& a = slice_ref(surf, hi);
    const TimeSlice& b = slice_ref(surf, hi - 1);
    const double dtau = a.tau - b.tau;
    if (!(dtau > 0.0)) throw std::invalid_argument("slices are not consecutive in time");
    const auto& disc = *surf.disc;
    const auto& ca = a[surf.primary()];
    const auto& cb = b[surf.primary()];

    if (surf.model == ModelKind::Afv) {
        const double xi = disc.map.to_parameter(std::log(S / surf.afv.s_int));
        const double dv = evaluate_expansion(disc.basis, ca, xi) - evaluate_expansion(disc.basis, cb, xi);
        return -dv / dtau;  // dτ/dt = -1
    }
    // V = e^{-κτ} v̂(ln S + κτ, τ); differentiate in τ at fixed S, then dτ/dt = -σ²/2
    const double kappa = surf.leland.kappa();
    const double x = std::log(S) + kappa * a.tau;
    const double xi = disc.map.to_parameter(x);
    const double v = evaluate_expansion(disc.basis, ca, xi);
    const double vx = evaluate_expansion(disc.basis, ca, xi, 1) / disc.map.jacobian();
    const double vtau = (v - evaluate_expansion(disc.basis, cb, xi)) / dtau;
    const double dV_dtau = std::exp(-kappa * a.tau) * (-kappa * v + kappa * vx + vtau);
    return -0.5 * surf.leland.sigma * surf.leland.sigma * dV_dtau;
}

GreekCurve delta(const SolutionSurface& surf, std::size_t slice) { return curve(surf, slice, &delta_at); }

GreekCurve gamma(const SolutionSurface& surf, std::size_t slice) { return curve(surf, slice, &gamma_at); }

GreekCurve theta(const SolutionSurface& surf, std::size_t slice) {
    const TimeSlice& s = slice_ref(surf, slice);
    GreekCurve gc;
    gc.t = calendar_time(surf, s);
    const auto grid = greville_S(surf, s);
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        gc.S.push_back(grid[i]);
        gc.values.push_back(theta_at(surf, slice, grid[i]));
    }
    return gc;
}

std::vector<KnotJump> gamma_knot_limits(const SolutionSurface& surf, std::size_t slice) {
    const TimeSlice& s = slice_ref(surf, slice);
    const auto& d = *surf.disc;
    const auto bp = d.basis.knots().breakpoints();
    std::vector<KnotJump> out;
    if (d.basis.degree() < 2) throw std::invalid_argument("gamma needs a basis of degree >= 2");
    for (std::size_t k = 1; k + 1 < bp.size(); ++k) {
        const double x = d.map.to_physical(bp[k]);
        const double S = surf.model == ModelKind::Afv ? surf.afv.s_int * std::exp(x)
                                                      : std::exp(x - surf.leland.kappa() * s.tau);
        const Derivs l = derivs_at_xi(surf, s, bp[k], 2, SpanSide::Left);
        const Derivs r = derivs_at_xi(surf, s, bp[k], 2, SpanSide::Right);
        out.push_back({S, l.scale * (l.vxx - l.vx) / (S * S), r.scale * (r.vxx - r.vx) / (S * S)});
    }
    return out;
}

}  // namespace isofin

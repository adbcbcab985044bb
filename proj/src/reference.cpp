#include "isofin/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "isofin/banded.hpp"

namespace isofin {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

double bs_exact_call(double S, double K, double r, double sigma, double maturity) {
    if (!(sigma > 0.0) || maturity < 0.0) throw std::invalid_argument("need sigma > 0 and maturity >= 0");
    if (S <= 0.0) return 0.0;
    if (maturity == 0.0) return std::max(S - K, 0.0);
    const double sq = sigma * std::sqrt(maturity);
    const double d1 = (std::log(S / K) + (r + 0.5 * sigma * sigma) * maturity) / sq;
    const double d2 = d1 - sq;
    return S * norm_cdf(d1) - K * std::exp(-r * maturity) * norm_cdf(d2);
}

BsGreeks bs_exact_greeks(double S, double K, double r, double sigma, double maturity) {
    if (!(sigma > 0.0) || !(maturity > 0.0) || !(S > 0.0))
        throw std::invalid_argument("need S > 0, sigma > 0 and maturity > 0");
    const double sq = sigma * std::sqrt(maturity);
    const double d1 = (std::log(S / K) + (r + 0.5 * sigma * sigma) * maturity) / sq;
    const double d2 = d1 - sq;
    BsGreeks g;
    g.delta = norm_cdf(d1);
    g.gamma = norm_pdf(d1) / (S * sq);
    g.theta = -S * norm_pdf(d1) * sigma / (2.0 * std::sqrt(maturity)) - r * K * std::exp(-r * maturity) * norm_cdf(d2);
    return g;
}

double FdmGrid::value_at(Unknown u, double xq) const {
    const auto& v = values.at(u);
    if (xq < x.front() || xq > x.back()) throw std::domain_error("point outside the FDM grid");
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>((xq - x.front()) / dx), x.size() - 2);
    const double w = (xq - x[j]) / dx;
    return (1.0 - w) * v[j] + w * v[j + 1];
}

namespace {

// Constant-coefficient three-point operator a u'' + b u' - c u on a uniform grid.
struct Stencil {
    double lo, di, up;
    Stencil(double a, double b, double c, double h)
        : lo(a / (h * h) - b / (2.0 * h)), di(-2.0 * a / (h * h) - c), up(a / (h * h) + b / (2.0 * h)) {}
    double apply(const std::vector<double>& u, std::size_t j) const {
        return lo * u[j - 1] + di * u[j] + up * u[j + 1];
    }
};

BandedMatrix implicit_matrix(const Stencil& s, int m, double theta, double dt) {
    BandedMatrix a(m, 1, 1);
    for (int i = 0; i < m; ++i) {
        a.at(i, i) = 1.0 - theta * dt * s.di;
        if (i > 0) a.at(i, i - 1) = -theta * dt * s.lo;
        if (i + 1 < m) a.at(i, i + 1) = -theta * dt * s.up;
    }
    return a;
}

// Right-hand side of one θ-step for interior nodes, boundary values at m+1 folded in.
std::vector<double> theta_rhs(const Stencil& s, const std::vector<double>& u, double left_next, double right_next,
                              double theta, double dt, const std::vector<double>* src_m,
                              const std::vector<double>* src_next) {
    const std::size_t n = u.size();
    std::vector<double> r(n - 2);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        double v = u[j] + (1.0 - theta) * dt * s.apply(u, j);
        if (src_m) v += (1.0 - theta) * dt * (*src_m)[j];
        if (src_next) v += theta * dt * (*src_next)[j];
        r[j - 1] = v;
    }
    r.front() += theta * dt * s.lo * left_next;
    r.back() += theta * dt * s.up * right_next;
    return r;
}

struct Grid {
    std::vector<double> x;
    double h;
};

Grid make_grid(const FdmConfig& c) {
    if (c.n_intervals < 2) throw std::invalid_argument("FDM grid needs at least 2 intervals");
    if (!(c.x_min < c.x_max)) throw std::invalid_argument("FDM grid needs x_min < x_max");
    if (c.n_steps < 1) throw std::invalid_argument("FDM needs at least one time step");
    Grid g;
    g.h = (c.x_max - c.x_min) / c.n_intervals;
    for (int j = 0; j <= c.n_intervals; ++j) g.x.push_back(c.x_min + j * g.h);
    g.x.back() = c.x_max;
    return g;
}

void check_finite(const std::vector<double>& v, int step) {
    for (double a : v)
        if (!std::isfinite(a)) throw std::runtime_error("FDM blow-up at step " + std::to_string(step));
}

void stability_warnings(FdmGrid& g) {
    if (!(g.ratio_dx() < 1.0)) g.warnings.push_back("dtau/dx >= 1");
    if (!(g.ratio_dx2() < 1.0)) g.warnings.push_back("dtau/dx^2 >= 1");
}

}  // namespace

FdmGrid fdm_solve_leland(const LelandParams& p, const FdmConfig& c) {
    p.validate();
    const Grid g = make_grid(c);
    const int n = static_cast<int>(g.x.size());
    const double dt = p.tau_max() / c.n_steps;
    FdmGrid out;
    out.x = g.x;
    out.dx = g.h;
    out.dtau = dt;
    out.n_steps = c.n_steps;
    stability_warnings(out);

    const Stencil L(1.0, -1.0, 0.0, g.h);
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = leland_initial(g.x[j], p);
    v.front() = leland_left_boundary(c.x_min, 0.0, p);
    v.back() = leland_right_boundary(c.x_max, 0.0, p);

    std::map<double, BandedLU> lus;
    std::vector<double> src(n, 0.0);
    for (int m = 0; m < c.n_steps; ++m) {
        const double th = m < c.rannacher_steps ? 1.0 : c.theta;
        if (!lus.count(th)) lus.emplace(th, lu_factor(implicit_matrix(L, n - 2, th, dt)));
        const double tau_next = (m + 1) * dt;
        const double left = leland_left_boundary(c.x_min, tau_next, p);
        const double right = leland_right_boundary(c.x_max, tau_next, p);
        const std::vector<double>* s = nullptr;
        if (p.leland != 0.0) {
            for (int j = 1; j + 1 < n; ++j) src[j] = p.leland * std::abs(L.apply(v, j));
            s = &src;
        }
        const auto inner = lus.at(th).solve(theta_rhs(L, v, left, right, th, dt, s, s));
        std::copy(inner.begin(), inner.end(), v.begin() + 1);
        v.front() = left;
        v.back() = right;
        check_finite(v, m + 1);
    }
    out.values[Unknown::VHat] = std::move(v);
    return out;
}

double fdm_price_leland(const FdmGrid& grid, const LelandParams& p, double S) {
    const double kt = p.kappa() * p.tau_max();
    return std::exp(-kt) * grid.value_at(Unknown::VHat, std::log(S) + kt);
}

FdmGrid fdm_solve_afv(const AfvParams& p, const FdmConfig& c) {
    p.validate();
    const Grid g = make_grid(c);
    const int n = static_cast<int>(g.x.size());
    const double dt = p.maturity / c.n_steps;
    FdmGrid out;
    out.x = g.x;
    out.dx = g.h;
    out.dtau = dt;
    out.n_steps = c.n_steps;
    stability_warnings(out);

    const double half_var = 0.5 * p.sigma * p.sigma;
    const double adv = p.r + p.hazard * p.eta - half_var;
    const Stencil LU(half_var, adv, p.r + p.hazard, g.h);
    const Stencil LB(half_var, adv, p.r + p.hazard - p.recovery * p.hazard, g.h);
    const double k = p.conversion, rho = p.penalty;

    std::vector<double> S(n), U(n), B(n), C(n);
    for (int j = 0; j < n; ++j) {
        S[j] = p.s_int * std::exp(g.x[j]);
        const auto t = afv_terminal(S[j], p);
        U[j] = t.U;
        B[j] = t.B;
        C[j] = t.C;
    }
    U.back() = k * S.back();
    B.back() = 0.0;
    C.back() = k * S.back();

    auto sources = [&](const std::vector<double>& b, bool delta) {
        std::vector<double> s(n);
        for (int j = 0; j < n; ++j) {
            const auto d = default_source_terms(g.x[j], b[j], p);
            s[j] = p.hazard * (delta ? d.delta : d.gamma);
        }
        return s;
    };

    const double eps = 1e-9 * p.maturity;
    std::map<double, std::pair<BandedLU, BandedLU>> lus;
    for (int m = 0; m < c.n_steps; ++m) {
        const double th = m < c.rannacher_steps ? 1.0 : c.theta;
        if (!lus.count(th))
            lus.emplace(th, std::make_pair(lu_factor(implicit_matrix(LU, n - 2, th, dt)),
                                           lu_factor(implicit_matrix(LB, n - 2, th, dt))));
        const auto& [lu_u, lu_b] = lus.at(th);
        const double t_prev = p.maturity - m * dt;
        const double t_next = p.maturity - (m + 1) * dt;
        const AfvValues left = step_afv_boundary({U.front(), B.front(), C.front()}, p, dt, th);
        const ConstraintState state = constraint_state(p, t_next, dt);

        std::vector<double> Bn(n), Cn(n), Un(n);
        Bn.front() = left.B;
        Bn.back() = B.back();
        auto inner = lu_b.solve(theta_rhs(LB, B, left.B, B.back(), th, dt, nullptr, nullptr));
        std::copy(inner.begin(), inner.end(), Bn.begin() + 1);

        const auto gm = sources(B, false), gn = sources(Bn, false);
        Cn.front() = left.C;
        Cn.back() = C.back();
        inner = lu_u.solve(theta_rhs(LU, C, left.C, C.back(), th, dt, &gm, &gn));
        std::copy(inner.begin(), inner.end(), Cn.begin() + 1);
        if (p.enforce_constraints) apply_B_constraints(Bn, Cn, state);

        const auto dm = sources(B, true), dn = sources(Bn, true);
        const auto rhs = theta_rhs(LU, U, left.U, U.back(), th, dt, &dm, &dn);
        auto u = lu_u.solve(rhs);

        const int mi = n - 2;
        std::vector<double> up(mi), uc(mi);
        for (int i = 0; i < mi; ++i) {
            up[i] = state.ustar_put(S[i + 1], k);
            uc[i] = state.ustar_call(S[i + 1], k);
        }
        std::vector<double> prev_put, prev_call;
        bool converged = !p.enforce_constraints;
        for (int it = 0; !converged && it < p.max_newton; ++it) {
            const PenaltyTerms pt = penalty_terms(u, up, uc, rho);
            if (it > 0 && pt.alpha_put == prev_put && pt.alpha_call == prev_call) {
                converged = true;
                break;
            }
            BandedMatrix a = implicit_matrix(LU, mi, th, dt);
            auto r = rhs;
            for (int i = 0; i < mi; ++i) {
                a.at(i, i) += rho * dt * (pt.alpha_put[i] + pt.alpha_call[i]);
                if (pt.alpha_put[i] != 0.0) r[i] += rho * dt * up[i];
                if (pt.alpha_call[i] != 0.0) r[i] += rho * dt * uc[i];
            }
            const auto un = lu_factor(a).solve(r);
            double d = 0.0;
            for (int i = 0; i < mi; ++i) d = std::max(d, std::abs(un[i] - u[i]));
            u = un;
            prev_put = pt.alpha_put;
            prev_call = pt.alpha_call;
            if (d <= p.tolerance) {
                converged = true;
                break;
            }
        }
        if (!converged) throw std::runtime_error("FDM penalty iteration did not converge at step " + std::to_string(m + 1));
        Un.front() = left.U;
        Un.back() = U.back();
        std::copy(u.begin(), u.end(), Un.begin() + 1);

        if (p.enforce_constraints) apply_joint_constraints(Bn, Cn, state, S, k);

        for (const auto& cp : p.coupons) {
            if (cp.time >= p.maturity - eps) continue;
            if (cp.time >= t_next - eps && cp.time < t_prev - eps) {
                for (double& v : Un) v += cp.amount;
                for (double& v : Bn) v += cp.amount;
            }
        }
        check_finite(Un, m + 1);
        U = std::move(Un);
        B = std::move(Bn);
        C = std::move(Cn);
    }
    out.values[Unknown::U] = std::move(U);
    out.values[Unknown::B] = std::move(B);
    out.values[Unknown::C] = std::move(C);
    return out;
}

SolutionSurface p1fem_solve_leland(const LelandParams& params, double x_min, double x_max, int n_elements,
                                   const RunOptions& options, ModelKind kind) {
    auto disc = std::make_shared<const Discretization>(NurbsBasis(make_uniform_open_knots(n_elements, 1)),
                                                       PhysicalMap(x_min, x_max));
    return run_leland(disc, params, options, kind);
}

SolutionSurface p1fem_solve_afv(const AfvParams& params, double x_min, double x_max, int n_elements,
                                const RunOptions& options) {
    auto disc = std::make_shared<const Discretization>(NurbsBasis(make_uniform_open_knots(n_elements, 1)),
                                                       PhysicalMap(x_min, x_max));
    return run_afv(disc, params, options);
}

double misfit_epsilon(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("misfit grids differ in size");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double leland_misfit(const SolutionSurface& iga, const SolutionSurface& p1) {
    const auto& dp = *p1.disc;
    const auto& di = *iga.disc;
    if (dp.basis.degree() != 1) throw std::invalid_argument("reference surface must use degree-1 basis functions");
    if (std::abs(dp.map.x_min - di.map.x_min) > 1e-12 || std::abs(dp.map.x_max - di.map.x_max) > 1e-12)
        throw std::invalid_argument("surfaces use different physical domains");
    const auto& cp = p1.final_slice()[Unknown::VHat];
    const auto& ci = iga.final_slice()[Unknown::VHat];
    std::vector<double> a(cp.size());
    for (std::size_t i = 0; i < cp.size(); ++i) {
        const double xi = std::clamp(di.map.to_parameter(dp.greville_x[i]), di.map.xi_min, di.map.xi_max);
        a[i] = evaluate_expansion(di.basis, ci, xi);
    }
    return misfit_epsilon(a, cp);
}

}  // namespace isofin

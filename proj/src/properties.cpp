#include "isofin/properties.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "isofin/assembly.hpp"
#include "isofin/basis.hpp"
#include "isofin/models.hpp"
#include "isofin/quadrature.hpp"
#include "isofin/stepper.hpp"

namespace isofin {

namespace {

std::vector<NurbsBasis> sample_bases() {
    std::vector<NurbsBasis> out;
    for (int p = 1; p <= 4; ++p) out.emplace_back(make_uniform_open_knots(12, p));
    out.emplace_back(make_refined_open_knots(16, 3, 0.6, 0.8, 3));
    out.emplace_back(KnotVector({0, 0, 0, 0, 0.2, 0.4, 0.6, 0.6, 0.6, 0.8, 1, 1, 1, 1}, 3));
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> w(0.3, 3.0);
    auto kv = make_uniform_open_knots(10, 3);
    std::vector<double> weights(kv.n_basis());
    for (double& v : weights) v = w(gen);
    out.emplace_back(kv, weights);
    return out;
}

PropertyResult make(std::string name, double measured, double tol) {
    return {std::move(name), measured, tol, std::isfinite(measured) && measured <= tol};
}

double partition_of_unity() {
    double err = 0.0;
    for (const auto& b : sample_bases())
        for (int k = 0; k <= 1000; ++k) {
            const auto R = eval_nurbs_all(b, k / 1000.0);
            double s = 0.0;
            for (double v : R) s += v;
            err = std::max(err, std::abs(s - 1.0));
        }
    return err;
}

double quadrature_exactness() {
    double err = 0.0;
    for (int q = 1; q <= 16; ++q) {
        const auto rule = gauss_legendre(q);
        for (int d = 0; d <= 2 * q - 1; ++d) {
            double s = 0.0;
            for (int k = 0; k < q; ++k) s += rule.weights[k] * std::pow(rule.nodes[k], d);
            const double exact = d % 2 == 0 ? 2.0 / (d + 1) : 0.0;
            err = std::max(err, std::abs(s - exact));
        }
    }
    return err;
}

/// Dense matrices from global basis evaluation with a 12-point rule on every span.
struct Dense {
    std::vector<std::vector<double>> M, K, N;
};

Dense dense_assembly(const NurbsBasis& basis, const PhysicalMap& map) {
    const int n = basis.n_basis();
    Dense d{std::vector(n, std::vector(n, 0.0)), std::vector(n, std::vector(n, 0.0)),
            std::vector(n, std::vector(n, 0.0))};
    const auto rule = gauss_legendre(12);
    const auto bp = basis.knots().breakpoints();
    const double jac = map.jacobian();
    for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
        const double h = 0.5 * (bp[s + 1] - bp[s]), c = 0.5 * (bp[s + 1] + bp[s]);
        for (int q = 0; q < rule.order; ++q) {
            const double xi = c + h * rule.nodes[q];
            const auto R = eval_nurbs_all(basis, xi, 0);
            const auto dR = eval_nurbs_all(basis, xi, 1);
            const double w = h * rule.weights[q];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    d.M[i][j] += w * R[i] * R[j] * jac;
                    d.K[i][j] += w * dR[i] * dR[j] / jac;
                    d.N[i][j] += w * R[j] * dR[i];
                }
        }
    }
    return d;
}

struct AssemblyChecks {
    double asymmetry = 0.0;
    double min_pivot = 1.0;
    double row_sum = 0.0;
    double dense_gap = 0.0;
};

AssemblyChecks assembly_checks() {
    AssemblyChecks out;
    const PhysicalMap map(-2.0, 3.0);
    for (const auto& b : sample_bases()) {
        const auto sys = assemble(b, map, gauss_legendre(b.unit_weights() ? b.degree() + 1 : 12));
        const int n = b.n_basis();
        std::vector<std::vector<double>> m(n, std::vector<double>(n));
        for (int i = 0; i < n; ++i) {
            double rs = 0.0;
            for (int j = 0; j < n; ++j) {
                m[i][j] = sys.M_full(i, j);
                out.asymmetry = std::max(out.asymmetry, std::abs(sys.M_full(i, j) - sys.M_full(j, i)));
                rs += sys.K_full(i, j);
            }
            out.row_sum = std::max(out.row_sum, std::abs(rs));
        }
        // Cholesky pivots relative to the diagonal
        for (int k = 0; k < n; ++k) {
            double piv = m[k][k];
            for (int s = 0; s < k; ++s) piv -= m[k][s] * m[k][s];
            out.min_pivot = std::min(out.min_pivot, piv / sys.M_full(k, k));
            if (!(piv > 0.0)) break;
            const double l = std::sqrt(piv);
            m[k][k] = l;
            for (int i = k + 1; i < n; ++i) {
                double v = m[i][k];
                for (int s = 0; s < k; ++s) v -= m[i][s] * m[k][s];
                m[i][k] = v / l;
            }
        }
        if (b.knots().breakpoints().size() - 1 <= 16) {
            const auto d = dense_assembly(b, map);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    out.dense_gap = std::max({out.dense_gap, std::abs(d.M[i][j] - sys.M_full(i, j)),
                                              std::abs(d.K[i][j] - sys.K_full(i, j)),
                                              std::abs(d.N[i][j] - sys.N_full(i, j))});
        }
    }
    return out;
}

double derivative_vs_difference() {
    double err = 0.0;
    const double h = 1e-6;
    for (const auto& b : sample_bases()) {
        const auto bp = b.knots().breakpoints();
        for (std::size_t s = 0; s + 1 < bp.size(); ++s)
            for (double f : {0.25, 0.5, 0.75}) {
                const double xi = bp[s] + f * (bp[s + 1] - bp[s]);
                for (int order = 1; order <= std::min(2, b.degree()); ++order) {
                    const auto exact = eval_nurbs_all(b, xi, order);
                    const auto lo = eval_nurbs_all(b, xi - h, order - 1);
                    const auto hi = eval_nurbs_all(b, xi + h, order - 1);
                    double scale = 0.0;
                    for (double v : exact) scale = std::max(scale, std::abs(v));
                    for (std::size_t i = 0; i < exact.size(); ++i)
                        err = std::max(err, std::abs((hi[i] - lo[i]) / (2 * h) - exact[i]) / std::max(scale, 1.0));
                }
            }
    }
    return err;
}

double transform_round_trip() {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> S(1.0, 400.0), t(0.0, 1.0), V(0.0, 200.0);
    LelandParams lp;
    AfvParams ap = example_convertible();
    double err = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double s = S(gen), tt = t(gen), v = V(gen);
        const auto a = leland_transform(s, tt, v, lp);
        const auto ia = leland_inverse(a.x, a.tau, a.vhat, lp);
        const auto b = afv_transform(s, 5.0 * tt, v, ap);
        const auto ib = afv_inverse(b.x, b.tau, b.vhat, ap);
        err = std::max({err, std::abs(ia.S - s) / s, std::abs(ia.t - tt), std::abs(ia.V - v) / std::max(v, 1.0),
                        std::abs(ib.S - s) / s, std::abs(ib.t - 5.0 * tt), std::abs(ib.V - v) / std::max(v, 1.0)});
    }
    return err;
}

double zero_leland_equivalence() {
    LelandParams p;
    const Discretization d(NurbsBasis(make_uniform_open_knots(32, 3)),
                           PhysicalMap(std::log(p.strike) - 3.0, std::log(p.strike) + 2.0));
    const double dt = p.tau_max() / 20;
    const LelandStepper stepper(d, p, dt, {1.0, 0.5}, SourceProjection::Collocation);
    auto w = leland_initial_slice(d, p, InitialMode::Nodal);
    double err = 0.0;
    double tau = 0.0;
    for (int m = 0; m < 20; ++m) {
        const double th = m < 2 ? 1.0 : 0.5;
        tau += dt;
        const auto a = stepper.step(w, th, tau);
        const auto b = step_linear(d.system, unified_coefficients(p, Unknown::VHat), w,
                                   leland_left_boundary(d.map.x_min, tau, p),
                                   leland_right_boundary(d.map.x_max, tau, p), dt, th);
        double scale = 1.0;
        for (double v : b) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]) / scale);
        w = a;
    }
    return err;
}

double superposition() {
    AfvParams p = example_convertible();
    p.hazard = 0.0;
    p.coupons.clear();
    p.call.reset();
    p.put.reset();
    p.enforce_constraints = false;
    auto d = std::make_shared<const Discretization>(NurbsBasis(make_uniform_open_knots(64, 3)), PhysicalMap(-6, 2));
    RunOptions o;
    o.scheme.n_steps = 50;
    const auto s = run_afv(d, p, o);
    double err = 0.0;
    for (const auto& sl : s.slices)
        for (std::size_t i = 0; i < sl[Unknown::U].size(); ++i)
            err = std::max(err, std::abs(sl[Unknown::U][i] - sl[Unknown::B][i] - sl[Unknown::C][i]));
    return err;
}

double coupon_jump() {
    const AfvParams p = example_convertible();
    AfvParams none = p;
    none.coupons.erase(std::remove_if(none.coupons.begin(), none.coupons.end(),
                                      [](const Coupon& c) { return std::abs(c.time - 4.5) < 1e-12; }),
                       none.coupons.end());
    const Discretization d(NurbsBasis(make_uniform_open_knots(32, 3)), PhysicalMap(-6, 2));
    const double dt = 0.05;
    const AfvStepper with(d, p, dt, {0.5}, SourceProjection::Collocation);
    const AfvStepper without(d, none, dt, {0.5}, SourceProjection::Collocation);
    // level at t = 4.55 stepping to t = 4.5
    TimeSlice prev = afv_initial_slice(d, p, InitialMode::Nodal);
    prev.tau = 0.45;
    bool paid = false;
    const auto a = with.step(prev, 0.5, nullptr, &paid);
    const auto b = without.step(prev, 0.5);
    if (!paid) return INFINITY;
    double err = 0.0;
    for (std::size_t i = 0; i < a[Unknown::U].size(); ++i) {
        err = std::max(err, std::abs(a[Unknown::U][i] - b[Unknown::U][i] - 4.0));
        err = std::max(err, std::abs(a[Unknown::B][i] - b[Unknown::B][i] - 4.0));
        err = std::max(err, std::abs(a[Unknown::C][i] - b[Unknown::C][i]));
    }
    return err;
}

struct ConstraintRun {
    double call_excess = 0.0;  ///< B above the dirty call level
    double floor_gap = 0.0;    ///< kS above B + C, or the dirty put above B + C
    double u_gap = 0.0;        ///< U coefficients outside [U*_put, U*_call]
    int max_newton = 0;
};

ConstraintRun constraint_run() {
    const AfvParams p = example_convertible();
    auto d = std::make_shared<const Discretization>(NurbsBasis(make_uniform_open_knots(128, 3)), PhysicalMap(-6, 2));
    RunOptions o;
    o.scheme.n_steps = 100;
    const auto s = run_afv(d, p, o);
    ConstraintRun out;
    for (int v : s.newton_iterations) out.max_newton = std::max(out.max_newton, v);
    const double dt = s.dt();
    std::vector<double> S;
    for (double x : d->greville_x) S.push_back(p.s_int * std::exp(x));
    for (const auto& sl : s.slices) {
        if (sl.step == 0) continue;
        // constraints bind before the coupon is added
        const bool coupon = std::count(s.coupon_steps.begin(), s.coupon_steps.end(), sl.step) > 0;
        const ConstraintState st = constraint_state(p, p.maturity - sl.tau, dt);
        const double paid = coupon ? p.coupons.front().amount : 0.0;
        const auto& U = sl[Unknown::U];
        const auto& B = sl[Unknown::B];
        const auto& C = sl[Unknown::C];
        for (std::size_t i = 1; i + 1 < U.size(); ++i) {
            const double u = U[i] - paid, b = B[i] - paid;
            out.floor_gap = std::max(out.floor_gap, p.conversion * S[i] - (b + C[i]));
            if (st.call_active()) {
                out.call_excess = std::max(out.call_excess, b - st.call_dirty);
                out.u_gap = std::max(out.u_gap, u - st.ustar_call(S[i], p.conversion));
            }
            if (st.put_active()) out.floor_gap = std::max(out.floor_gap, st.put_dirty - (b + C[i]));
            out.u_gap = std::max(out.u_gap, st.ustar_put(S[i], p.conversion) - u);
        }
    }
    return out;
}

}  // namespace

std::vector<PropertyResult> run_property_suite() {
    std::vector<PropertyResult> r;
    r.push_back(make("partition of unity", partition_of_unity(), 1e-12));
    r.push_back(make("Gauss-Legendre exactness up to degree 2q-1", quadrature_exactness(), 1e-12));
    const auto a = assembly_checks();
    r.push_back(make("mass matrix symmetry", a.asymmetry, 1e-10));
    r.push_back({"mass matrix positive definite (min relative Cholesky pivot)", a.min_pivot, 0.0, a.min_pivot > 0.0});
    r.push_back(make("stiffness row sums", a.row_sum, 1e-10));
    r.push_back(make("banded assembly vs dense assembly", a.dense_gap, 1e-10));
    r.push_back(make("NURBS derivatives vs central differences (relative)", derivative_vs_difference(), 1e-5));
    r.push_back(make("transform round trips", transform_round_trip(), 1e-12));
    r.push_back(make("Le = 0 Leland step vs linear step", zero_leland_equivalence(), 1e-12));
    r.push_back(make("AFV superposition |U-(B+C)| with p = 0", superposition(), 1e-8));
    r.push_back(make("coupon jump exactness", coupon_jump(), 1e-9));
    const auto c = constraint_run();
    r.push_back(make("post-run B above the dirty call (rho = 1e6)", c.call_excess, 1e-6));
    r.push_back(make("post-run B + C below kS or the dirty put (rho = 1e6)", c.floor_gap, 1e-4));
    r.push_back(make("Newton iterations per step", c.max_newton, 10));
    auto gap = make("U outside its penalty bounds (rho = 1e6)", c.u_gap, 1e-4);
    gap.gating = false;
    r.push_back(gap);
    return r;
}

}  // namespace isofin
